/**
 * @file pipeline.hpp
 *
 * Estimator pipeline: sensor conditioning, EKF prediction at the IMU rate,
 * virtual velocity providers (nonholonomic / kSTM / UKF), ACOR-wrapped GNSS
 * updates and reference-angle generation, producing the estimate trace.
 *
 * One pipeline instance is single-threaded; independent instances (e.g.
 * sweep workers) may run concurrently.
 */
#pragma once

#include "vdse/acor.hpp"
#include "vdse/csv.hpp"
#include "vdse/sideslip_ukf.hpp"
#include "vdse/track.hpp"
#include "vdse/virtual_velocity.hpp"

#include <optional>

namespace vdse {

struct TimingStats {
  double mean_us = 0.0;
  double max_us = 0.0;
  long count = 0;

  void add(double us) {
    mean_us += (us - mean_us) / static_cast<double>(++count);
    max_us = std::max(max_us, us);
  }
};

struct PipelineConfig {
  Ekf3dConfig ekf;
  SideslipUkfConfig ukf;
  AcorConfig acor;
  VelocityProvider provider = VelocityProvider::kUkf;
  VelocityNoiseConfig vel_noise;
  std::vector<double> fir_taps = {0.2, 0.2, 0.2, 0.2, 0.2};
  double dt = 0.008;
  double gnss_gap_timeout = 0.3;        // s without a fix counts as dropout
  double heading_sigma = deg2rad(0.5);  // measurement noise of GNSS heading
  double map_angle_sigma = deg2rad(0.3);
  bool check_pd = false;  // verify covariance PD after every step
};

struct PipelineResult {
  std::vector<TraceRecord> trace;
  std::vector<GateEvent> gate_events;
  double max_step_jump = 0.0;
  int ukf_resets = 0;
  int imu_loss_ticks = 0;
  int pd_failures = 0;
  TimingStats ekf_predict, ekf_update, ukf_step;
};

class EstimatorPipeline {
 public:
  EstimatorPipeline(PipelineConfig cfg, VehicleParams params,
                    MountConfig mounts,
                    std::optional<TrackModel> track = std::nullopt);

  /// Replay the streams through the estimator. Deterministic.
  PipelineResult run(const SensorStreams& streams);

 private:
  PipelineConfig cfg_;
  VehicleParams params_;
  MountConfig mounts_;
  std::optional<TrackModel> track_;
};

PipelineConfig pipeline_config_from(const Config& cfg);

EstimatorMode parse_estimator_mode(const std::string& name);
VelocityProvider parse_velocity_provider(const std::string& name);
std::string to_string(EstimatorMode mode);
std::string to_string(VelocityProvider p);

}  // namespace vdse
