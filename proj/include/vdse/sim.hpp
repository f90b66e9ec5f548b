/**
 * @file sim.hpp
 *
 * Deterministic scenario simulator: synthetic banked tracks, ground-truth
 * trajectories from a dynamic single-track model with Magic Formula tires
 * on a locally tilted plane, and multi-rate sensor synthesis with noise,
 * biases and scripted GNSS degradation.
 *
 * Ground truth is made self-consistent with the estimator's Euler-forward
 * discretization at the IMU tick: the synthesized gyro/accelerometer are
 * the exact discrete rates between tick states, so a noiseless replay
 * closes on the ground-truth trajectory up to rounding.
 */
#pragma once

#include "vdse/config.hpp"
#include "vdse/ekf3d.hpp"
#include "vdse/sideslip_ukf.hpp"
#include "vdse/track.hpp"
#include "vdse/virtual_velocity.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace vdse {

struct OvalSpec {
  double bank_max = 0.0;      // rad
  double straight_len = 500.0;  // m
  double turn_radius = 300.0;   // m
  double width = 15.0;          // m
  double ramp_fraction = 0.35;  // of each arc spent blending the bank in/out
  double sample_ds = 0.5;       // m
};

/// Closed stadium oval, clockwise (right-hand turns), positive bank in the
/// turns blended in with a cosine ramp. Throws InvalidGeometry.
TrackModel build_oval(const OvalSpec& spec);
TrackModel build_oval(double bank_max, double straight_len,
                      double turn_radius, double width);

/// Piecewise-linear periodic speed profile over arclength.
struct SpeedProfile {
  std::vector<double> knot_s;
  std::vector<double> knot_v;
  double at(double s, double track_length) const;
};

struct TimeWindow {
  double t0 = 0.0, t1 = 0.0;
};

struct SigmaWindow {
  double t0 = 0.0, t1 = 0.0;
  double sigma = 1.0;  // m
};

struct NoiseConfig {
  double gnss_sigma = 0.02;              // m
  double gnss_heading_sigma = deg2rad(0.3);
  double imu_accel_sigma = 0.05;         // m/s^2 per sample
  double imu_gyro_sigma = 0.002;         // rad/s per sample
  double wheel_sigma = 0.2;              // rad/s
  std::vector<Vec3> accel_bias_extra;    // per IMU source, uncorrected
  std::vector<Vec3> gyro_bias_extra;
  std::vector<TimeWindow> dropout_windows;   // no GNSS records inside
  std::vector<SigmaWindow> sigma_schedule;   // degraded-sigma periods
  double dropout_drift_accel = 0.0;  // m/s^2 body-y drift injected in windows
  std::uint64_t seed = 1;
};

struct GroundTruthSample {
  double t = 0.0;
  Vec3 pos = Vec3::Zero();   // nav
  EulerAngles angles;
  Vec3 vel = Vec3::Zero();   // body
  double beta = 0.0;
  Vec3 accel = Vec3::Zero();  // synthesized specific force at the COG
  Vec3 omega = Vec3::Zero();  // synthesized body rates
  WheelSpeeds wheels;
  ActuationSample act;
};

struct GroundTruth {
  std::vector<GroundTruthSample> samples;  // at the IMU tick rate
  double dt = 0.008;
};

struct SimOptions {
  double dt_imu = 0.008;   // s, tick of the consistency pass
  double dt_fine = 0.001;  // s, integration step of the plant
  double duration = 60.0;  // s
  double mu_budget = 1.2;  // feasibility margin of the speed profile
  double speed_gain = 0.8;      // 1/s, longitudinal P control
  double heading_gain = 1.2;    // steering feedback on heading error
  double lateral_gain = 2.0;    // 1/s, Stanley-style cross-track feedback
  double brake_bias_front = 0.55;
};

/// Integrate the single-track plant along the track while tracking the
/// speed profile. Throws InfeasibleProfile when the profile exceeds the
/// lateral budget anywhere on the track.
GroundTruth simulate_lap(const TrackModel& track, const SpeedProfile& profile,
                         const VehicleParams& params, const SimOptions& opt);

struct SensorStreams {
  std::vector<ImuSample> imu;         // all sources, 125 Hz
  std::vector<GnssFix> gnss;          // receiver 0 at 20 Hz, 1 at 5 Hz
  std::vector<WheelSpeeds> wheels;    // 100 Hz
  std::vector<ActuationSample> actuation;  // 100 Hz
};

/// Sample the ground truth into sensor streams at the standard rates,
/// applying noise, mount offsets and the scripted GNSS degradation.
/// Byte-identical output for identical seeds.
SensorStreams synthesize_sensors(const GroundTruth& gt,
                                 const NoiseConfig& noise,
                                 const MountConfig& mounts);

struct Scenario {
  std::string name;
  OvalSpec oval;
  SpeedProfile profile;
  NoiseConfig noise;
  SimOptions sim;
};

/// Parse a scenario definition file (track geometry, speed profile knots,
/// noise model, seed).
Scenario load_scenario(const Config& cfg);

/// Ground-truth road angles the way the evaluation defines them: connect
/// both track bounds at the vehicle's arclength and read the bank off the
/// connecting segment, resolved along the vehicle heading.
RoadAngles road_angles_from_bounds(const TrackModel& track, double s,
                                   double yaw);

}  // namespace vdse
