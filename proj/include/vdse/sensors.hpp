/**
 * @file sensors.hpp
 *
 * Sensor abstraction layer: uniform timestamped records, validity handling,
 * FIR filtering, multi-IMU fusion and the bias / lever-arm correction that
 * refers every inertial measurement to the COG.
 */
#pragma once

#include "vdse/types.hpp"

#include <deque>
#include <vector>

namespace vdse {

struct ImuSample {
  double t = 0.0;       // s
  Vec3 omega = Vec3::Zero();  // rad/s, body
  Vec3 accel = Vec3::Zero();  // m/s^2, specific force, body
  int source_id = 0;
  bool valid = true;
};

enum class RtkStatus { kRtkFixed, kRtkFloat, kStandalone, kNone };

struct GnssFix {
  double t = 0.0;
  Vec3 pos = Vec3::Zero();     // nav frame, m; meaningless when kNone
  bool has_heading = false;
  double heading = 0.0;        // rad
  Vec3 sigma = Vec3::Zero();   // reported std-dev per axis, m
  RtkStatus rtk_status = RtkStatus::kNone;
  int source_id = 0;

  bool has_position() const { return rtk_status != RtkStatus::kNone; }
};

struct WheelSpeeds {
  double t = 0.0;
  double fl = 0.0, fr = 0.0, rl = 0.0, rr = 0.0;  // rad/s
};

struct ActuationSample {
  double t = 0.0;
  double steer_front = 0.0;  // rad, at the front axle
  // Signed wheel torques, N*m: brake entries are <= 0 while braking.
  double brake_fl = 0.0, brake_fr = 0.0, brake_rl = 0.0, brake_rr = 0.0;
  double drive_rear = 0.0;   // N*m at the rear axle
};

/// Per-IMU mounting: lever arm from the COG to the sensor, and the biases
/// identified in stationary tests.
struct ImuMount {
  Vec3 lever_arm = Vec3::Zero();  // m, COG -> sensor
  Vec3 gyro_bias = Vec3::Zero();  // rad/s
  Vec3 accel_bias = Vec3::Zero(); // m/s^2
};

struct MountConfig {
  std::vector<ImuMount> imus;
};

/// Weighted sum of the window with the DC gain forced to exactly 1.
/// Taps must already be normalized within 1e-9; window and taps must have
/// equal length (LengthMismatch otherwise).
Vec3 fir_filter(const std::vector<Vec3>& window,
                const std::vector<double>& taps);

/// Arithmetic mean over the valid samples of one tick. AllInvalid when none.
ImuSample fuse_imus(const std::vector<ImuSample>& samples);

/// Rigid-body correction of the accelerometer to the COG:
/// a_cog = a_sensor - omega_dot x r - omega x (omega x r).
ImuSample lever_arm_correct(const ImuSample& s, const Vec3& lever_arm,
                            const Vec3& omega_dot);

struct ImuBias {
  Vec3 gyro = Vec3::Zero();
  Vec3 accel = Vec3::Zero();
};

/// Stationary bias identification over a window of at least 2 s:
/// gyro bias = mean(omega), accel bias = mean(a) - expected gravity reaction.
ImuBias estimate_stationary_bias(const std::vector<ImuSample>& window,
                                 const Vec3& expected_gravity_reaction);

/// Streaming conditioner for one estimator run: per-source bias and
/// lever-arm correction, multi-IMU averaging, FIR smoothing and the
/// IMU-loss hold policy (hold last fused value for at most 3 ticks, then
/// flag loss so the filter can halt prediction).
class ImuConditioner {
 public:
  ImuConditioner(MountConfig mounts, std::vector<double> fir_taps,
                 double tick_dt);

  struct Output {
    ImuSample fused;      // bias/lever-arm corrected, averaged, FIR-filtered
    Vec3 omega_dot = Vec3::Zero();  // smoothed derivative of the gyro signal
    bool imu_loss = false;
    bool held = false;
  };

  /// Consume the (possibly empty) set of per-source samples of one tick.
  Output step(const std::vector<ImuSample>& tick_samples, double t);

  int dropped_out_of_order() const { return dropped_out_of_order_; }

 private:
  MountConfig mounts_;
  std::vector<double> taps_;
  double dt_;
  std::deque<Vec3> omega_window_;
  std::deque<Vec3> accel_window_;
  std::deque<Vec3> omega_dot_window_;
  Vec3 prev_omega_ = Vec3::Zero();
  Vec3 prev_prev_omega_ = Vec3::Zero();
  int filled_ = 0;
  ImuSample last_fused_;
  Vec3 last_omega_dot_ = Vec3::Zero();
  int hold_count_ = 0;
  bool have_last_ = false;
  double last_t_ = -1.0;
  int dropped_out_of_order_ = 0;
};

}  // namespace vdse
