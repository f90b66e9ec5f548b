/**
 * @file ekf3d.hpp
 *
 * Point-mass EKF over (position, orientation, body velocity).
 *
 * Prediction is an Euler-forward step of
 *   v_dot     = -omega x v + a + g*(sin th, -sin ph cos th, -cos ph cos th)
 *   angle_dot = T(ph, th) * omega
 *   p_dot     = R_body->nav * v
 * with the accelerometer/gyro vector as input. Corrections are standard
 * EKF updates for position, heading, reference road angles and virtual
 * body-velocity measurements. A planar mode (roll = pitch = 0, z dropped)
 * doubles as the 2D baseline, optionally with a bank-map correction of the
 * lateral acceleration.
 */
#pragma once

#include "vdse/core_math.hpp"
#include "vdse/sensors.hpp"

#include <optional>
#include <vector>

namespace vdse {

struct VehicleState {
  Vec3 pos = Vec3::Zero();      // nav frame, m
  EulerAngles angles;           // rad
  Vec3 vel = Vec3::Zero();      // body frame, m/s

  Vec9 to_vector() const;
  static VehicleState from_vector(const Vec9& x);
};

struct EkfEstimate {
  VehicleState state;
  Mat9 cov = Mat9::Identity();
  double t = 0.0;
};

enum class MeasurementKind { kPosition, kHeading, kRefAngles, kVelVirtual };
enum class MeasurementFrame { kNav, kBody };

struct MeasurementPacket {
  MeasurementKind kind = MeasurementKind::kPosition;
  Eigen::VectorXd value;
  Eigen::MatrixXd noise;  // R, positive-definite
  double t = 0.0;
  MeasurementFrame frame = MeasurementFrame::kNav;
};

enum class EstimatorMode {
  kFull3d,
  kPlanar,
  kPlanarWithBankMap,
  kThreedWithAngleMap,
};

struct Ekf3dConfig {
  EstimatorMode mode = EstimatorMode::kFull3d;
  double q_pos = 1e-6;         // m^2/s, position random walk floor
  double q_ang = 5e-6;         // rad^2/s
  double q_vel = 0.05;         // (m/s)^2/s
  double init_pos_var = 10.0;              // m^2
  double init_ang_var = deg2rad(10.0) * deg2rad(10.0);
  double init_vel_var = 25.0;              // (m/s)^2
  double cov_diag_ceiling = 1e6;
  // Reference-angle generation (Eqs. of the kinematic inversion).
  double ref_sigma = deg2rad(0.5);
  double ref_sigma_inflation = 10.0;
  int ref_hysteresis_steps = 5;
  double ref_min_speed = 5.0;      // m/s
  double ref_jerk_limit = 20.0;    // m/s^3 on the lateral axis
  double v_dot_tau = 0.05;         // s, low-pass on the v_dot estimate
  double planar_z = 0.0;
};

struct ReferenceAngles {
  double roll_ref = 0.0;
  double pitch_ref = 0.0;
  bool valid = false;
};

class Ekf3d {
 public:
  explicit Ekf3d(Ekf3dConfig cfg);

  bool initialized() const { return initialized_; }
  const EkfEstimate& estimate() const { return est_; }
  const Ekf3dConfig& config() const { return cfg_; }

  /// State from the first RTK-fixed fix (position + heading), v = 0,
  /// large diagonal covariance.
  void initialize(const GnssFix& fix);
  void initialize(const VehicleState& state, double t);

  /// One Euler-forward step with bias/lever-arm corrected IMU input.
  /// For the bank-map mode the caller provides the map roll at the current
  /// position via set_map_angles() beforehand.
  void predict(const ImuSample& u, double dt);

  /// EKF correction for one packet. Yaw innovations are wrapped; the
  /// covariance is kept symmetric (Joseph form).
  void update(const MeasurementPacket& m);

  /// Kinematic inversion of the roll/pitch from the point-mass model.
  /// Validity goes false when the asin argument saturates, below the
  /// excitation floor, or while the lateral jerk gate is tripped.
  ReferenceAngles reference_angles(const ImuSample& u,
                                   const Vec3& v_dot_est) const;

  /// One predict at IMU rate followed by all due updates in timestamp
  /// order; the reference-angle pseudo-measurement is generated
  /// internally when valid.
  void step(const ImuSample& u, double dt,
            std::vector<MeasurementPacket> packets);

  /// Reference-angle packet for the current state, or nullopt while the
  /// validity gate is tripped. Applies the noise-inflation hysteresis.
  std::optional<MeasurementPacket> make_reference_packet(const ImuSample& u);

  void set_map_angles(double roll_map, double pitch_map);

  /// v_dot estimate fed to the reference angles (backward difference of
  /// the velocity state, first-order low-passed).
  const Vec3& v_dot_estimate() const { return v_dot_lpf_; }

  /// Transition Jacobian of the discrete Euler step, for verification.
  static Mat9 transition_jacobian(const VehicleState& s, const ImuSample& u,
                                  double dt);
  static Vec9 transition(const VehicleState& s, const ImuSample& u, double dt,
                         EstimatorMode mode = EstimatorMode::kFull3d);

 private:
  void apply_planar_constraints();
  void enforce_cov_ceiling();
  bool planar() const {
    return cfg_.mode == EstimatorMode::kPlanar ||
           cfg_.mode == EstimatorMode::kPlanarWithBankMap;
  }

  Ekf3dConfig cfg_;
  EkfEstimate est_;
  bool initialized_ = false;
  Vec3 prev_vel_ = Vec3::Zero();
  Vec3 v_dot_lpf_ = Vec3::Zero();
  bool have_prev_vel_ = false;
  double prev_ay_ = 0.0;
  bool have_prev_ay_ = false;
  double lateral_jerk_ = 0.0;
  int ref_invalid_cooldown_ = 0;
  double map_roll_ = 0.0;
  double map_pitch_ = 0.0;
};

}  // namespace vdse
