/**
 * @file sideslip_ukf.hpp
 *
 * UKF side-slip estimator with a single-track Magic Formula measurement
 * model. State is (absolute COG speed v, side slip angle beta); prediction
 * follows the point-mass kinematics on a banked/inclined road, the
 * correction blends front-axle wheel speeds against virtual tire-force
 * measurements through an excitation-adaptive covariance. Emits body-frame
 * (v_x, v_y) packets for the EKF.
 */
#pragma once

#include "vdse/ekf3d.hpp"
#include "vdse/virtual_velocity.hpp"

#include <optional>

namespace vdse {

/// Pacejka Magic Formula, normalized: D sin(C atan(Bx - E(Bx - atan(Bx)))).
double magic_formula(double slip, const MagicFormulaCoeffs& mf);

struct SlipState {
  double v = 0.0;     // m/s, absolute speed at the COG
  double beta = 0.0;  // rad
};

struct RoadAngles {
  double roll = 0.0;
  double pitch = 0.0;
};

struct AxleForces {
  double fx_front = 0.0, fx_rear = 0.0;  // N
  double fy_front = 0.0, fy_rear = 0.0;  // N
  double fz_front = 0.0, fz_rear = 0.0;  // N
};

/// Static axle load split, optionally with the longitudinal transfer term
/// m*a_x*h_cog/l when a COG height is configured.
void axle_normal_loads(const VehicleParams& params, double accel_x,
                       double& fz_front, double& fz_rear);

struct SideslipUkfConfig {
  double alpha = 0.5;   // sigma point spread
  double beta_w = 2.0;  // prior distribution weight
  double kappa = 0.0;
  double q_v = 0.5;       // (m/s)^2/s
  double q_beta = 5e-4;   // rad^2/s
  double min_speed = 5.0;  // m/s, below this the filter holds
  double hold_p_inflation = 1.02;  // P *= this per held step
  double init_v_var = 4.0;
  double init_beta_var = deg2rad(5.0) * deg2rad(5.0);
  // Adaptive measurement covariance endpoints (std-devs).
  double excitation_low = 1.0;    // m/s^2
  double excitation_high = 8.0;   // m/s^2
  double sigma_wheel_min = 0.15;  // m/s
  double sigma_wheel_max = 2.0;   // m/s
  double sigma_force_min = 400.0;   // N
  double sigma_force_max = 6000.0;  // N
  // Emitted packet noise floor.
  double packet_sigma_floor = 0.05;  // m/s
  double slip_speed_floor = 5.0;     // m/s divisor floor in slip ratios
};

/// Inputs the measurement path needs besides the state.
struct UkfInputs {
  ImuSample imu;           // fused, COG-referred
  WheelSpeeds wheels;
  ActuationSample act;
  double omega_dot_z = 0.0;  // rad/s^2
  RoadAngles road;           // one-tick-delayed EKF posterior
};

class SideslipUkf {
 public:
  SideslipUkf(SideslipUkfConfig cfg, VehicleParams params);

  const SlipState& state() const { return state_; }
  const Mat2& cov() const { return cov_; }
  bool holding() const { return holding_; }
  int pd_resets() const { return pd_resets_; }

  void reset(const SlipState& s, double t);

  /// Sigma-point propagation through
  ///   v_dot    = cos(b)(a_x + g sin th) + sin(b)(a_y - g sin ph cos th)
  ///   beta_dot = -sin(b)(a_x + g sin th)/v
  ///              + cos(b)(a_y - g sin ph cos th)/v - w_z
  /// Below min_speed the state is held and P inflated.
  void predict(const ImuSample& u, const RoadAngles& road, double dt);

  /// Unscented correction with the 6-row virtual measurement vector.
  /// A failed covariance factorization resets P to the prior (flagged).
  void update(const UkfInputs& in);

  /// Emitted virtual velocity (v cos b, v sin b) or nullopt while holding.
  std::optional<MeasurementPacket> make_packet(double t) const;

  /// Measurement model h(x, u): two front-axle speeds and four MF axle
  /// forces.
  Vec6 measurement_model(const SlipState& s, const UkfInputs& in) const;

  /// Virtual measurements g(u): wheel-speed rows, torque-derived
  /// longitudinal forces, inertially derived lateral forces.
  Vec6 virtual_measurements(const UkfInputs& in) const;

  /// Excitation-adaptive measurement covariance (diagonal).
  Mat6 adaptive_noise(const ImuSample& u) const;

  const SideslipUkfConfig& config() const { return cfg_; }

 private:
  struct SigmaPoints {
    Eigen::Matrix<double, 2, 5> points;
    double wm0, wc0, wi;
  };
  SigmaPoints draw_sigma_points() const;

  SideslipUkfConfig cfg_;
  VehicleParams params_;
  SlipState state_;
  Mat2 cov_ = Mat2::Identity();
  double t_ = 0.0;
  bool holding_ = false;
  int pd_resets_ = 0;
};

}  // namespace vdse
