/**
 * @file virtual_velocity.hpp
 *
 * Wheel-speed based virtual velocity measurements: the nonholonomic
 * constraint and the kinematic single-track model. Both emit body-frame
 * (v_x, v_y) packets for the EKF.
 */
#pragma once

#include "vdse/ekf3d.hpp"
#include "vdse/sensors.hpp"

namespace vdse {

/// Magic Formula coefficient set. Forces are normalized: F = F_z * MF(slip).
struct MagicFormulaCoeffs {
  double b = 10.0;
  double c = 1.6;
  double d = 1.2;
  double e = 0.97;
};

struct VehicleParams {
  double dist_cog_front = 1.6;   // l_f, m
  double dist_cog_rear = 1.4;    // l_r, m
  double track_front = 1.6;      // b_f, m
  double track_rear = 1.6;       // m
  double mass = 750.0;           // kg
  double yaw_inertia = 1000.0;   // J_z, kg m^2
  double r_dyn_front = 0.30;     // m
  double r_dyn_rear = 0.31;      // m
  double cog_height = 0.0;       // h_cog, m; 0 disables load transfer
  MagicFormulaCoeffs mf_long_front, mf_long_rear;
  MagicFormulaCoeffs mf_lat_front, mf_lat_rear;

  double wheelbase() const { return dist_cog_front + dist_cog_rear; }
  void validate() const;
};

enum class VelocityProvider { kNone, kNonholonomic, kKstm, kUkf };

struct VelocityNoiseConfig {
  double sigma_vx = 0.3;        // m/s, base
  double sigma_vy = 0.5;        // m/s, base (nonholonomic assumption)
  double accel_inflation = 0.05;  // per m/s^2 of planar acceleration
};

/// Wheel speeds times the dynamic tire radius as a nonholonomic constraint:
/// v_x from the (undriven) front wheels, v_y = 0.
MeasurementPacket nonholonomic_velocity(const WheelSpeeds& w,
                                        const VehicleParams& params,
                                        const VelocityNoiseConfig& noise,
                                        const ImuSample& u, double t);

/// Kinematic single-track model: beta_kin = atan(l_r/l * tan(delta_f)),
/// v_x = v cos(beta_kin), v_y = v sin(beta_kin). The absolute speed comes
/// from the front wheels corrected to the axle midpoint.
MeasurementPacket kstm_velocity(const WheelSpeeds& w,
                                const ActuationSample& act,
                                const VehicleParams& params,
                                const VelocityNoiseConfig& noise,
                                const ImuSample& u, double t);

/// Front-axle midpoint speed from the front wheels, corrected by the yaw
/// rate (the wheel-speed rows of the virtual measurement vector).
double front_axle_speed(const WheelSpeeds& w, double steer_front,
                        double omega_z, const VehicleParams& params);

}  // namespace vdse
