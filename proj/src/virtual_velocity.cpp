#include "vdse/virtual_velocity.hpp"

namespace vdse {

void VehicleParams::validate() const {
  if (dist_cog_front <= 0.0 || dist_cog_rear <= 0.0 || track_front <= 0.0 ||
      track_rear <= 0.0 || r_dyn_front <= 0.0 || r_dyn_rear <= 0.0 ||
      mass <= 0.0 || yaw_inertia <= 0.0)
    throw ConfigError("vehicle geometry/mass must be positive");
  for (const auto* mf :
       {&mf_long_front, &mf_long_rear, &mf_lat_front, &mf_lat_rear}) {
    if (!(mf->d > 0.0 && mf->d <= 3.0))
      throw ConfigError("Magic Formula D out of (0, 3]");
    if (!(mf->c >= 1.0 && mf->c <= 3.0))
      throw ConfigError("Magic Formula C out of [1, 3]");
    if (!(mf->b > 0.0)) throw ConfigError("Magic Formula B must be > 0");
  }
}

namespace {

Eigen::Matrix2d velocity_noise(const VelocityNoiseConfig& noise,
                               const ImuSample& u) {
  // Wheel-based speeds degrade under load; inflate linearly with the
  // planar acceleration magnitude.
  const double excitation =
      std::hypot(u.accel.x(), u.accel.y()) * noise.accel_inflation;
  const double sx = noise.sigma_vx * (1.0 + excitation);
  const double sy = noise.sigma_vy * (1.0 + excitation);
  Eigen::Matrix2d r = Eigen::Matrix2d::Zero();
  r(0, 0) = sx * sx;
  r(1, 1) = sy * sy;
  return r;
}

MeasurementPacket make_packet(double vx, double vy,
                              const Eigen::Matrix2d& noise, double t) {
  MeasurementPacket pkt;
  pkt.kind = MeasurementKind::kVelVirtual;
  pkt.value = Eigen::Vector2d(vx, vy);
  pkt.noise = noise;
  pkt.t = t;
  pkt.frame = MeasurementFrame::kBody;
  return pkt;
}

}  // namespace

double front_axle_speed(const WheelSpeeds& w, double steer_front,
                        double omega_z, const VehicleParams& params) {
  const double half_track = 0.5 * params.track_front * std::cos(steer_front);
  const double v_left = w.fl * params.r_dyn_front + omega_z * half_track;
  const double v_right = w.fr * params.r_dyn_front - omega_z * half_track;
  return 0.5 * (v_left + v_right);
}

MeasurementPacket nonholonomic_velocity(const WheelSpeeds& w,
                                        const VehicleParams& params,
                                        const VelocityNoiseConfig& noise,
                                        const ImuSample& u, double t) {
  const double vx = 0.5 * (w.fl + w.fr) * params.r_dyn_front;
  return make_packet(vx, 0.0, velocity_noise(noise, u), t);
}

MeasurementPacket kstm_velocity(const WheelSpeeds& w,
                                const ActuationSample& act,
                                const VehicleParams& params,
                                const VelocityNoiseConfig& noise,
                                const ImuSample& u, double t) {
  const double beta_kin =
      std::atan(params.dist_cog_rear / params.wheelbase() *
                std::tan(act.steer_front));
  const double v =
      front_axle_speed(w, act.steer_front, u.omega.z(), params);
  return make_packet(v * std::cos(beta_kin), v * std::sin(beta_kin),
                     velocity_noise(noise, u), t);
}

}  // namespace vdse
