#include "vdse/sideslip_ukf.hpp"

#include <Eigen/Cholesky>

namespace vdse {

double magic_formula(double slip, const MagicFormulaCoeffs& mf) {
  const double bx = mf.b * slip;
  return mf.d * std::sin(mf.c * std::atan(bx - mf.e * (bx - std::atan(bx))));
}

void axle_normal_loads(const VehicleParams& params, double accel_x,
                       double& fz_front, double& fz_rear) {
  const double l = params.wheelbase();
  const double static_front = params.mass * kGravity * params.dist_cog_rear / l;
  const double static_rear = params.mass * kGravity * params.dist_cog_front / l;
  const double transfer = params.mass * accel_x * params.cog_height / l;
  fz_front = static_front - transfer;
  fz_rear = static_rear + transfer;
}

SideslipUkf::SideslipUkf(SideslipUkfConfig cfg, VehicleParams params)
    : cfg_(cfg), params_(std::move(params)) {
  params_.validate();
  cov_ = Mat2::Zero();
  cov_(0, 0) = cfg_.init_v_var;
  cov_(1, 1) = cfg_.init_beta_var;
}

void SideslipUkf::reset(const SlipState& s, double t) {
  state_ = s;
  t_ = t;
  cov_ = Mat2::Zero();
  cov_(0, 0) = cfg_.init_v_var;
  cov_(1, 1) = cfg_.init_beta_var;
  holding_ = false;
}

SideslipUkf::SigmaPoints SideslipUkf::draw_sigma_points() const {
  const double n = 2.0;
  const double lambda = cfg_.alpha * cfg_.alpha * (n + cfg_.kappa) - n;
  const double scale = n + lambda;

  Eigen::LLT<Mat2> llt(scale * cov_);
  Mat2 sqrt_p;
  if (llt.info() == Eigen::Success) {
    sqrt_p = llt.matrixL();
  } else {
    // Fall back to the diagonal; the caller flags/repairs P separately.
    sqrt_p = Mat2::Zero();
    sqrt_p(0, 0) = std::sqrt(std::max(scale * cov_(0, 0), 1e-12));
    sqrt_p(1, 1) = std::sqrt(std::max(scale * cov_(1, 1), 1e-12));
  }

  SigmaPoints sp;
  const Vec2 x(state_.v, state_.beta);
  sp.points.col(0) = x;
  sp.points.col(1) = x + sqrt_p.col(0);
  sp.points.col(2) = x + sqrt_p.col(1);
  sp.points.col(3) = x - sqrt_p.col(0);
  sp.points.col(4) = x - sqrt_p.col(1);
  sp.wm0 = lambda / scale;
  sp.wc0 = sp.wm0 + (1.0 - cfg_.alpha * cfg_.alpha + cfg_.beta_w);
  sp.wi = 0.5 / scale;
  return sp;
}

namespace {

Vec2 slip_dynamics(const Vec2& x, const ImuSample& u, const RoadAngles& road,
                   double v_floor) {
  const double v = x(0);
  const double beta = x(1);
  const double ax_eff = u.accel.x() + kGravity * std::sin(road.pitch);
  const double ay_eff = u.accel.y() - kGravity * std::sin(road.roll) *
                                          std::cos(road.pitch);
  const double cb = std::cos(beta), sb = std::sin(beta);
  const double v_div = std::max(v, v_floor);
  Vec2 dx;
  dx(0) = cb * ax_eff + sb * ay_eff;
  dx(1) = -sb * ax_eff / v_div + cb * ay_eff / v_div - u.omega.z();
  return dx;
}

}  // namespace

void SideslipUkf::predict(const ImuSample& u, const RoadAngles& road,
                          double dt) {
  if (!(dt > 0.0 && dt <= 0.02)) throw EstimationError("invalid UKF dt");
  if (state_.v < cfg_.min_speed) {
    holding_ = true;
    cov_ *= cfg_.hold_p_inflation;
    t_ += dt;
    return;
  }
  holding_ = false;

  const SigmaPoints sp = draw_sigma_points();
  Eigen::Matrix<double, 2, 5> propagated;
  const double v_floor = 0.5 * cfg_.min_speed;
  for (int i = 0; i < 5; ++i) {
    const Vec2 x = sp.points.col(i);
    propagated.col(i) = x + dt * slip_dynamics(x, u, road, v_floor);
  }

  Vec2 mean = sp.wm0 * propagated.col(0);
  for (int i = 1; i < 5; ++i) mean += sp.wi * propagated.col(i);

  Mat2 cov = sp.wc0 * (propagated.col(0) - mean) *
             (propagated.col(0) - mean).transpose();
  for (int i = 1; i < 5; ++i) {
    const Vec2 d = propagated.col(i) - mean;
    cov += sp.wi * d * d.transpose();
  }
  cov(0, 0) += cfg_.q_v * dt;
  cov(1, 1) += cfg_.q_beta * dt;

  state_.v = mean(0);
  state_.beta = mean(1);
  cov_ = symmetrized(cov);
  t_ += dt;

  Eigen::LLT<Mat2> llt(cov_);
  if (llt.info() != Eigen::Success) {
    cov_ = Mat2::Zero();
    cov_(0, 0) = cfg_.init_v_var;
    cov_(1, 1) = cfg_.init_beta_var;
    ++pd_resets_;
  }
}

Vec6 SideslipUkf::measurement_model(const SlipState& s,
                                    const UkfInputs& in) const {
  const double delta = in.act.steer_front;
  const double omega_z = in.imu.omega.z();
  const double lf = params_.dist_cog_front;
  const double lr = params_.dist_cog_rear;

  const double v_fa =
      s.v * std::cos(delta - s.beta) + lf * omega_z * std::sin(delta);
  const double vx = s.v * std::cos(s.beta);
  const double vy = s.v * std::sin(s.beta);
  const double vx_div = std::max(vx, cfg_.slip_speed_floor);

  // Single-track slip kinematics per axle.
  const double alpha_f = delta - std::atan((vy + lf * omega_z) / vx_div);
  const double alpha_r = -std::atan((vy - lr * omega_z) / vx_div);

  const double wheel_front =
      0.5 * (in.wheels.fl + in.wheels.fr) * params_.r_dyn_front;
  const double wheel_rear =
      0.5 * (in.wheels.rl + in.wheels.rr) * params_.r_dyn_rear;
  const double v_fa_div = std::max(v_fa, cfg_.slip_speed_floor);
  const double v_ra_div = std::max(vx, cfg_.slip_speed_floor);
  const double sigma_x_f = (wheel_front - v_fa) / v_fa_div;
  const double sigma_x_r = (wheel_rear - vx) / v_ra_div;

  double fz_f, fz_r;
  axle_normal_loads(params_, in.imu.accel.x(), fz_f, fz_r);

  Vec6 h;
  h(0) = v_fa;
  h(1) = v_fa;
  h(2) = fz_f * magic_formula(sigma_x_f, params_.mf_long_front);
  h(3) = fz_r * magic_formula(sigma_x_r, params_.mf_long_rear);
  h(4) = fz_f * magic_formula(alpha_f, params_.mf_lat_front);
  h(5) = fz_r * magic_formula(alpha_r, params_.mf_lat_rear);
  return h;
}

Vec6 SideslipUkf::virtual_measurements(const UkfInputs& in) const {
  const double delta = in.act.steer_front;
  const double cd = std::cos(delta);
  const double omega_z = in.imu.omega.z();
  const double half_track = 0.5 * params_.track_front * cd;
  const double ay = in.imu.accel.y();
  const double m = params_.mass;
  const double jz = params_.yaw_inertia;
  const double l = params_.wheelbase();

  Vec6 z;
  z(0) = in.wheels.fl * params_.r_dyn_front + omega_z * half_track;
  z(1) = in.wheels.fr * params_.r_dyn_front - omega_z * half_track;
  z(2) = (in.act.brake_fl + in.act.brake_fr) / params_.r_dyn_front;
  z(3) = (in.act.brake_rl + in.act.brake_rr + in.act.drive_rear) /
         params_.r_dyn_rear;
  z(4) = (ay * params_.dist_cog_rear * m + in.omega_dot_z * jz) / (l * cd) -
         std::tan(delta) * z(2);
  z(5) = (ay * params_.dist_cog_front * m + in.omega_dot_z * jz) / l;
  return z;
}

Mat6 SideslipUkf::adaptive_noise(const ImuSample& u) const {
  const double excitation = std::hypot(u.accel.x(), u.accel.y());
  const double span = cfg_.excitation_high - cfg_.excitation_low;
  const double t =
      std::clamp((excitation - cfg_.excitation_low) / span, 0.0, 1.0);
  const double sigma_wheel =
      cfg_.sigma_wheel_min + (cfg_.sigma_wheel_max - cfg_.sigma_wheel_min) * t;
  const double sigma_force =
      cfg_.sigma_force_max + (cfg_.sigma_force_min - cfg_.sigma_force_max) * t;

  Mat6 r = Mat6::Zero();
  r(0, 0) = r(1, 1) = sigma_wheel * sigma_wheel;
  for (int i = 2; i < 6; ++i) r(i, i) = sigma_force * sigma_force;
  return r;
}

void SideslipUkf::update(const UkfInputs& in) {
  if (holding_) return;

  const SigmaPoints sp = draw_sigma_points();
  Eigen::Matrix<double, 6, 5> y;
  for (int i = 0; i < 5; ++i) {
    SlipState s{sp.points(0, i), sp.points(1, i)};
    y.col(i) = measurement_model(s, in);
  }

  Vec6 y_mean = sp.wm0 * y.col(0);
  for (int i = 1; i < 5; ++i) y_mean += sp.wi * y.col(i);

  const Mat6 r = adaptive_noise(in.imu);
  Mat6 s_innov = sp.wc0 * (y.col(0) - y_mean) * (y.col(0) - y_mean).transpose();
  Eigen::Matrix<double, 2, 6> cross =
      sp.wc0 * (sp.points.col(0) - Vec2(state_.v, state_.beta)) *
      (y.col(0) - y_mean).transpose();
  for (int i = 1; i < 5; ++i) {
    const Vec6 dy = y.col(i) - y_mean;
    const Vec2 dx = sp.points.col(i) - Vec2(state_.v, state_.beta);
    s_innov += sp.wi * dy * dy.transpose();
    cross += sp.wi * dx * dy.transpose();
  }
  s_innov += r;

  Eigen::LLT<Mat6> llt(s_innov);
  if (llt.info() != Eigen::Success) {
    cov_ = Mat2::Zero();
    cov_(0, 0) = cfg_.init_v_var;
    cov_(1, 1) = cfg_.init_beta_var;
    ++pd_resets_;
    return;
  }

  const Eigen::Matrix<double, 2, 6> gain =
      llt.solve(cross.transpose()).transpose();
  const Vec6 innovation = virtual_measurements(in) - y_mean;
  const Vec2 correction = gain * innovation;
  state_.v += correction(0);
  state_.beta += correction(1);
  cov_ = symmetrized(cov_ - gain * s_innov * gain.transpose());

  Eigen::LLT<Mat2> check(cov_);
  if (check.info() != Eigen::Success || !cov_.allFinite()) {
    cov_ = Mat2::Zero();
    cov_(0, 0) = cfg_.init_v_var;
    cov_(1, 1) = cfg_.init_beta_var;
    ++pd_resets_;
  }
}

std::optional<MeasurementPacket> SideslipUkf::make_packet(double t) const {
  if (holding_) return std::nullopt;
  const double cb = std::cos(state_.beta);
  const double sb = std::sin(state_.beta);

  Eigen::Matrix2d jac;
  jac << cb, -state_.v * sb,
         sb, state_.v * cb;
  Eigen::Matrix2d r = jac * cov_ * jac.transpose();
  r += Eigen::Matrix2d::Identity() * cfg_.packet_sigma_floor *
       cfg_.packet_sigma_floor;

  MeasurementPacket pkt;
  pkt.kind = MeasurementKind::kVelVirtual;
  pkt.value = Eigen::Vector2d(state_.v * cb, state_.v * sb);
  pkt.noise = symmetrized(r);
  pkt.t = t;
  pkt.frame = MeasurementFrame::kBody;
  return pkt;
}

}  // namespace vdse
