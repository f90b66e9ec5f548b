#include "vdse/ekf3d.hpp"

#include <Eigen/Cholesky>

#include <algorithm>

namespace vdse {

Vec9 VehicleState::to_vector() const {
  Vec9 x;
  x << pos, Vec3(angles.roll, angles.pitch, angles.yaw), vel;
  return x;
}

VehicleState VehicleState::from_vector(const Vec9& x) {
  VehicleState s;
  s.pos = x.segment<3>(0);
  s.angles = EulerAngles(x(3), x(4), x(5));
  s.vel = x.segment<3>(6);
  return s;
}

Ekf3d::Ekf3d(Ekf3dConfig cfg) : cfg_(cfg) {}

void Ekf3d::initialize(const GnssFix& fix) {
  VehicleState s;
  s.pos = fix.pos;
  s.angles = EulerAngles(0.0, 0.0, fix.has_heading ? fix.heading : 0.0);
  s.vel = Vec3::Zero();
  initialize(s, fix.t);
}

void Ekf3d::initialize(const VehicleState& state, double t) {
  est_.state = state;
  est_.t = t;
  est_.cov = Mat9::Zero();
  est_.cov.diagonal().segment<3>(0).setConstant(cfg_.init_pos_var);
  est_.cov.diagonal().segment<3>(3).setConstant(cfg_.init_ang_var);
  est_.cov.diagonal().segment<3>(6).setConstant(cfg_.init_vel_var);
  initialized_ = true;
  have_prev_vel_ = false;
  have_prev_ay_ = false;
  v_dot_lpf_.setZero();
  if (planar()) apply_planar_constraints();
}

Vec9 Ekf3d::transition(const VehicleState& s, const ImuSample& u, double dt,
                       EstimatorMode mode) {
  const Mat3 r = body_to_nav(s.angles);
  const Vec3 gravity = gravity_in_body(s.angles);
  const Vec3 v_dot = -u.omega.cross(s.vel) + u.accel + gravity;
  const Vec3 angle_rates = euler_rates(s.angles, u.omega);
  const Vec3 p_dot = r * s.vel;

  Vec9 x = s.to_vector();
  x.segment<3>(0) += dt * p_dot;
  x.segment<3>(3) += dt * angle_rates;
  x.segment<3>(6) += dt * v_dot;
  x(3) = wrap_angle(x(3));
  x(5) = wrap_angle(x(5));
  if (mode == EstimatorMode::kPlanar ||
      mode == EstimatorMode::kPlanarWithBankMap) {
    x(3) = 0.0;
    x(4) = 0.0;
    x(8) = 0.0;
  }
  return x;
}

Mat9 Ekf3d::transition_jacobian(const VehicleState& s, const ImuSample& u,
                                double dt) {
  Mat9 j = Mat9::Zero();
  const Mat3 r = body_to_nav(s.angles);

  // d p_dot / d angles, d p_dot / d v
  j.block<3, 1>(0, 3) = d_body_to_nav_d_roll(s.angles) * s.vel;
  j.block<3, 1>(0, 4) = d_body_to_nav_d_pitch(s.angles) * s.vel;
  j.block<3, 1>(0, 5) = d_body_to_nav_d_yaw(s.angles) * s.vel;
  j.block<3, 3>(0, 6) = r;

  // d angle_dot / d (roll, pitch)
  j.block<3, 1>(3, 3) = d_euler_rate_matrix_d_roll(s.angles) * u.omega;
  j.block<3, 1>(3, 4) = d_euler_rate_matrix_d_pitch(s.angles) * u.omega;

  // d v_dot / d angles (gravity), d v_dot / d v (cross coupling)
  j.block<3, 3>(6, 3) = d_gravity_in_body(s.angles);
  j.block<3, 3>(6, 6) = -skew(u.omega);

  return Mat9::Identity() + dt * j;
}

void Ekf3d::predict(const ImuSample& u, double dt) {
  if (!initialized_) throw EstimationError("EKF not initialized");
  if (!(dt > 0.0 && dt <= 0.02)) throw EstimationError("invalid dt");

  ImuSample input = u;
  if (cfg_.mode == EstimatorMode::kPlanarWithBankMap) {
    // A planar filter cannot represent the gravity component that leaks
    // into a_y on a banked road; remove it using the map roll.
    input.accel.y() -= kGravity * std::sin(map_roll_);
  }

  const Vec3 vel_before = est_.state.vel;

  const Vec9 x_next = transition(est_.state, input, dt, cfg_.mode);
  const Mat9 f = transition_jacobian(est_.state, input, dt);

  Mat9 q = Mat9::Zero();
  q.diagonal().segment<3>(0).setConstant(cfg_.q_pos);
  q.diagonal().segment<3>(3).setConstant(cfg_.q_ang);
  q.diagonal().segment<3>(6).setConstant(cfg_.q_vel);

  est_.state = VehicleState::from_vector(x_next);
  est_.cov = symmetrized(f * est_.cov * f.transpose()) + q * dt;
  est_.t += dt;

  if (!x_next.allFinite()) throw NonFiniteState("EKF state non-finite");
  if (std::abs(est_.state.angles.pitch) >= kGimbalPitchLimit)
    throw GimbalProximity(est_.state.angles.pitch);

  if (planar()) apply_planar_constraints();
  enforce_cov_ceiling();

  // Backward difference of the velocity state, low-passed; this is the
  // v_dot fed to the reference angles instead of the raw accelerometer.
  if (have_prev_vel_) {
    const Vec3 raw = (est_.state.vel - vel_before) / dt;
    const double alpha = dt / (cfg_.v_dot_tau + dt);
    v_dot_lpf_ += alpha * (raw - v_dot_lpf_);
  }
  prev_vel_ = est_.state.vel;
  have_prev_vel_ = true;

  if (have_prev_ay_) lateral_jerk_ = (u.accel.y() - prev_ay_) / dt;
  prev_ay_ = u.accel.y();
  have_prev_ay_ = true;
}

namespace {

Eigen::MatrixXd measurement_matrix(MeasurementKind kind, bool planar) {
  switch (kind) {
    case MeasurementKind::kPosition: {
      const int rows = planar ? 2 : 3;
      Eigen::MatrixXd h = Eigen::MatrixXd::Zero(rows, 9);
      for (int i = 0; i < rows; ++i) h(i, i) = 1.0;
      return h;
    }
    case MeasurementKind::kHeading: {
      Eigen::MatrixXd h = Eigen::MatrixXd::Zero(1, 9);
      h(0, 5) = 1.0;
      return h;
    }
    case MeasurementKind::kRefAngles: {
      Eigen::MatrixXd h = Eigen::MatrixXd::Zero(2, 9);
      h(0, 3) = 1.0;
      h(1, 4) = 1.0;
      return h;
    }
    case MeasurementKind::kVelVirtual: {
      Eigen::MatrixXd h = Eigen::MatrixXd::Zero(2, 9);
      h(0, 6) = 1.0;
      h(1, 7) = 1.0;
      return h;
    }
  }
  throw EstimationError("unknown measurement kind");
}

}  // namespace

void Ekf3d::update(const MeasurementPacket& m) {
  if (!initialized_) throw EstimationError("EKF not initialized");
  if (planar() && m.kind == MeasurementKind::kRefAngles) return;

  Eigen::MatrixXd h = measurement_matrix(m.kind, planar());
  const int rows = static_cast<int>(h.rows());

  Eigen::VectorXd value = m.value.head(rows);
  Eigen::MatrixXd noise = m.noise.topLeftCorner(rows, rows);

  const Vec9 x = est_.state.to_vector();
  Eigen::VectorXd innovation = value - h * x;
  if (m.kind == MeasurementKind::kHeading) {
    innovation(0) = wrap_angle(innovation(0));
  } else if (m.kind == MeasurementKind::kRefAngles) {
    innovation(0) = wrap_angle(innovation(0));
    innovation(1) = wrap_angle(innovation(1));
  }
  if (!innovation.allFinite())
    throw InnovationNonFinite("non-finite innovation");

  const Eigen::MatrixXd pht = est_.cov * h.transpose();
  const Eigen::MatrixXd s_innov = h * pht + noise;
  Eigen::LLT<Eigen::MatrixXd> llt(s_innov);
  if (llt.info() != Eigen::Success)
    throw CovarianceNotPD("innovation covariance not PD");
  const Eigen::MatrixXd gain = llt.solve(pht.transpose()).transpose();

  Vec9 x_post = x + gain * innovation;
  x_post(3) = wrap_angle(x_post(3));
  x_post(5) = wrap_angle(x_post(5));
  est_.state = VehicleState::from_vector(x_post);

  const Mat9 ikh = Mat9::Identity() - gain * h;
  est_.cov = symmetrized(ikh * est_.cov * ikh.transpose() +
                         gain * noise * gain.transpose());

  if (!est_.cov.allFinite()) throw CovarianceNotPD("covariance non-finite");
  if (planar()) apply_planar_constraints();
}

ReferenceAngles Ekf3d::reference_angles(const ImuSample& u,
                                        const Vec3& v_dot_est) const {
  ReferenceAngles out;
  const Vec3& v = est_.state.vel;
  const double theta = est_.state.angles.pitch;
  if (std::abs(theta) > deg2rad(80.0)) return out;

  const double arg_pitch =
      (v_dot_est.x() - u.accel.x() - u.omega.z() * v.y() +
       u.omega.y() * v.z()) /
      kGravity;
  const double arg_roll =
      (-v_dot_est.y() + u.accel.y() - u.omega.z() * v.x() +
       u.omega.x() * v.z()) /
      (kGravity * std::cos(theta));

  bool clamped = std::abs(arg_pitch) > 1.0 || std::abs(arg_roll) > 1.0;
  out.pitch_ref = std::asin(std::clamp(arg_pitch, -1.0, 1.0));
  out.roll_ref = std::asin(std::clamp(arg_roll, -1.0, 1.0));

  const bool excitation_ok = v.x() >= cfg_.ref_min_speed &&
                             std::abs(lateral_jerk_) <= cfg_.ref_jerk_limit;
  out.valid = !clamped && excitation_ok;
  return out;
}

std::optional<MeasurementPacket> Ekf3d::make_reference_packet(
    const ImuSample& u) {
  if (planar()) return std::nullopt;
  const ReferenceAngles ref = reference_angles(u, v_dot_lpf_);
  if (!ref.valid) {
    ref_invalid_cooldown_ = cfg_.ref_hysteresis_steps;
    return std::nullopt;
  }
  double sigma = cfg_.ref_sigma;
  if (ref_invalid_cooldown_ > 0) {
    sigma *= cfg_.ref_sigma_inflation;
    --ref_invalid_cooldown_;
  }
  MeasurementPacket pkt;
  pkt.kind = MeasurementKind::kRefAngles;
  pkt.value = Eigen::Vector2d(ref.roll_ref, ref.pitch_ref);
  pkt.noise = Eigen::Matrix2d::Identity() * sigma * sigma;
  pkt.t = est_.t;
  pkt.frame = MeasurementFrame::kBody;
  return pkt;
}

void Ekf3d::step(const ImuSample& u, double dt,
                 std::vector<MeasurementPacket> packets) {
  predict(u, dt);

  if (auto ref = make_reference_packet(u)) packets.push_back(*ref);

  std::stable_sort(packets.begin(), packets.end(),
                   [](const MeasurementPacket& a, const MeasurementPacket& b) {
                     return a.t < b.t;
                   });
  for (const auto& pkt : packets) update(pkt);
}

void Ekf3d::set_map_angles(double roll_map, double pitch_map) {
  map_roll_ = roll_map;
  map_pitch_ = pitch_map;
}

void Ekf3d::apply_planar_constraints() {
  est_.state.angles.roll = 0.0;
  est_.state.angles.pitch = 0.0;
  est_.state.vel.z() = 0.0;
  est_.state.pos.z() = cfg_.planar_z;
  constexpr int pinned[] = {2, 3, 4, 8};  // z, roll, pitch, v_z
  for (int i : pinned) {
    est_.cov.row(i).setZero();
    est_.cov.col(i).setZero();
    est_.cov(i, i) = 1e-12;
  }
}

void Ekf3d::enforce_cov_ceiling() {
  for (int i = 0; i < 9; ++i) {
    const double d = est_.cov(i, i);
    if (d > cfg_.cov_diag_ceiling) {
      const double scale = std::sqrt(cfg_.cov_diag_ceiling / d);
      est_.cov.row(i) *= scale;
      est_.cov.col(i) *= scale;
    }
  }
}

}  // namespace vdse
