#include "vdse/core_math.hpp"

#include <Eigen/Eigenvalues>

namespace vdse {

Mat3 skew(const Vec3& v) {
  Mat3 s;
  s << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
      -v.y(), v.x(), 0.0;
  return s;
}

Mat3 body_to_nav(const EulerAngles& a) {
  const double cr = std::cos(a.roll), sr = std::sin(a.roll);
  const double cp = std::cos(a.pitch), sp = std::sin(a.pitch);
  const double cy = std::cos(a.yaw), sy = std::sin(a.yaw);
  Mat3 r;
  r << cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr,
       sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr,
       -sp,     cp * sr,               cp * cr;
  return r;
}

Mat3 euler_rate_matrix(const EulerAngles& a) {
  if (std::abs(a.pitch) >= kGimbalPitchLimit) throw GimbalProximity(a.pitch);
  const double cr = std::cos(a.roll), sr = std::sin(a.roll);
  const double tp = std::tan(a.pitch);
  const double secp = 1.0 / std::cos(a.pitch);
  Mat3 t;
  t << 1.0, sr * tp, cr * tp,
       0.0, cr,      -sr,
       0.0, sr * secp, cr * secp;
  return t;
}

Vec3 euler_rates(const EulerAngles& a, const Vec3& omega_body) {
  return euler_rate_matrix(a) * omega_body;
}

Vec3 gravity_in_body(const EulerAngles& a, double g) {
  const double cr = std::cos(a.roll), sr = std::sin(a.roll);
  const double cp = std::cos(a.pitch), sp = std::sin(a.pitch);
  return g * Vec3(sp, -sr * cp, -cr * cp);
}

Mat3 d_body_to_nav_d_roll(const EulerAngles& a) {
  const double cr = std::cos(a.roll), sr = std::sin(a.roll);
  const double cp = std::cos(a.pitch), sp = std::sin(a.pitch);
  const double cy = std::cos(a.yaw), sy = std::sin(a.yaw);
  Mat3 d;
  d << 0.0, cy * sp * cr + sy * sr, -cy * sp * sr + sy * cr,
       0.0, sy * sp * cr - cy * sr, -sy * sp * sr - cy * cr,
       0.0, cp * cr,               -cp * sr;
  return d;
}

Mat3 d_body_to_nav_d_pitch(const EulerAngles& a) {
  const double cr = std::cos(a.roll), sr = std::sin(a.roll);
  const double cp = std::cos(a.pitch), sp = std::sin(a.pitch);
  const double cy = std::cos(a.yaw), sy = std::sin(a.yaw);
  Mat3 d;
  d << -cy * sp, cy * cp * sr, cy * cp * cr,
       -sy * sp, sy * cp * sr, sy * cp * cr,
       -cp,      -sp * sr,     -sp * cr;
  return d;
}

Mat3 d_body_to_nav_d_yaw(const EulerAngles& a) {
  const double cr = std::cos(a.roll), sr = std::sin(a.roll);
  const double cp = std::cos(a.pitch), sp = std::sin(a.pitch);
  const double cy = std::cos(a.yaw), sy = std::sin(a.yaw);
  Mat3 d;
  d << -sy * cp, -sy * sp * sr - cy * cr, -sy * sp * cr + cy * sr,
       cy * cp,  cy * sp * sr - sy * cr,  cy * sp * cr + sy * sr,
       0.0,      0.0,                     0.0;
  return d;
}

Mat3 d_euler_rate_matrix_d_roll(const EulerAngles& a) {
  const double cr = std::cos(a.roll), sr = std::sin(a.roll);
  const double tp = std::tan(a.pitch);
  const double secp = 1.0 / std::cos(a.pitch);
  Mat3 d;
  d << 0.0, cr * tp, -sr * tp,
       0.0, -sr,     -cr,
       0.0, cr * secp, -sr * secp;
  return d;
}

Mat3 d_euler_rate_matrix_d_pitch(const EulerAngles& a) {
  const double cr = std::cos(a.roll), sr = std::sin(a.roll);
  const double secp = 1.0 / std::cos(a.pitch);
  const double sec2 = secp * secp;
  const double tp = std::tan(a.pitch);
  Mat3 d;
  d << 0.0, sr * sec2, cr * sec2,
       0.0, 0.0,       0.0,
       0.0, sr * secp * tp, cr * secp * tp;
  return d;
}

Mat3 d_gravity_in_body(const EulerAngles& a, double g) {
  const double cr = std::cos(a.roll), sr = std::sin(a.roll);
  const double cp = std::cos(a.pitch), sp = std::sin(a.pitch);
  Mat3 d = Mat3::Zero();
  // column 0: d/d(roll), column 1: d/d(pitch)
  d.col(0) = g * Vec3(0.0, -cr * cp, sr * cp);
  d.col(1) = g * Vec3(cp, sr * sp, cr * sp);
  return d;
}

bool is_valid_covariance(const Eigen::Ref<const Eigen::MatrixXd>& m,
                         double tol) {
  if (m.rows() != m.cols()) return false;
  if (!m.allFinite()) return false;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > tol * scale) return false;
  Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym,
                                                    Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() > -tol * scale;
}

}  // namespace vdse
