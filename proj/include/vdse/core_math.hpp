/**
 * @file core_math.hpp
 *
 * Euler-angle kinematics, body/nav rotations and covariance guards.
 *
 * Euler convention is ZYX (yaw-pitch-roll): R_body->nav = Rz(psi) Ry(theta)
 * Rx(phi). The attitude rate matrix and the gravity decomposition below are
 * consistent with that choice. All functions here are pure and thread-safe.
 */
#pragma once

#include "vdse/types.hpp"

namespace vdse {

/// Pitch magnitudes at or above this are treated as gimbal proximity.
inline constexpr double kGimbalPitchLimit = kPi / 2.0 - 1e-3;

Mat3 skew(const Vec3& v);

/// Body->nav rotation, Rz(yaw) * Ry(pitch) * Rx(roll). Orthonormal, det +1.
Mat3 body_to_nav(const EulerAngles& angles);

/// Kinematic matrix T mapping body rates to Euler angle rates:
/// (phi_dot, theta_dot, psi_dot) = T(phi, theta) * omega_body.
/// Throws GimbalProximity for |pitch| >= pi/2 - 1e-3.
Mat3 euler_rate_matrix(const EulerAngles& angles);

/// Euler angle rates for the given body angular velocity.
Vec3 euler_rates(const EulerAngles& angles, const Vec3& omega_body);

/// Nav gravity (0, 0, -g) expressed in the body frame:
/// g * (sin(theta), -sin(phi)cos(theta), -cos(phi)cos(theta)).
Vec3 gravity_in_body(const EulerAngles& angles, double g = kGravity);

// Partial derivatives used by the EKF transition Jacobian.
Mat3 d_body_to_nav_d_roll(const EulerAngles& angles);
Mat3 d_body_to_nav_d_pitch(const EulerAngles& angles);
Mat3 d_body_to_nav_d_yaw(const EulerAngles& angles);
Mat3 d_euler_rate_matrix_d_roll(const EulerAngles& angles);
Mat3 d_euler_rate_matrix_d_pitch(const EulerAngles& angles);
/// d/d(roll,pitch) of gravity_in_body, as the first two columns of a 3x3
/// (yaw column is zero).
Mat3 d_gravity_in_body(const EulerAngles& angles, double g = kGravity);

/// 0.5 * (M + M^T).
template <typename Derived>
typename Derived::PlainObject symmetrized(const Eigen::MatrixBase<Derived>& m) {
  return 0.5 * (m + m.transpose());
}

/// A covariance is accepted when it is symmetric within tol and its
/// eigenvalues after symmetrization stay above -tol.
bool is_valid_covariance(const Eigen::Ref<const Eigen::MatrixXd>& m,
                         double tol = 1e-9);

}  // namespace vdse
