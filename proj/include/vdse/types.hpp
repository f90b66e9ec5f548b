/**
 * @file types.hpp
 *
 * Shared scalar/vector types and error taxonomy for the estimation stack.
 *
 * Conventions used throughout:
 *   - body frame: x forward, y left, z up
 *   - nav frame: local planar metric frame, z up
 *   - Euler angles: ZYX (yaw-pitch-roll), radians
 *   - SI units everywhere
 */
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

namespace vdse {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Vec9 = Eigen::Matrix<double, 9, 1>;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Mat9 = Eigen::Matrix<double, 9, 9>;

inline constexpr double kGravity = 9.81;  // m/s^2
inline constexpr double kPi = 3.14159265358979323846;

/// Wrap an angle to (-pi, pi].
inline double wrap_angle(double a) {
  double r = std::remainder(a, 2.0 * kPi);
  if (r <= -kPi) r += 2.0 * kPi;
  return r;
}

inline double deg2rad(double d) { return d * kPi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / kPi; }

/// ZYX Euler angles. Pitch is restricted to (-pi/2, pi/2); roads never
/// approach vertical, so anything near the gimbal singularity means a
/// corrupted state and is rejected loudly by the consumers.
struct EulerAngles {
  double roll = 0.0;   // phi, rad
  double pitch = 0.0;  // theta, rad
  double yaw = 0.0;    // psi, rad

  EulerAngles() = default;
  EulerAngles(double r, double p, double y) : roll(r), pitch(p), yaw(y) {}

  EulerAngles wrapped() const {
    return {wrap_angle(roll), pitch, wrap_angle(yaw)};
  }
};

/// (arclength, signed lateral offset) relative to a track centerline.
/// d > 0 is toward the left bound.
struct FrenetCoord {
  double s = 0.0;  // m
  double d = 0.0;  // m
};

// ---------------------------------------------------------------------------
// Error taxonomy. Estimation errors map to CLI exit code 2, configuration
// errors to exit code 1.
// ---------------------------------------------------------------------------

struct EstimationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GimbalProximity : EstimationError {
  explicit GimbalProximity(double pitch)
      : EstimationError("pitch " + std::to_string(pitch) +
                        " rad too close to +-pi/2") {}
};

struct LengthMismatch : EstimationError {
  using EstimationError::EstimationError;
};

struct AllInvalid : EstimationError {
  using EstimationError::EstimationError;
};

struct WindowTooShort : EstimationError {
  using EstimationError::EstimationError;
};

struct OutOfCorridor : EstimationError {
  using EstimationError::EstimationError;
};

struct InvalidGeometry : EstimationError {
  using EstimationError::EstimationError;
};

struct InfeasibleProfile : EstimationError {
  using EstimationError::EstimationError;
};

struct InnovationNonFinite : EstimationError {
  using EstimationError::EstimationError;
};

struct CovarianceNotPD : EstimationError {
  using EstimationError::EstimationError;
};

struct NonFiniteState : EstimationError {
  using EstimationError::EstimationError;
};

struct EmptyOverlap : EstimationError {
  using EstimationError::EstimationError;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace vdse
