/**
 * @file acor.hpp
 *
 * GNSS signal-quality handling: adaptive covariance decay after a dropout
 * and Mahalanobis-distance outlier gating in the vehicle frame. Position
 * packets pass through here before they reach the EKF.
 */
#pragma once

#include "vdse/core_math.hpp"
#include "vdse/sensors.hpp"

#include <optional>
#include <vector>

namespace vdse {

struct AcorConfig {
  bool enabled = true;
  double sigma_entry_threshold = 0.5;  // m, degraded above this
  double sigma_exit_threshold = 0.05;  // m, recovered below this
  int entry_consecutive = 3;           // fixes before dropout is declared
  double decay_duration = 5.0;         // s, linear decay window
  double gate_longitudinal = 3.0;      // Mahalanobis units
  double gate_lateral = 3.0;           // Mahalanobis units
  double recovery_step_ceiling = 0.04;  // m, posterior step bound in decay
};

struct GateEvent {
  double t = 0.0;
  double distance = 0.0;
  int axis = 0;  // 0 longitudinal, 1 lateral
};

struct GateResult {
  Vec3 innovation = Vec3::Zero();  // nav frame, possibly clamped
  bool clamped = false;
  double distance_lon = 0.0;
  double distance_lat = 0.0;
};

/// Rotate the innovation into the vehicle frame by -yaw, clamp each axis
/// to its Mahalanobis limit against the likewise-rotated innovation
/// covariance, rotate back. Idempotent.
GateResult mahalanobis_gate(const Vec3& innovation_nav, const Mat3& s_innov,
                            double yaw, const AcorConfig& cfg);

/// Tracks GNSS quality across fixes: dropout entry/exit detection and the
/// linear sigma decay of the recovery window.
class GnssQualityTracker {
 public:
  explicit GnssQualityTracker(const AcorConfig& cfg) : cfg_(cfg) {}

  /// Feed one fix; ekf_pos_sigma is the filter's own position std-dev,
  /// which seeds the decay start level at the recovery instant.
  /// Returns the sigma to use for the packet, or nullopt when the fix
  /// must be discarded (dropout in progress / no position).
  std::optional<Vec3> adapt_sigma(const GnssFix& fix,
                                  const Vec3& ekf_pos_sigma);

  /// A prolonged absence of fixes also counts as a dropout.
  void note_signal_gap() {
    dropout_active_ = true;
    decay_active_ = false;
    bad_count_ = 0;
  }

  bool dropout_active() const { return dropout_active_; }
  bool decaying(double t) const {
    return decay_active_ && t <= recovery_start_t_ + cfg_.decay_duration;
  }
  double recovery_start() const { return recovery_start_t_; }

 private:
  AcorConfig cfg_;
  bool dropout_active_ = false;
  bool decay_active_ = false;
  int bad_count_ = 0;
  double recovery_start_t_ = 0.0;
  Vec3 sigma_hold_ = Vec3::Zero();
};

}  // namespace vdse
