#include "vdse/acor.hpp"

namespace vdse {

GateResult mahalanobis_gate(const Vec3& innovation_nav, const Mat3& s_innov,
                            double yaw, const AcorConfig& cfg) {
  const double cy = std::cos(yaw), sy = std::sin(yaw);
  Mat3 to_vehicle;
  to_vehicle << cy, sy, 0.0,
                -sy, cy, 0.0,
                0.0, 0.0, 1.0;

  Vec3 innov_v = to_vehicle * innovation_nav;
  const Mat3 s_v = to_vehicle * s_innov * to_vehicle.transpose();

  GateResult out;
  const double sig_lon = std::sqrt(std::max(s_v(0, 0), 1e-12));
  const double sig_lat = std::sqrt(std::max(s_v(1, 1), 1e-12));
  out.distance_lon = std::abs(innov_v.x()) / sig_lon;
  out.distance_lat = std::abs(innov_v.y()) / sig_lat;

  if (out.distance_lon > cfg.gate_longitudinal) {
    innov_v.x() *= cfg.gate_longitudinal / out.distance_lon;
    out.clamped = true;
  }
  if (out.distance_lat > cfg.gate_lateral) {
    innov_v.y() *= cfg.gate_lateral / out.distance_lat;
    out.clamped = true;
  }

  out.innovation = to_vehicle.transpose() * innov_v;
  return out;
}

std::optional<Vec3> GnssQualityTracker::adapt_sigma(const GnssFix& fix,
                                                    const Vec3& ekf_pos_sigma) {
  const bool no_position = !fix.has_position();
  const bool degraded = no_position ||
                        fix.rtk_status != RtkStatus::kRtkFixed ||
                        fix.sigma.maxCoeff() > cfg_.sigma_entry_threshold;

  if (!dropout_active_) {
    if (degraded) {
      if (++bad_count_ >= cfg_.entry_consecutive) {
        dropout_active_ = true;
        decay_active_ = false;
      }
    } else {
      bad_count_ = 0;
    }
  }

  if (no_position) return std::nullopt;

  if (dropout_active_) {
    const bool recovered = fix.rtk_status == RtkStatus::kRtkFixed &&
                           fix.sigma.maxCoeff() < cfg_.sigma_exit_threshold;
    if (!recovered) return std::nullopt;
    dropout_active_ = false;
    bad_count_ = 0;
    decay_active_ = true;
    recovery_start_t_ = fix.t;
    sigma_hold_ = ekf_pos_sigma.cwiseMax(fix.sigma);
  }

  if (decay_active_) {
    const double progress =
        (fix.t - recovery_start_t_) / cfg_.decay_duration;
    if (progress >= 1.0) {
      decay_active_ = false;
      return fix.sigma;
    }
    const Vec3 decayed =
        sigma_hold_ + (fix.sigma - sigma_hold_) * std::max(progress, 0.0);
    return decayed.cwiseMax(fix.sigma);
  }

  return fix.sigma;
}

}  // namespace vdse
