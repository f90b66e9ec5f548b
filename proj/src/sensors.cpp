#include "vdse/sensors.hpp"

#include <numeric>

namespace vdse {

Vec3 fir_filter(const std::vector<Vec3>& window,
                const std::vector<double>& taps) {
  if (window.size() != taps.size())
    throw LengthMismatch("FIR window/taps length mismatch");
  if (window.empty()) throw LengthMismatch("empty FIR window");
  const double gain = std::accumulate(taps.begin(), taps.end(), 0.0);
  if (std::abs(gain - 1.0) > 1e-9)
    throw LengthMismatch("FIR taps not normalized");
  // Accumulate deviations from the first sample so that constant inputs
  // pass through bit-exactly (unit DC gain).
  const Vec3& base = window.front();
  Vec3 acc = Vec3::Zero();
  for (std::size_t i = 0; i < window.size(); ++i)
    acc += taps[i] * (window[i] - base);
  return base + acc / gain;
}

ImuSample fuse_imus(const std::vector<ImuSample>& samples) {
  ImuSample out;
  int n = 0;
  for (const auto& s : samples) {
    if (!s.valid) continue;
    if (n == 0) out.t = s.t;
    out.omega += s.omega;
    out.accel += s.accel;
    ++n;
  }
  if (n == 0) throw AllInvalid("no valid IMU sample in tick");
  out.omega /= n;
  out.accel /= n;
  out.source_id = -1;
  out.valid = true;
  return out;
}

ImuSample lever_arm_correct(const ImuSample& s, const Vec3& lever_arm,
                            const Vec3& omega_dot) {
  ImuSample out = s;
  out.accel = s.accel - omega_dot.cross(lever_arm) -
              s.omega.cross(s.omega.cross(lever_arm));
  return out;
}

ImuBias estimate_stationary_bias(const std::vector<ImuSample>& window,
                                 const Vec3& expected_gravity_reaction) {
  if (window.size() < 2) throw WindowTooShort("bias window too short");
  const double span = window.back().t - window.front().t;
  if (span < 2.0) throw WindowTooShort("bias window shorter than 2 s");
  Vec3 mean_omega = Vec3::Zero();
  Vec3 mean_accel = Vec3::Zero();
  for (const auto& s : window) {
    mean_omega += s.omega;
    mean_accel += s.accel;
  }
  mean_omega /= static_cast<double>(window.size());
  mean_accel /= static_cast<double>(window.size());
  return {mean_omega, mean_accel - expected_gravity_reaction};
}

ImuConditioner::ImuConditioner(MountConfig mounts,
                               std::vector<double> fir_taps, double tick_dt)
    : mounts_(std::move(mounts)), taps_(std::move(fir_taps)), dt_(tick_dt) {
  if (taps_.empty()) taps_ = {1.0};
}

ImuConditioner::Output ImuConditioner::step(
    const std::vector<ImuSample>& tick_samples, double t) {
  Output out;

  std::vector<ImuSample> corrected;
  corrected.reserve(tick_samples.size());
  for (const auto& s : tick_samples) {
    if (!s.valid) continue;
    if (s.t < last_t_ - 1e-9) {
      ++dropped_out_of_order_;
      continue;
    }
    ImuSample c = s;
    const std::size_t idx = static_cast<std::size_t>(s.source_id);
    if (idx < mounts_.imus.size()) {
      const ImuMount& m = mounts_.imus[idx];
      c.omega -= m.gyro_bias;
      c.accel -= m.accel_bias;
      c = lever_arm_correct(c, m.lever_arm, last_omega_dot_);
    }
    corrected.push_back(c);
  }
  last_t_ = t;

  if (corrected.empty()) {
    // Hold the last fused value for at most 3 ticks, then flag IMU loss.
    if (!have_last_ || ++hold_count_ > 3) {
      out.imu_loss = true;
      out.fused = last_fused_;
      out.fused.t = t;
      out.fused.valid = false;
      return out;
    }
    out.fused = last_fused_;
    out.fused.t = t;
    out.omega_dot = last_omega_dot_;
    out.held = true;
    return out;
  }
  hold_count_ = 0;

  ImuSample fused = fuse_imus(corrected);
  fused.t = t;

  omega_window_.push_back(fused.omega);
  accel_window_.push_back(fused.accel);
  while (omega_window_.size() > taps_.size()) {
    omega_window_.pop_front();
    accel_window_.pop_front();
  }

  ImuSample smoothed = fused;
  if (omega_window_.size() == taps_.size()) {
    std::vector<Vec3> w(omega_window_.begin(), omega_window_.end());
    smoothed.omega = fir_filter(w, taps_);
    w.assign(accel_window_.begin(), accel_window_.end());
    smoothed.accel = fir_filter(w, taps_);
  }

  // Central difference of the filtered gyro over one tick, smoothed by a
  // 3-tap average. Centered one tick in the past.
  Vec3 omega_dot_raw = Vec3::Zero();
  if (filled_ >= 2) {
    omega_dot_raw = (smoothed.omega - prev_prev_omega_) / (2.0 * dt_);
  }
  omega_dot_window_.push_back(omega_dot_raw);
  while (omega_dot_window_.size() > 3) omega_dot_window_.pop_front();
  Vec3 omega_dot = Vec3::Zero();
  for (const auto& v : omega_dot_window_) omega_dot += v;
  omega_dot /= static_cast<double>(omega_dot_window_.size());

  prev_prev_omega_ = prev_omega_;
  prev_omega_ = smoothed.omega;
  ++filled_;

  last_fused_ = smoothed;
  last_omega_dot_ = omega_dot;
  have_last_ = true;

  out.fused = smoothed;
  out.omega_dot = omega_dot;
  return out;
}

}  // namespace vdse
