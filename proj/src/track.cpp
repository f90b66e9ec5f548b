#include "vdse/track.hpp"

#include <algorithm>

namespace vdse {

namespace {
constexpr double kMaxBank = 25.0 * kPi / 180.0;

double lerp(double a, double b, double t) { return a + (b - a) * t; }

double lerp_angle(double a, double b, double t) {
  return wrap_angle(a + wrap_angle(b - a) * t);
}
}  // namespace

TrackModel::TrackModel(std::vector<TrackSample> samples)
    : samples_(std::move(samples)) {
  if (samples_.size() < 8) throw InvalidGeometry("too few track samples");

  for (const auto& smp : samples_) {
    if (std::abs(smp.bank) > kMaxBank + 1e-9)
      throw InvalidGeometry("bank angle exceeds 25 deg");
    if (smp.width <= 0.0) throw InvalidGeometry("non-positive track width");
  }

  // Close the loop: first == last sample.
  const double closing_gap =
      (samples_.back().pos - samples_.front().pos).norm();
  if (closing_gap > 1e-9) {
    TrackSample closing = samples_.front();
    samples_.push_back(closing);
  } else {
    samples_.back() = samples_.front();
  }

  double s = 0.0;
  samples_.front().s = 0.0;
  for (std::size_t i = 1; i < samples_.size(); ++i) {
    const double seg = (samples_[i].pos - samples_[i - 1].pos).norm();
    if (seg <= 1e-12) throw InvalidGeometry("duplicate centerline samples");
    s += seg;
    samples_[i].s = s;
  }
  length_ = s;
  if (length_ <= 1.0) throw InvalidGeometry("degenerate track length");
  samples_.back().bank = samples_.front().bank;
  samples_.back().slope = samples_.front().slope;
  samples_.back().width = samples_.front().width;
  samples_.back().heading = samples_.front().heading;
  samples_.back().curvature = samples_.front().curvature;
}

TrackSample TrackModel::at(double s) const {
  double sw = std::fmod(s, length_);
  if (sw < 0.0) sw += length_;
  auto it = std::upper_bound(
      samples_.begin(), samples_.end(), sw,
      [](double value, const TrackSample& smp) { return value < smp.s; });
  std::size_t hi = static_cast<std::size_t>(it - samples_.begin());
  if (hi == 0) hi = 1;
  if (hi >= samples_.size()) hi = samples_.size() - 1;
  const TrackSample& a = samples_[hi - 1];
  const TrackSample& b = samples_[hi];
  const double t = (sw - a.s) / (b.s - a.s);

  TrackSample out;
  out.s = sw;
  out.pos = a.pos + (b.pos - a.pos) * t;
  out.heading = lerp_angle(a.heading, b.heading, t);
  out.curvature = lerp(a.curvature, b.curvature, t);
  out.bank = lerp(a.bank, b.bank, t);
  out.slope = lerp(a.slope, b.slope, t);
  out.width = lerp(a.width, b.width, t);
  return out;
}

Vec3 TrackModel::tangent(double s) const {
  const TrackSample smp = at(s);
  const double cs = std::cos(smp.slope);
  return {cs * std::cos(smp.heading), cs * std::sin(smp.heading),
          std::sin(smp.slope)};
}

Vec3 TrackModel::left_normal_horizontal(double s) const {
  const TrackSample smp = at(s);
  return {-std::sin(smp.heading), std::cos(smp.heading), 0.0};
}

Vec3 TrackModel::lateral_dir(double s) const {
  const TrackSample smp = at(s);
  const Vec3 n = left_normal_horizontal(s);
  return std::cos(smp.bank) * n + std::sin(smp.bank) * Vec3::UnitZ();
}

Vec3 TrackModel::surface_normal(double s) const {
  // (forward, left, up) triad: tangent x lateral is the upward normal
  return tangent(s).cross(lateral_dir(s)).normalized();
}

Vec3 TrackModel::centerline_point(double s) const { return at(s).pos; }

Vec3 TrackModel::left_bound(double s) const {
  return centerline_point(s) + 0.5 * at(s).width * lateral_dir(s);
}

Vec3 TrackModel::right_bound(double s) const {
  return centerline_point(s) - 0.5 * at(s).width * lateral_dir(s);
}

Vec3 TrackModel::surface_point(const FrenetCoord& f) const {
  return centerline_point(f.s) + f.d * lateral_dir(f.s);
}

void TrackModel::bounding_box(Vec3& lo, Vec3& hi) const {
  lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  hi = -lo;
  for (const auto& smp : samples_) {
    lo = lo.cwiseMin(smp.pos);
    hi = hi.cwiseMax(smp.pos);
  }
}

FrenetCoord frenet_project(const TrackModel& track, const Vec3& p,
                           std::optional<double> s_hint, double margin) {
  Vec3 lo, hi;
  track.bounding_box(lo, hi);
  if ((p - p.cwiseMax(lo - Vec3::Constant(margin))
             .cwiseMin(hi + Vec3::Constant(margin)))
          .norm() > 0.0) {
    throw OutOfCorridor("point outside track corridor");
  }

  const auto& samples = track.samples();
  const double len = track.length();

  // With a hint, restrict the segment scan to a window around it so that
  // self-overlapping layouts resolve to the nearby lap position.
  constexpr double kHintWindow = 100.0;

  double best_dist2 = std::numeric_limits<double>::infinity();
  double best_s = 0.0;
  for (std::size_t i = 0; i + 1 < samples.size(); ++i) {
    const TrackSample& a = samples[i];
    const TrackSample& b = samples[i + 1];
    if (s_hint) {
      double ds = std::abs(a.s - std::fmod(*s_hint, len));
      ds = std::min(ds, len - ds);
      if (ds > kHintWindow) continue;
    }
    const Vec3 seg = b.pos - a.pos;
    const double seg_len2 = seg.squaredNorm();
    double t = seg.dot(p - a.pos) / seg_len2;
    t = std::clamp(t, 0.0, 1.0);
    const Vec3 proj = a.pos + t * seg;
    const double dist2 = (p - proj).squaredNorm();
    if (dist2 < best_dist2) {
      best_dist2 = dist2;
      best_s = a.s + t * std::sqrt(seg_len2);
    }
  }

  // Local refinement: Newton on the perpendicularity condition
  // (p - c(s)) . t(s) = 0 over the interpolated profile, which removes the
  // segment-quantization bias where the bank (and thus the lateral
  // direction) changes along s.
  double s_ref = best_s;
  for (int it = 0; it < 5; ++it) {
    const Vec3 c = track.centerline_point(s_ref);
    const double step = (p - c).dot(track.tangent(s_ref));
    s_ref += step;
    if (std::abs(step) < 1e-10) break;
  }

  FrenetCoord f;
  f.s = std::fmod(s_ref, len);
  if (f.s < 0.0) f.s += len;
  f.d = (p - track.centerline_point(f.s)).dot(track.lateral_dir(f.s));
  return f;
}

}  // namespace vdse
