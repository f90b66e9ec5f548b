/**
 * @file track.hpp
 *
 * Sampled track geometry: closed centerline with bank/slope profile and
 * derived bounds, plus Frenet (arclength / lateral offset) projection.
 *
 * The lateral surface direction at arclength s is
 *   e_lat(s) = cos(bank) * n_h(s) + sin(bank) * z_up
 * with n_h the horizontal left normal of the centerline. Bounds sit at
 * +-width/2 along e_lat, so connecting them reproduces the bank angle.
 */
#pragma once

#include "vdse/types.hpp"

#include <optional>
#include <vector>

namespace vdse {

struct TrackSample {
  double s = 0.0;        // arclength, m
  Vec3 pos;              // centerline point, nav frame
  double heading = 0.0;  // horizontal tangent direction, rad
  double curvature = 0.0;  // signed, left-positive, 1/m
  double bank = 0.0;       // roll of the surface about the tangent, rad
  double slope = 0.0;      // pitch of the surface along the tangent, rad
  double width = 0.0;      // m
};

class TrackModel {
 public:
  /// Samples must describe a closed loop; the constructor appends the
  /// closing segment back to samples.front(). Throws InvalidGeometry on
  /// degenerate input or |bank| > 25 deg.
  explicit TrackModel(std::vector<TrackSample> samples);

  double length() const { return length_; }
  const std::vector<TrackSample>& samples() const { return samples_; }

  /// Linear interpolation (wrapping in s) of the stored profile.
  TrackSample at(double s) const;

  Vec3 tangent(double s) const;
  /// Horizontal left normal of the centerline.
  Vec3 left_normal_horizontal(double s) const;
  /// In-surface lateral direction (toward the left bound).
  Vec3 lateral_dir(double s) const;
  /// Upward surface normal.
  Vec3 surface_normal(double s) const;

  Vec3 centerline_point(double s) const;
  Vec3 left_bound(double s) const;
  Vec3 right_bound(double s) const;

  /// Point on the track surface at (s, d).
  Vec3 surface_point(const FrenetCoord& f) const;

  /// Bounding box of the centerline, for the projection corridor check.
  void bounding_box(Vec3& lo, Vec3& hi) const;

 private:
  std::vector<TrackSample> samples_;
  double length_ = 0.0;
};

/// Project p onto the track. The result matches a dense brute-force
/// search of the piecewise-linear centerline. An optional hint biases the
/// segment search toward the previous arclength, which disambiguates
/// self-overlapping layouts and makes lap-long queries O(1).
/// Throws OutOfCorridor when p lies further than `margin` outside the
/// centerline bounding box.
FrenetCoord frenet_project(const TrackModel& track, const Vec3& p,
                           std::optional<double> s_hint = std::nullopt,
                           double margin = 50.0);

}  // namespace vdse
