#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "vdse/csv.hpp"
#include "vdse/sim.hpp"

#include <algorithm>
#include <filesystem>

using namespace vdse;

namespace {

VehicleParams test_params() {
  VehicleParams p;
  p.dist_cog_front = 1.6;
  p.dist_cog_rear = 1.4;
  p.track_front = 1.6;
  p.track_rear = 1.55;
  p.mass = 750.0;
  p.yaw_inertia = 1000.0;
  p.r_dyn_front = 0.30;
  p.r_dyn_rear = 0.31;
  return p;
}

SpeedProfile constant_profile(double v) {
  SpeedProfile pr;
  pr.knot_s = {0.0};
  pr.knot_v = {v};
  return pr;
}

GroundTruth quick_lap(double bank_deg, double speed, double duration,
                      double radius = 300.0) {
  OvalSpec oval;
  oval.bank_max = deg2rad(bank_deg);
  oval.straight_len = 400.0;
  oval.turn_radius = radius;
  oval.width = 14.0;
  const TrackModel track = build_oval(oval);
  SimOptions opt;
  opt.duration = duration;
  return simulate_lap(track, constant_profile(speed), test_params(), opt);
}

}  // namespace

TEST_CASE("flat oval has zero bank everywhere") {
  const TrackModel track = build_oval(0.0, 400.0, 200.0, 12.0);
  for (const auto& s : track.samples()) CHECK(s.bank == 0.0);
}

TEST_CASE("banked oval reaches exactly the configured maximum") {
  const double bank = deg2rad(20.0);
  const TrackModel track = build_oval(bank, 500.0, 300.0, 15.0);
  double max_bank = 0.0;
  for (const auto& s : track.samples())
    max_bank = std::max(max_bank, s.bank);
  CHECK(rad2deg(max_bank) == doctest::Approx(20.0).epsilon(1e-4));
  CHECK(max_bank <= bank + 1e-12);
}

TEST_CASE("oval is closed: first equals last sample") {
  const TrackModel track = build_oval(deg2rad(10.0), 300.0, 150.0, 12.0);
  CHECK((track.samples().front().pos - track.samples().back().pos).norm() <
        1e-9);
}

TEST_CASE("bounds reconstructed from centerline, bank and width") {
  const TrackModel track = build_oval(deg2rad(18.0), 350.0, 250.0, 13.0);
  for (double s = 0.0; s < track.length(); s += 17.0) {
    const TrackSample smp = track.at(s);
    const Vec3 lat = track.lateral_dir(s);
    const Vec3 left_expected = smp.pos + 0.5 * smp.width * lat;
    const Vec3 right_expected = smp.pos - 0.5 * smp.width * lat;
    CHECK((track.left_bound(s) - left_expected).norm() < 1e-3);
    CHECK((track.right_bound(s) - right_expected).norm() < 1e-3);
    // The bound separation reproduces the bank by construction.
    const Vec3 across = track.left_bound(s) - track.right_bound(s);
    CHECK(std::asin(across.z() / across.norm()) ==
          doctest::Approx(smp.bank).epsilon(1e-9));
  }
}

TEST_CASE("oval geometry validation") {
  CHECK_THROWS_AS(build_oval(deg2rad(30.0), 400.0, 200.0, 12.0),
                  InvalidGeometry);
  CHECK_THROWS_AS(build_oval(0.0, -5.0, 200.0, 12.0), InvalidGeometry);
  CHECK_THROWS_AS(build_oval(0.0, 400.0, 200.0, 0.0), InvalidGeometry);
}

TEST_CASE("bank from connecting the bounds matches the profile") {
  const TrackModel track = build_oval(deg2rad(20.0), 500.0, 300.0, 15.0);
  // Away from the blend zones the linearized bound-to-bound bank equals
  // the stored profile within 0.1 deg.
  for (double s = 0.0; s < track.length(); s += 5.0) {
    const TrackSample smp = track.at(s);
    const RoadAngles ra = road_angles_from_bounds(track, s, smp.heading);
    CHECK(std::abs(rad2deg(ra.roll - smp.bank)) < 0.1);
  }
}

TEST_CASE("speed profile interpolates periodically") {
  SpeedProfile pr;
  pr.knot_s = {0.0, 100.0, 200.0};
  pr.knot_v = {10.0, 20.0, 30.0};
  CHECK(pr.at(50.0, 300.0) == doctest::Approx(15.0));
  CHECK(pr.at(150.0, 300.0) == doctest::Approx(25.0));
  // Wrap segment 200 -> 300(=0): interpolates 30 -> 10.
  CHECK(pr.at(250.0, 300.0) == doctest::Approx(20.0));
  CHECK(pr.at(310.0, 300.0) == doctest::Approx(11.0));
}

TEST_CASE("straight flat driving has no lateral motion") {
  const GroundTruth gt = quick_lap(0.0, 40.0, 6.0);
  // The first straight is 400 m: at 40 m/s the first ~9 s stay on it.
  for (const auto& s : gt.samples) {
    if (s.t < 1.0 || s.t > 5.0) continue;  // skip the tiny initial transient
    CHECK(std::abs(s.beta) < 1e-4);
    CHECK(std::abs(s.omega.z()) < 1e-3);
    CHECK(std::abs(s.vel.y()) < 5e-3);
  }
}

TEST_CASE("ground truth is exactly consistent with the discrete kinematics") {
  const GroundTruth gt = quick_lap(18.0, 50.0, 20.0);
  const double dt = gt.dt;
  double worst_v = 0.0, worst_a = 0.0, worst_p = 0.0;
  for (std::size_t k = 0; k + 1 < gt.samples.size(); ++k) {
    const auto& a = gt.samples[k];
    const auto& b = gt.samples[k + 1];

    // v_{k+1} = v_k + dt * (-w x v + accel + g gamma)
    const Vec3 v_dot =
        -a.omega.cross(a.vel) + a.accel + gravity_in_body(a.angles);
    worst_v = std::max(worst_v, (b.vel - (a.vel + dt * v_dot)).norm());

    // angles advance with the attitude kinematics
    const Vec3 rates = euler_rates(a.angles, a.omega);
    worst_a = std::max(
        worst_a,
        std::abs(wrap_angle(b.angles.roll - a.angles.roll - dt * rates(0))) +
            std::abs(b.angles.pitch - a.angles.pitch - dt * rates(1)) +
            std::abs(wrap_angle(b.angles.yaw - a.angles.yaw -
                                dt * rates(2))));

    // p_{k+1} = p_k + dt * R * v
    worst_p = std::max(
        worst_p,
        (b.pos - (a.pos + dt * (body_to_nav(a.angles) * a.vel))).norm());
  }
  CHECK(worst_v < 1e-9);
  CHECK(worst_a < 1e-9);
  CHECK(worst_p < 1e-9);
}

TEST_CASE("synthesized sensors are deterministic per seed") {
  const GroundTruth gt = quick_lap(10.0, 45.0, 3.0);
  NoiseConfig noise;
  noise.seed = 42;
  MountConfig mounts;
  mounts.imus.resize(3);
  mounts.imus[1].lever_arm = Vec3(0.5, 0.2, 0.1);

  const SensorStreams a = synthesize_sensors(gt, noise, mounts);
  const SensorStreams b = synthesize_sensors(gt, noise, mounts);
  REQUIRE(a.imu.size() == b.imu.size());
  for (std::size_t i = 0; i < a.imu.size(); ++i) {
    CHECK(a.imu[i].omega == b.imu[i].omega);
    CHECK(a.imu[i].accel == b.imu[i].accel);
  }
  REQUIRE(a.gnss.size() == b.gnss.size());
  for (std::size_t i = 0; i < a.gnss.size(); ++i)
    CHECK(a.gnss[i].pos == b.gnss[i].pos);

  noise.seed = 43;
  const SensorStreams c = synthesize_sensors(gt, noise, mounts);
  CHECK(a.imu.front().accel != c.imu.front().accel);
}

TEST_CASE("zero noise GNSS equals the ground truth at aligned samples") {
  const GroundTruth gt = quick_lap(5.0, 40.0, 3.0);
  NoiseConfig noise;
  noise.gnss_sigma = 0.0;
  noise.imu_accel_sigma = 0.0;
  noise.imu_gyro_sigma = 0.0;
  noise.wheel_sigma = 0.0;
  noise.gnss_heading_sigma = 0.0;
  const SensorStreams s = synthesize_sensors(gt, noise, MountConfig{});
  int checked = 0;
  for (const auto& fix : s.gnss) {
    // Fix times that land on the 8 ms grid need no interpolation.
    const double ticks = fix.t / gt.dt;
    if (std::abs(ticks - std::round(ticks)) > 1e-9) continue;
    const auto& ref = gt.samples[static_cast<std::size_t>(
        std::llround(ticks))];
    CHECK((fix.pos - ref.pos).norm() < 1e-12);
    ++checked;
  }
  CHECK(checked > 10);
}

TEST_CASE("dropout windows suppress all fixes") {
  const GroundTruth gt = quick_lap(5.0, 40.0, 8.0);
  NoiseConfig noise;
  noise.dropout_windows = {{2.0, 4.5}};
  const SensorStreams s = synthesize_sensors(gt, noise, MountConfig{});
  int inside = 0, outside = 0;
  for (const auto& fix : s.gnss) {
    if (fix.t >= 2.0 && fix.t <= 4.5)
      ++inside;
    else
      ++outside;
  }
  CHECK(inside == 0);
  CHECK(outside > 50);
}

TEST_CASE("wheel speeds carry no slip while coasting") {
  const GroundTruth gt = quick_lap(0.0, 40.0, 5.0);
  // Constant profile on the straight: demanded force is tiny, so wheel
  // speed times radius matches the axle speed closely.
  const VehicleParams p = test_params();
  for (const auto& s : gt.samples) {
    if (s.t < 1.0 || s.t > 4.0) continue;
    const double v_rear_left = s.vel.x() - s.omega.z() * 0.5 * p.track_rear;
    CHECK(s.wheels.rl * p.r_dyn_rear ==
          doctest::Approx(v_rear_left).epsilon(5e-3));
  }
}

TEST_CASE("driver follows the centerline and the speed profile") {
  OvalSpec oval;
  oval.bank_max = deg2rad(20.0);
  oval.straight_len = 500.0;
  oval.turn_radius = 300.0;
  oval.width = 15.0;
  const TrackModel track = build_oval(oval);
  SpeedProfile pr;
  pr.knot_s = {0.0, 400.0, 700.0, 1200.0, 1500.0, 2000.0, 2400.0};
  pr.knot_v = {55.0, 60.0, 52.0, 52.0, 58.0, 52.0, 55.0};
  SimOptions opt;
  opt.duration = 45.0;
  const GroundTruth gt =
      simulate_lap(track, pr, test_params(), opt);

  std::optional<double> hint;
  for (const auto& s : gt.samples) {
    if (s.t < 4.0) continue;
    const FrenetCoord f = frenet_project(track, s.pos, hint);
    hint = f.s;
    CHECK(std::abs(f.d) < 1.5);
    const double v_ref = pr.at(f.s, track.length());
    CHECK(std::abs(s.vel.x() - v_ref) < 4.0);
  }
}

TEST_CASE("infeasible speed profile is rejected") {
  const TrackModel track = build_oval(0.0, 200.0, 80.0, 12.0);
  SimOptions opt;
  opt.duration = 5.0;
  CHECK_THROWS_AS(
      simulate_lap(track, constant_profile(60.0), test_params(), opt),
      InfeasibleProfile);
}

TEST_CASE("scenario round trip through config text") {
  const std::string text = R"(
scenario.name = unit
track.bank_max_deg = 12.5
track.straight_len = 321
track.turn_radius = 210
track.width = 13
profile.knots_s = 0, 500
profile.knots_v = 40, 55
sim.duration = 12
noise.seed = 9
noise.gnss_sigma = 0.03
noise.dropout_windows = 3:4, 7:8.5
noise.sigma_windows = 5:6:0.8
noise.accel_bias_extra0 = 0.02, -0.01, 0.0
)";
  const Scenario sc = load_scenario(Config::from_string(text));
  CHECK(sc.name == "unit");
  CHECK(rad2deg(sc.oval.bank_max) == doctest::Approx(12.5));
  CHECK(sc.oval.straight_len == 321.0);
  CHECK(sc.profile.knot_v.back() == 55.0);
  CHECK(sc.sim.duration == 12.0);
  CHECK(sc.noise.seed == 9);
  REQUIRE(sc.noise.dropout_windows.size() == 2);
  CHECK(sc.noise.dropout_windows[1].t1 == doctest::Approx(8.5));
  REQUIRE(sc.noise.sigma_schedule.size() == 1);
  CHECK(sc.noise.sigma_schedule[0].sigma == doctest::Approx(0.8));
  REQUIRE(sc.noise.accel_bias_extra.size() == 1);
  CHECK(sc.noise.accel_bias_extra[0].x() == doctest::Approx(0.02));
}

TEST_CASE("streams CSV round trip") {
  const GroundTruth gt = quick_lap(5.0, 40.0, 2.0);
  NoiseConfig noise;
  MountConfig mounts;
  mounts.imus.resize(2);
  const SensorStreams s = synthesize_sensors(gt, noise, mounts);

  const std::string path =
      (std::filesystem::temp_directory_path() / "vdse_streams_test.csv")
          .string();
  write_streams_csv(path, s);
  SensorStreams r = read_streams_csv(path);
  // The file is time-ordered; bring both sides into the same order.
  auto by_time_source = [](const ImuSample& a, const ImuSample& b) {
    if (a.t != b.t) return a.t < b.t;
    return a.source_id < b.source_id;
  };
  SensorStreams sorted = s;
  std::stable_sort(sorted.imu.begin(), sorted.imu.end(), by_time_source);
  const SensorStreams& ss = sorted;
  REQUIRE(r.imu.size() == ss.imu.size());
  REQUIRE(r.gnss.size() == ss.gnss.size());
  REQUIRE(r.wheels.size() == ss.wheels.size());
  REQUIRE(r.actuation.size() == ss.actuation.size());
  CHECK((r.imu[100].accel - ss.imu[100].accel).norm() < 1e-9);
  CHECK((r.gnss[5].pos - ss.gnss[5].pos).norm() < 1e-9);
  CHECK(r.gnss[5].rtk_status == ss.gnss[5].rtk_status);
  std::filesystem::remove(path);
}

TEST_CASE("ground truth CSV round trip") {
  const GroundTruth gt = quick_lap(5.0, 40.0, 1.0);
  const std::string path =
      (std::filesystem::temp_directory_path() / "vdse_gt_test.csv").string();
  write_ground_truth_csv(path, gt);
  const GroundTruth r = read_ground_truth_csv(path);
  REQUIRE(r.samples.size() == gt.samples.size());
  CHECK(r.dt == doctest::Approx(gt.dt));
  CHECK((r.samples[50].pos - gt.samples[50].pos).norm() < 1e-9);
  CHECK((r.samples[50].vel - gt.samples[50].vel).norm() < 1e-9);
  CHECK(r.samples[50].wheels.fl ==
        doctest::Approx(gt.samples[50].wheels.fl));
  std::filesystem::remove(path);
}
