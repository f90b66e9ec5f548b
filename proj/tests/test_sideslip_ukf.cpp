#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "vdse/sideslip_ukf.hpp"

#include <random>

using namespace vdse;

namespace {

VehicleParams test_params() {
  VehicleParams p;
  p.dist_cog_front = 1.6;
  p.dist_cog_rear = 1.4;
  p.track_front = 1.6;
  p.mass = 750.0;
  p.yaw_inertia = 1000.0;
  p.r_dyn_front = 0.3;
  p.r_dyn_rear = 0.3;
  return p;
}

SideslipUkf make_ukf(SideslipUkfConfig cfg = {}) {
  return SideslipUkf(cfg, test_params());
}

}  // namespace

TEST_CASE("magic formula odd function with slope BCD at the origin") {
  const MagicFormulaCoeffs mf{9.5, 1.55, 1.1, 0.97};
  CHECK(magic_formula(0.0, mf) == 0.0);

  // Slope at 0 equals B*C*D, against a central finite difference.
  const double h = 1e-7;
  const double fd =
      (magic_formula(h, mf) - magic_formula(-h, mf)) / (2.0 * h);
  const double bcd = mf.b * mf.c * mf.d;
  CHECK(std::abs(fd - bcd) / bcd < 1e-6);

  for (double x : {0.01, 0.05, 0.2, 0.7, 2.0}) {
    CHECK(magic_formula(-x, mf) ==
          doctest::Approx(-magic_formula(x, mf)).epsilon(1e-14));
  }
}

TEST_CASE("axle normal loads") {
  VehicleParams p = test_params();
  double fz_f, fz_r;
  axle_normal_loads(p, 0.0, fz_f, fz_r);
  CHECK(fz_f == doctest::Approx(750.0 * 9.81 * 1.4 / 3.0));  // 3433.5 N
  CHECK(fz_f == doctest::Approx(3433.5));
  CHECK(fz_r == doctest::Approx(750.0 * 9.81 * 1.6 / 3.0));

  // Equal split for a centered COG.
  p.dist_cog_front = p.dist_cog_rear = 1.5;
  axle_normal_loads(p, 0.0, fz_f, fz_r);
  CHECK(fz_f == doctest::Approx(fz_r));

  // Longitudinal transfer shifts load rearward under acceleration.
  p = test_params();
  p.cog_height = 0.3;
  double fz_f_acc, fz_r_acc;
  axle_normal_loads(p, 5.0, fz_f_acc, fz_r_acc);
  axle_normal_loads(p, 0.0, fz_f, fz_r);
  CHECK(fz_f - fz_f_acc == doctest::Approx(750.0 * 5.0 * 0.3 / 3.0));
  CHECK(fz_f - fz_f_acc == doctest::Approx(375.0));
  CHECK(fz_r_acc - fz_r == doctest::Approx(375.0));
}

TEST_CASE("ukf predict reduces to (a_x, -w_z) at zero slip on flat road") {
  SideslipUkfConfig cfg;
  cfg.q_v = 0.0;
  cfg.q_beta = 0.0;
  SideslipUkf ukf = make_ukf(cfg);
  ukf.reset({40.0, 0.0}, 0.0);

  ImuSample u;
  u.accel = Vec3(2.5, 0.0, kGravity);
  u.omega = Vec3(0.0, 0.0, 0.2);
  const double dt = 0.008;
  ukf.predict(u, {0.0, 0.0}, dt);

  CHECK(ukf.state().v == doctest::Approx(40.0 + dt * 2.5).epsilon(1e-9));
  CHECK(ukf.state().beta == doctest::Approx(-dt * 0.2).epsilon(1e-6));
}

TEST_CASE("ukf predict holds below minimum speed and inflates P") {
  SideslipUkf ukf = make_ukf();
  ukf.reset({2.0, 0.05}, 0.0);
  const Mat2 p_before = ukf.cov();
  ImuSample u;
  u.accel = Vec3(1.0, 3.0, kGravity);
  ukf.predict(u, {0.0, 0.0}, 0.008);
  CHECK(ukf.holding());
  CHECK(ukf.state().v == 2.0);
  CHECK(ukf.state().beta == 0.05);
  CHECK(ukf.cov()(0, 0) > p_before(0, 0));
  CHECK_FALSE(ukf.make_packet(0.008).has_value());
}

TEST_CASE("ukf predict equilibrium constructed so beta_dot = 0") {
  // Pick (v, beta, roll) and solve the beta equation for w_z, and the v
  // equation for a_x, so the state is a fixed point of the dynamics.
  const double v = 50.0, beta = deg2rad(3.0), roll = deg2rad(20.0);
  const double ay = 8.0;
  const double ay_eff = ay - kGravity * std::sin(roll);
  // v_dot = 0 requires cos(b) ax_eff = -sin(b) ay_eff.
  const double ax_eff = -std::tan(beta) * ay_eff;
  // beta_dot = 0 then gives w_z = (cos b * ay_eff - sin b * ax_eff) / v.
  const double wz =
      (-std::sin(beta) * ax_eff + std::cos(beta) * ay_eff) / v;

  SideslipUkfConfig cfg;
  cfg.q_v = 0.0;
  cfg.q_beta = 0.0;
  SideslipUkf ukf = make_ukf(cfg);
  ukf.reset({v, beta}, 0.0);

  ImuSample u;
  u.accel = Vec3(ax_eff, ay, kGravity);
  u.omega = Vec3(0.0, 0.0, wz);
  for (int i = 0; i < 10; ++i) ukf.predict(u, {roll, 0.0}, 0.008);

  CHECK(ukf.state().v == doctest::Approx(v).epsilon(1e-9));
  CHECK(std::abs(ukf.state().beta - beta) < 1e-9);
}

TEST_CASE("ukf mean propagation matches a Monte Carlo of the same ODE") {
  const double v0 = 45.0, beta0 = deg2rad(3.0), roll = deg2rad(20.0);
  const double dt = 0.01;
  SideslipUkfConfig cfg;
  cfg.q_v = 0.0;
  cfg.q_beta = 0.0;
  cfg.init_v_var = 1.0;
  cfg.init_beta_var = deg2rad(2.0) * deg2rad(2.0);
  SideslipUkf ukf = make_ukf(cfg);
  ukf.reset({v0, beta0}, 0.0);

  ImuSample u;
  u.accel = Vec3(1.5, 7.0, kGravity);
  u.omega = Vec3(0.0, 0.0, 0.15);
  const RoadAngles road{roll, deg2rad(1.0)};
  ukf.predict(u, road, dt);

  const double ax_eff = u.accel.x() + kGravity * std::sin(road.pitch);
  const double ay_eff =
      u.accel.y() - kGravity * std::sin(road.roll) * std::cos(road.pitch);
  std::mt19937_64 rng(12345);
  std::normal_distribution<double> nv(0.0, std::sqrt(cfg.init_v_var));
  std::normal_distribution<double> nb(0.0, std::sqrt(cfg.init_beta_var));
  const int n = 1000000;
  double sum_v = 0.0, sum_b = 0.0, sq_v = 0.0, sq_b = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = v0 + nv(rng);
    const double b = beta0 + nb(rng);
    const double cb = std::cos(b), sb = std::sin(b);
    const double v_next = v + dt * (cb * ax_eff + sb * ay_eff);
    const double b_next =
        b + dt * ((-sb * ax_eff + cb * ay_eff) / v - u.omega.z());
    sum_v += v_next;
    sum_b += b_next;
    sq_v += v_next * v_next;
    sq_b += b_next * b_next;
  }
  const double mc_v = sum_v / n;
  const double mc_b = sum_b / n;
  const double se_v = std::sqrt((sq_v / n - mc_v * mc_v) / n);
  const double se_b = std::sqrt((sq_b / n - mc_b * mc_b) / n);

  CHECK(std::abs(ukf.state().v - mc_v) < 3.0 * se_v);
  CHECK(std::abs(ukf.state().beta - mc_b) < 3.0 * se_b);
}

TEST_CASE("beta prediction depends only on the effective sums") {
  // a_x + g sin(theta) unchanged => identical propagation.
  SideslipUkfConfig cfg;
  SideslipUkf a = make_ukf(cfg), b = make_ukf(cfg);
  a.reset({40.0, deg2rad(2.0)}, 0.0);
  b.reset({40.0, deg2rad(2.0)}, 0.0);

  const double theta = deg2rad(4.0);
  ImuSample ua;
  ua.accel = Vec3(2.0, 5.0, kGravity);
  ua.omega = Vec3(0, 0, 0.1);
  ImuSample ub = ua;
  ub.accel.x() = 2.0 - kGravity * std::sin(theta);

  a.predict(ua, {0.0, 0.0}, 0.008);
  b.predict(ub, {0.0, theta}, 0.008);
  CHECK(a.state().v == doctest::Approx(b.state().v).epsilon(1e-12));
  CHECK(a.state().beta == doctest::Approx(b.state().beta).epsilon(1e-12));
}

TEST_CASE("sigma point recombination recovers an untransformed Gaussian") {
  // With zero input and zero rates the dynamics are the identity at
  // beta = 0, so the unscented recombination must return the prior.
  SideslipUkfConfig cfg;
  cfg.q_v = 0.0;
  cfg.q_beta = 0.0;
  SideslipUkf ukf = make_ukf(cfg);
  ukf.reset({30.0, 0.0}, 0.0);
  const Mat2 p0 = ukf.cov();

  ImuSample u;
  u.accel = Vec3::Zero();
  u.omega = Vec3::Zero();
  ukf.predict(u, {0.0, 0.0}, 0.008);

  CHECK(ukf.state().v == doctest::Approx(30.0).epsilon(1e-12));
  CHECK(std::abs(ukf.state().beta) < 1e-14);
  CHECK((ukf.cov() - p0).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("measurement model simple points") {
  SideslipUkf ukf = make_ukf();
  UkfInputs in;
  in.wheels.fl = in.wheels.fr = 42.0 / 0.3;
  in.wheels.rl = in.wheels.rr = 42.0 / 0.3;

  SUBCASE("zero steering, zero slip angle: speed rows equal v") {
    const Vec6 h = ukf.measurement_model({42.0, 0.0}, in);
    CHECK(h(0) == doctest::Approx(42.0));
    CHECK(h(1) == doctest::Approx(42.0));
    // Wheels spin exactly with the state speed: all slips are zero.
    CHECK(h(2) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(h(3) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(h(4) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(h(5) == doctest::Approx(0.0).epsilon(1e-9));
  }

  SUBCASE("constructed slips match a scalar oracle") {
    const double v = 50.0, beta = deg2rad(2.0), delta = deg2rad(5.0);
    const double wz = 0.3;
    in.act.steer_front = delta;
    in.imu.omega = Vec3(0, 0, wz);
    in.imu.accel = Vec3::Zero();
    in.wheels.fl = in.wheels.fr = 147.0;
    in.wheels.rl = in.wheels.rr = 155.0;

    const VehicleParams p = test_params();
    const double v_fa =
        v * std::cos(delta - beta) + p.dist_cog_front * wz * std::sin(delta);
    const double vx = v * std::cos(beta), vy = v * std::sin(beta);
    const double alpha_f =
        delta - std::atan((vy + p.dist_cog_front * wz) / vx);
    const double alpha_r =
        -std::atan((vy - p.dist_cog_rear * wz) / vx);
    const double sx_f = (147.0 * 0.3 - v_fa) / v_fa;
    const double sx_r = (155.0 * 0.3 - vx) / vx;
    const double fz_f = 750.0 * 9.81 * 1.4 / 3.0;
    const double fz_r = 750.0 * 9.81 * 1.6 / 3.0;

    const Vec6 h = ukf.measurement_model({v, beta}, in);
    CHECK(h(0) == doctest::Approx(v_fa).epsilon(1e-12));
    CHECK(h(2) ==
          doctest::Approx(fz_f * magic_formula(sx_f, p.mf_long_front)));
    CHECK(h(3) ==
          doctest::Approx(fz_r * magic_formula(sx_r, p.mf_long_rear)));
    CHECK(h(4) ==
          doctest::Approx(fz_f * magic_formula(alpha_f, p.mf_lat_front)));
    CHECK(h(5) ==
          doctest::Approx(fz_r * magic_formula(alpha_r, p.mf_lat_rear)));
  }
}

TEST_CASE("virtual measurement rows") {
  SideslipUkf ukf = make_ukf();
  UkfInputs in;

  SUBCASE("straight coasting leaves only the wheel rows") {
    in.wheels = {0.0, 120.0, 120.0, 118.0, 118.0};
    const Vec6 z = ukf.virtual_measurements(in);
    CHECK(z(0) == doctest::Approx(120.0 * 0.3));
    CHECK(z(1) == doctest::Approx(120.0 * 0.3));
    CHECK(z(2) == 0.0);
    CHECK(z(3) == 0.0);
    CHECK(z(4) == 0.0);
    CHECK(z(5) == 0.0);
  }

  SUBCASE("front brake torque to longitudinal force") {
    in.act.brake_fl = 300.0;
    in.act.brake_fr = 300.0;
    const Vec6 z = ukf.virtual_measurements(in);
    CHECK(z(2) == doctest::Approx(2000.0));
  }

  SUBCASE("lateral force rows from planar dynamics") {
    in.imu.accel = Vec3(0.0, 10.0, 0.0);
    const Vec6 z = ukf.virtual_measurements(in);
    CHECK(z(4) == doctest::Approx(3500.0));  // a_y l_r m / l
    CHECK(z(5) == doctest::Approx(4000.0));  // a_y l_f m / l
  }

  SUBCASE("yaw-rate correction splits the wheel rows") {
    in.wheels = {0.0, 100.0, 100.0, 100.0, 100.0};
    in.imu.omega = Vec3(0, 0, 0.5);
    const Vec6 z = ukf.virtual_measurements(in);
    CHECK(z(0) == doctest::Approx(30.0 + 0.5 * 0.8));
    CHECK(z(1) == doctest::Approx(30.0 - 0.5 * 0.8));
  }
}

TEST_CASE("adaptive covariance endpoints and monotonicity") {
  SideslipUkfConfig cfg;
  SideslipUkf ukf = make_ukf(cfg);

  ImuSample quiet;
  quiet.accel = Vec3::Zero();
  const Mat6 r_low = ukf.adaptive_noise(quiet);
  CHECK(r_low(0, 0) ==
        doctest::Approx(cfg.sigma_wheel_min * cfg.sigma_wheel_min));
  CHECK(r_low(2, 2) ==
        doctest::Approx(cfg.sigma_force_max * cfg.sigma_force_max));

  ImuSample saturated;
  saturated.accel = Vec3(20.0, 20.0, 0.0);
  const Mat6 r_high = ukf.adaptive_noise(saturated);
  CHECK(r_high(0, 0) ==
        doctest::Approx(cfg.sigma_wheel_max * cfg.sigma_wheel_max));
  CHECK(r_high(2, 2) ==
        doctest::Approx(cfg.sigma_force_min * cfg.sigma_force_min));

  double prev_wheel = 0.0, prev_force = 1e18;
  for (double e = 0.0; e <= 12.0; e += 0.25) {
    ImuSample u;
    u.accel = Vec3(e, 0.0, 0.0);
    const Mat6 r = ukf.adaptive_noise(u);
    CHECK(r(0, 0) >= prev_wheel);
    CHECK(r(2, 2) <= prev_force);
    prev_wheel = r(0, 0);
    prev_force = r(2, 2);
  }
}

TEST_CASE("update with huge measurement noise leaves the state unchanged") {
  SideslipUkfConfig cfg;
  cfg.sigma_wheel_min = cfg.sigma_wheel_max = 1e6;
  cfg.sigma_force_min = cfg.sigma_force_max = 1e9;
  SideslipUkf ukf = make_ukf(cfg);
  ukf.reset({40.0, deg2rad(1.0)}, 0.0);

  UkfInputs in;
  in.wheels = {0.0, 200.0, 200.0, 200.0, 200.0};
  ukf.update(in);
  CHECK(ukf.state().v == doctest::Approx(40.0).epsilon(1e-6));
  CHECK(ukf.state().beta == doctest::Approx(deg2rad(1.0)).epsilon(1e-6));
}

TEST_CASE("near-linear update matches two-observation Gaussian algebra") {
  // At beta = 0 with zero steering and yaw rate, the two speed rows are a
  // direct observation of v; force rows are switched off via huge noise.
  SideslipUkfConfig cfg;
  cfg.sigma_wheel_min = cfg.sigma_wheel_max = 0.5;
  cfg.sigma_force_min = cfg.sigma_force_max = 1e9;
  cfg.init_v_var = 4.0;
  cfg.init_beta_var = 1e-12;  // pin beta so the problem is scalar
  SideslipUkf ukf = make_ukf(cfg);
  const double v0 = 40.0;
  ukf.reset({v0, 0.0}, 0.0);

  const double v_meas = 41.0;
  UkfInputs in;
  in.wheels.fl = in.wheels.fr = v_meas / 0.3;
  in.wheels.rl = in.wheels.rr = v0 / 0.3;
  ukf.update(in);

  // Two independent scalar observations with variance s2.
  const double s2 = 0.5 * 0.5, p0 = 4.0;
  const double expected =
      (v0 / p0 + 2.0 * v_meas / s2) / (1.0 / p0 + 2.0 / s2);
  CHECK(ukf.state().v == doctest::Approx(expected).epsilon(1e-6));
}

TEST_CASE("emitted packet keeps vx^2 + vy^2 = v^2 exactly") {
  SideslipUkf ukf = make_ukf();
  ukf.reset({55.0, deg2rad(4.0)}, 0.0);
  const auto pkt = ukf.make_packet(0.0);
  REQUIRE(pkt.has_value());
  const double vx = pkt->value(0), vy = pkt->value(1);
  CHECK(vx * vx + vy * vy == doctest::Approx(55.0 * 55.0).epsilon(1e-14));
  CHECK(pkt->kind == MeasurementKind::kVelVirtual);
}
