#include "vdse/sim.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace vdse {

namespace {

/// Body roll/pitch of a vehicle with the given yaw sitting on a surface
/// with upward normal n.
EulerAngles angles_from_normal_yaw(const Vec3& n, double yaw) {
  const double cy = std::cos(yaw), sy = std::sin(yaw);
  const Vec3 local(cy * n.x() + sy * n.y(), -sy * n.x() + cy * n.y(), n.z());
  EulerAngles a;
  a.roll = std::asin(std::clamp(-local.y(), -1.0, 1.0));
  a.pitch = std::atan2(local.x(), local.z());
  a.yaw = yaw;
  return a;
}

/// Cosine blend 0 -> 1 -> 0 with flat plateau; u in [0, 1].
double bank_blend(double u, double ramp_fraction) {
  const double f = std::clamp(ramp_fraction, 0.01, 0.5);
  if (u < f) return 0.5 * (1.0 - std::cos(kPi * u / f));
  if (u > 1.0 - f) return 0.5 * (1.0 - std::cos(kPi * (1.0 - u) / f));
  return 1.0;
}

double mf_peak_slip(const MagicFormulaCoeffs& mf) {
  // Coarse scan for the curve peak; the formula has a single maximum for
  // the C/E ranges accepted by VehicleParams.
  double best_x = 0.05, best_f = 0.0;
  for (double x = 1e-3; x <= 1.0; x += 1e-3) {
    const double f = magic_formula(x, mf);
    if (f > best_f) {
      best_f = f;
      best_x = x;
    }
  }
  return best_x;
}

/// Inverts the rising branch of the Magic Formula; the peak location is
/// precomputed once per coefficient set.
struct MfInverter {
  explicit MfInverter(const MagicFormulaCoeffs& coeffs)
      : mf(coeffs),
        x_peak(mf_peak_slip(coeffs)),
        f_peak(magic_formula(x_peak, coeffs)) {}

  double operator()(double f_norm) const {
    if (f_norm == 0.0) return 0.0;
    const double sign = f_norm > 0.0 ? 1.0 : -1.0;
    const double target = std::min(std::abs(f_norm), 0.98 * f_peak);
    double lo = 0.0, hi = x_peak;
    for (int i = 0; i < 50; ++i) {
      const double mid = 0.5 * (lo + hi);
      if (magic_formula(mid, mf) < target)
        lo = mid;
      else
        hi = mid;
    }
    return sign * 0.5 * (lo + hi);
  }

  MagicFormulaCoeffs mf;
  double x_peak;
  double f_peak;
};

double interp(double t, double t0, double dt, const std::vector<double>& v) {
  const double idx = (t - t0) / dt;
  const auto lo = static_cast<std::size_t>(
      std::clamp(std::floor(idx), 0.0, static_cast<double>(v.size() - 1)));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double frac = std::clamp(idx - static_cast<double>(lo), 0.0, 1.0);
  return v[lo] + (v[hi] - v[lo]) * frac;
}

}  // namespace

TrackModel build_oval(const OvalSpec& spec) {
  if (spec.bank_max > deg2rad(25.0) + 1e-12)
    throw InvalidGeometry("oval bank above 25 deg");
  if (spec.straight_len <= 0.0 || spec.turn_radius <= 10.0 ||
      spec.width <= 0.0 || spec.sample_ds <= 0.0)
    throw InvalidGeometry("oval dimensions must be positive");

  const double arc_len = kPi * spec.turn_radius;
  const double total = 2.0 * spec.straight_len + 2.0 * arc_len;

  std::vector<TrackSample> samples;
  samples.reserve(static_cast<std::size_t>(total / spec.sample_ds) + 8);

  // Clockwise stadium: top straight (+x), right arc, bottom straight (-x),
  // left arc. Right-hand turns carry positive bank.
  const double r = spec.turn_radius;
  const double half = 0.5 * spec.straight_len;
  for (double s = 0.0; s < total - 0.5 * spec.sample_ds;
       s += spec.sample_ds) {
    TrackSample smp;
    smp.width = spec.width;
    smp.slope = 0.0;
    double rem = s;
    if (rem < spec.straight_len) {
      smp.pos = Vec3(-half + rem, r, 0.0);
      smp.heading = 0.0;
      smp.curvature = 0.0;
      smp.bank = 0.0;
    } else if ((rem -= spec.straight_len) < arc_len) {
      const double phase = rem / r;  // 0..pi, turning right
      smp.pos = Vec3(half + r * std::sin(phase), r * std::cos(phase), 0.0);
      smp.heading = wrap_angle(-phase);
      smp.curvature = -1.0 / r;
      smp.bank = spec.bank_max * bank_blend(rem / arc_len,
                                            spec.ramp_fraction);
    } else if ((rem -= arc_len) < spec.straight_len) {
      smp.pos = Vec3(half - rem, -r, 0.0);
      smp.heading = kPi;
      smp.curvature = 0.0;
      smp.bank = 0.0;
    } else {
      rem -= spec.straight_len;
      const double phase = rem / r;
      smp.pos = Vec3(-half - r * std::sin(phase), -r * std::cos(phase), 0.0);
      smp.heading = wrap_angle(kPi - phase);
      smp.curvature = -1.0 / r;
      smp.bank = spec.bank_max * bank_blend(rem / arc_len,
                                            spec.ramp_fraction);
    }
    samples.push_back(smp);
  }
  return TrackModel(std::move(samples));
}

TrackModel build_oval(double bank_max, double straight_len,
                      double turn_radius, double width) {
  OvalSpec spec;
  spec.bank_max = bank_max;
  spec.straight_len = straight_len;
  spec.turn_radius = turn_radius;
  spec.width = width;
  return build_oval(spec);
}

double SpeedProfile::at(double s, double track_length) const {
  if (knot_s.empty()) throw ConfigError("empty speed profile");
  if (knot_s.size() != knot_v.size())
    throw ConfigError("speed profile knot lists differ in length");
  double sw = std::fmod(s, track_length);
  if (sw < 0.0) sw += track_length;
  // Periodic piecewise-linear interpolation.
  std::size_t next = 0;
  while (next < knot_s.size() && knot_s[next] <= sw) ++next;
  const std::size_t i1 = next % knot_s.size();
  const std::size_t i0 = (next + knot_s.size() - 1) % knot_s.size();
  double s0 = knot_s[i0], s1 = knot_s[i1];
  if (s1 <= s0) s1 += track_length;
  double query = sw;
  if (query < s0) query += track_length;
  const double frac = (query - s0) / std::max(s1 - s0, 1e-9);
  return knot_v[i0] + (knot_v[i1] - knot_v[i0]) * frac;
}

RoadAngles road_angles_from_bounds(const TrackModel& track, double s,
                                   double yaw) {
  const Vec3 left = track.left_bound(s);
  const Vec3 right = track.right_bound(s);
  const Vec3 lateral = (left - right).normalized();
  const Vec3 normal = track.tangent(s).cross(lateral).normalized();
  const EulerAngles a = angles_from_normal_yaw(normal, yaw);
  return {a.roll, a.pitch};
}

GroundTruth simulate_lap(const TrackModel& track, const SpeedProfile& profile,
                         const VehicleParams& params, const SimOptions& opt) {
  params.validate();
  const double len = track.length();

  // Feasibility of the requested profile against the lateral budget.
  for (double s = 0.0; s < len; s += 5.0) {
    const TrackSample smp = track.at(s);
    const double v = profile.at(s, len);
    const double need = v * v * std::abs(smp.curvature);
    const double avail =
        opt.mu_budget * kGravity + kGravity * std::tan(std::abs(smp.bank));
    if (need > avail)
      throw InfeasibleProfile("speed profile exceeds lateral budget at s=" +
                              std::to_string(s));
  }

  const int stride = static_cast<int>(std::round(opt.dt_imu / opt.dt_fine));
  if (stride < 1 || std::abs(stride * opt.dt_fine - opt.dt_imu) > 1e-12)
    throw ConfigError("dt_imu must be an integer multiple of dt_fine");

  const int n_ticks = static_cast<int>(std::round(opt.duration / opt.dt_imu));
  const int n_fine = (n_ticks + 1) * stride;

  struct FineSample {
    Vec3 pos;
    EulerAngles angles;
    double vx, vy, wz;
    WheelSpeeds wheels;
    ActuationSample act;
  };
  std::vector<FineSample> fine(static_cast<std::size_t>(n_fine) + 1);

  // Start on the first straight with the profile speed, aligned with the
  // centerline.
  double s_hint = 0.0;
  Vec3 pos = track.centerline_point(0.0);
  double psi = track.at(0.0).heading;
  double vx = profile.at(0.0, len), vy = 0.0, wz = 0.0;
  double ax_prev = 0.0;

  const double lf = params.dist_cog_front, lr = params.dist_cog_rear;
  const double wheelbase = params.wheelbase();
  const MfInverter invert_front(params.mf_long_front);
  const MfInverter invert_rear(params.mf_long_rear);

  for (int i = 0; i <= n_fine; ++i) {
    const double t = i * opt.dt_fine;
    const FrenetCoord f = frenet_project(track, pos, s_hint);
    s_hint = f.s;
    const TrackSample smp = track.at(f.s);
    const EulerAngles body =
        angles_from_normal_yaw(track.surface_normal(f.s), psi);

    // Driver: curvature feedforward plus heading/lateral feedback.
    const double heading_err = wrap_angle(psi - smp.heading);
    double delta = std::atan(wheelbase * smp.curvature) -
                   opt.heading_gain * heading_err -
                   std::atan(opt.lateral_gain * f.d / std::max(vx, 10.0));
    delta = std::clamp(delta, -0.45, 0.45);

    const double v_ref = profile.at(f.s, len);
    double force_demand = params.mass * opt.speed_gain * (v_ref - vx);
    const double force_cap = 0.9 * opt.mu_budget * params.mass * kGravity;
    force_demand = std::clamp(force_demand, -force_cap, force_cap);

    double fz_front, fz_rear;
    axle_normal_loads(params, ax_prev, fz_front, fz_rear);

    double fx_front = 0.0, fx_rear = 0.0;
    ActuationSample act;
    act.t = t;
    act.steer_front = delta;
    if (force_demand >= 0.0) {
      fx_rear = force_demand;
      act.drive_rear = fx_rear * params.r_dyn_rear;
    } else {
      fx_front = opt.brake_bias_front * force_demand;
      fx_rear = force_demand - fx_front;
      act.brake_fl = act.brake_fr = 0.5 * fx_front * params.r_dyn_front;
      act.brake_rl = act.brake_rr = 0.5 * fx_rear * params.r_dyn_rear;
    }

    const double slip_x_front = invert_front(fx_front / fz_front);
    const double slip_x_rear = invert_rear(fx_rear / fz_rear);

    const double vx_div = std::max(vx, 3.0);
    const double alpha_f = delta - std::atan((vy + lf * wz) / vx_div);
    const double alpha_r = -std::atan((vy - lr * wz) / vx_div);
    const double fy_front = fz_front * magic_formula(alpha_f,
                                                     params.mf_lat_front);
    const double fy_rear = fz_rear * magic_formula(alpha_r,
                                                   params.mf_lat_rear);

    const Vec3 grav = gravity_in_body(body);
    const double cd = std::cos(delta), sd = std::sin(delta);
    const double vdot_x =
        (fx_front * cd - fy_front * sd + fx_rear) / params.mass + grav.x() +
        wz * vy;
    const double vdot_y =
        (fy_front * cd + fx_front * sd + fy_rear) / params.mass + grav.y() -
        wz * vx;
    const double wdot_z =
        (lf * (fy_front * cd + fx_front * sd) - lr * fy_rear) /
        params.yaw_inertia;

    // Wheel speeds from the axle-point speeds plus the commanded slip.
    const double v_abs = std::hypot(vx, vy);
    const double beta = std::atan2(vy, vx);
    const double v_fa = v_abs * std::cos(delta - beta) + lf * wz * sd;
    const double ht_f = 0.5 * params.track_front * cd;
    const double ht_r = 0.5 * params.track_rear;
    WheelSpeeds wheels;
    wheels.t = t;
    wheels.fl = (v_fa - wz * ht_f) * (1.0 + slip_x_front) / params.r_dyn_front;
    wheels.fr = (v_fa + wz * ht_f) * (1.0 + slip_x_front) / params.r_dyn_front;
    wheels.rl = (vx - wz * ht_r) * (1.0 + slip_x_rear) / params.r_dyn_rear;
    wheels.rr = (vx + wz * ht_r) * (1.0 + slip_x_rear) / params.r_dyn_rear;

    FineSample& out = fine[static_cast<std::size_t>(i)];
    out.pos = pos;
    out.angles = body;
    out.vx = vx;
    out.vy = vy;
    out.wz = wz;
    out.wheels = wheels;
    out.act = act;

    // Euler step of the plant.
    pos += opt.dt_fine * (body_to_nav(body) * Vec3(vx, vy, 0.0));
    vx += opt.dt_fine * vdot_x;
    vy += opt.dt_fine * vdot_y;
    wz += opt.dt_fine * wdot_z;
    psi = wrap_angle(psi + opt.dt_fine * wz);
    ax_prev = vdot_x - grav.x() - wz * vy;  // tire-force share of the x axis
  }

  // Consistency pass: resample at the IMU tick and synthesize the exact
  // discrete rates between tick states, then rebuild the position as the
  // same Euler-forward integral the estimator uses.
  GroundTruth gt;
  gt.dt = opt.dt_imu;
  gt.samples.resize(static_cast<std::size_t>(n_ticks));

  Vec3 p_acc = fine[0].pos;
  for (int k = 0; k < n_ticks; ++k) {
    const FineSample& a = fine[static_cast<std::size_t>(k) * stride];
    const FineSample& b = fine[static_cast<std::size_t>(k + 1) * stride];

    GroundTruthSample& s = gt.samples[static_cast<std::size_t>(k)];
    s.t = k * opt.dt_imu;
    s.angles = a.angles;
    s.vel = Vec3(a.vx, a.vy, 0.0);
    s.beta = std::atan2(a.vy, a.vx);
    s.wheels = a.wheels;
    s.wheels.t = s.t;
    s.act = a.act;
    s.act.t = s.t;
    s.pos = p_acc;

    const Vec3 d_angles(wrap_angle(b.angles.roll - a.angles.roll),
                        b.angles.pitch - a.angles.pitch,
                        wrap_angle(b.angles.yaw - a.angles.yaw));
    s.omega = euler_rate_matrix(a.angles).inverse() * (d_angles / opt.dt_imu);

    const Vec3 v_next(b.vx, b.vy, 0.0);
    s.accel = (v_next - s.vel) / opt.dt_imu + s.omega.cross(s.vel) -
              gravity_in_body(a.angles);

    p_acc += opt.dt_imu * (body_to_nav(a.angles) * s.vel);
  }
  return gt;
}

namespace {

bool in_window(double t, const std::vector<TimeWindow>& windows) {
  for (const auto& w : windows)
    if (t >= w.t0 && t <= w.t1) return true;
  return false;
}

double scheduled_sigma(double t, const NoiseConfig& noise) {
  for (const auto& w : noise.sigma_schedule)
    if (t >= w.t0 && t <= w.t1) return w.sigma;
  return noise.gnss_sigma;
}

RtkStatus status_for_sigma(double sigma) {
  if (sigma <= 0.05) return RtkStatus::kRtkFixed;
  if (sigma <= 0.5) return RtkStatus::kRtkFloat;
  return RtkStatus::kStandalone;
}

}  // namespace

SensorStreams synthesize_sensors(const GroundTruth& gt,
                                 const NoiseConfig& noise,
                                 const MountConfig& mounts) {
  SensorStreams out;
  if (gt.samples.empty()) return out;
  const double t0 = gt.samples.front().t;
  const double t_end = gt.samples.back().t;
  const double dt = gt.dt;
  const std::size_t n = gt.samples.size();

  const std::size_t n_imu = std::max<std::size_t>(mounts.imus.size(), 1);

  // Tick-aligned helper series for interpolation.
  std::vector<double> px(n), py(n), pz(n), yaw_x(n), yaw_y(n);
  std::vector<double> wfl(n), wfr(n), wrl(n), wrr(n), steer(n);
  std::vector<double> bfl(n), bfr(n), brl(n), brr(n), drv(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = gt.samples[i];
    px[i] = s.pos.x();
    py[i] = s.pos.y();
    pz[i] = s.pos.z();
    yaw_x[i] = std::cos(s.angles.yaw);
    yaw_y[i] = std::sin(s.angles.yaw);
    wfl[i] = s.wheels.fl;
    wfr[i] = s.wheels.fr;
    wrl[i] = s.wheels.rl;
    wrr[i] = s.wheels.rr;
    steer[i] = s.act.steer_front;
    bfl[i] = s.act.brake_fl;
    bfr[i] = s.act.brake_fr;
    brl[i] = s.act.brake_rl;
    brr[i] = s.act.brake_rr;
    drv[i] = s.act.drive_rear;
  }

  // IMU streams, one per mounted source.
  for (std::size_t src = 0; src < n_imu; ++src) {
    std::mt19937_64 rng(noise.seed * 1009 + src);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const ImuMount mount =
        src < mounts.imus.size() ? mounts.imus[src] : ImuMount{};
    const Vec3 accel_extra = src < noise.accel_bias_extra.size()
                                 ? noise.accel_bias_extra[src]
                                 : Vec3::Zero();
    const Vec3 gyro_extra = src < noise.gyro_bias_extra.size()
                                ? noise.gyro_bias_extra[src]
                                : Vec3::Zero();
    for (std::size_t i = 0; i < n; ++i) {
      const auto& s = gt.samples[i];
      const Vec3 omega_prev = gt.samples[i > 0 ? i - 1 : 0].omega;
      const Vec3 omega_next = gt.samples[std::min(i + 1, n - 1)].omega;
      const Vec3 omega_dot = (omega_next - omega_prev) / (2.0 * dt);

      ImuSample m;
      m.t = s.t;
      m.source_id = static_cast<int>(src);
      m.omega = s.omega + mount.gyro_bias + gyro_extra +
                noise.imu_gyro_sigma * Vec3(gauss(rng), gauss(rng),
                                            gauss(rng));
      m.accel = s.accel + omega_dot.cross(mount.lever_arm) +
                s.omega.cross(s.omega.cross(mount.lever_arm)) +
                mount.accel_bias + accel_extra +
                noise.imu_accel_sigma * Vec3(gauss(rng), gauss(rng),
                                             gauss(rng));
      if (noise.dropout_drift_accel != 0.0 &&
          in_window(s.t, noise.dropout_windows)) {
        m.accel.y() += noise.dropout_drift_accel;
      }
      out.imu.push_back(m);
    }
  }

  // GNSS receivers: 0 at 20 Hz with heading, 1 at 5 Hz.
  const double rates[2] = {1.0 / 20.0, 1.0 / 5.0};
  for (int rec = 0; rec < 2; ++rec) {
    std::mt19937_64 rng(noise.seed * 1009 + 100 + rec);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (double t = t0; t <= t_end + 1e-9; t += rates[rec]) {
      if (in_window(t, noise.dropout_windows)) continue;
      const double sigma = scheduled_sigma(t, noise);
      GnssFix fix;
      fix.t = t;
      fix.source_id = rec;
      fix.sigma = Vec3::Constant(sigma);
      fix.rtk_status = status_for_sigma(sigma);
      fix.pos = Vec3(interp(t, t0, dt, px), interp(t, t0, dt, py),
                     interp(t, t0, dt, pz)) +
                sigma * Vec3(gauss(rng), gauss(rng), gauss(rng));
      if (rec == 0) {
        fix.has_heading = true;
        fix.heading =
            wrap_angle(std::atan2(interp(t, t0, dt, yaw_y),
                                  interp(t, t0, dt, yaw_x)) +
                       noise.gnss_heading_sigma * gauss(rng));
      }
      out.gnss.push_back(fix);
    }
  }
  std::stable_sort(out.gnss.begin(), out.gnss.end(),
                   [](const GnssFix& a, const GnssFix& b) { return a.t < b.t; });

  // Wheel speeds and actuation at 100 Hz.
  {
    std::mt19937_64 rng(noise.seed * 1009 + 200);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (double t = t0; t <= t_end + 1e-9; t += 0.01) {
      WheelSpeeds w;
      w.t = t;
      w.fl = interp(t, t0, dt, wfl) + noise.wheel_sigma * gauss(rng);
      w.fr = interp(t, t0, dt, wfr) + noise.wheel_sigma * gauss(rng);
      w.rl = interp(t, t0, dt, wrl) + noise.wheel_sigma * gauss(rng);
      w.rr = interp(t, t0, dt, wrr) + noise.wheel_sigma * gauss(rng);
      out.wheels.push_back(w);

      ActuationSample a;
      a.t = t;
      a.steer_front = interp(t, t0, dt, steer);
      a.brake_fl = interp(t, t0, dt, bfl);
      a.brake_fr = interp(t, t0, dt, bfr);
      a.brake_rl = interp(t, t0, dt, brl);
      a.brake_rr = interp(t, t0, dt, brr);
      a.drive_rear = interp(t, t0, dt, drv);
      out.actuation.push_back(a);
    }
  }
  return out;
}

namespace {

std::vector<TimeWindow> parse_windows(const std::string& text) {
  std::vector<TimeWindow> out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos)
      throw ConfigError("window item must be t0:t1, got: " + item);
    TimeWindow w;
    w.t0 = std::stod(item.substr(0, colon));
    w.t1 = std::stod(item.substr(colon + 1));
    if (w.t1 <= w.t0) throw ConfigError("window must have t1 > t0");
    out.push_back(w);
  }
  return out;
}

std::vector<SigmaWindow> parse_sigma_windows(const std::string& text) {
  std::vector<SigmaWindow> out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    std::istringstream fields(item);
    std::string a, b, c;
    if (!std::getline(fields, a, ':') || !std::getline(fields, b, ':') ||
        !std::getline(fields, c, ':'))
      throw ConfigError("sigma window item must be t0:t1:sigma");
    SigmaWindow w;
    w.t0 = std::stod(a);
    w.t1 = std::stod(b);
    w.sigma = std::stod(c);
    out.push_back(w);
  }
  return out;
}

Vec3 parse_vec3(const std::vector<double>& v, const std::string& key) {
  if (v.size() != 3) throw ConfigError(key + " must have 3 components");
  return Vec3(v[0], v[1], v[2]);
}

}  // namespace

Scenario load_scenario(const Config& cfg) {
  Scenario sc;
  sc.name = cfg.get_string("scenario.name", "scenario");

  sc.oval.bank_max = deg2rad(cfg.get_double("track.bank_max_deg", 0.0));
  sc.oval.straight_len = cfg.get_double("track.straight_len", 500.0);
  sc.oval.turn_radius = cfg.get_double("track.turn_radius", 300.0);
  sc.oval.width = cfg.get_double("track.width", 15.0);
  sc.oval.ramp_fraction = cfg.get_double("track.ramp_fraction", 0.35);
  sc.oval.sample_ds = cfg.get_double("track.sample_ds", 0.5);

  sc.profile.knot_s = cfg.get_doubles("profile.knots_s");
  sc.profile.knot_v = cfg.get_doubles("profile.knots_v");

  sc.sim.duration = cfg.get_double("sim.duration", 60.0);
  sc.sim.dt_imu = cfg.get_double("sim.dt_imu", 0.008);
  sc.sim.dt_fine = cfg.get_double("sim.dt_fine", 0.001);
  sc.sim.mu_budget = cfg.get_double("sim.mu_budget", 1.2);
  sc.sim.speed_gain = cfg.get_double("sim.speed_gain", 0.8);
  sc.sim.heading_gain = cfg.get_double("sim.heading_gain", 1.2);
  sc.sim.lateral_gain = cfg.get_double("sim.lateral_gain", 2.0);

  sc.noise.gnss_sigma = cfg.get_double("noise.gnss_sigma", 0.02);
  sc.noise.gnss_heading_sigma =
      deg2rad(cfg.get_double("noise.gnss_heading_sigma_deg", 0.3));
  sc.noise.imu_accel_sigma = cfg.get_double("noise.imu_accel_sigma", 0.05);
  sc.noise.imu_gyro_sigma = cfg.get_double("noise.imu_gyro_sigma", 0.002);
  sc.noise.wheel_sigma = cfg.get_double("noise.wheel_sigma", 0.2);
  sc.noise.dropout_drift_accel =
      cfg.get_double("noise.dropout_drift_accel", 0.0);
  sc.noise.seed = static_cast<std::uint64_t>(cfg.get_int("noise.seed", 1));
  if (cfg.has("noise.dropout_windows"))
    sc.noise.dropout_windows =
        parse_windows(cfg.get_string("noise.dropout_windows"));
  if (cfg.has("noise.sigma_windows"))
    sc.noise.sigma_schedule =
        parse_sigma_windows(cfg.get_string("noise.sigma_windows"));
  for (int i = 0; i < 8; ++i) {
    const std::string akey = "noise.accel_bias_extra" + std::to_string(i);
    const std::string gkey = "noise.gyro_bias_extra" + std::to_string(i);
    if (cfg.has(akey))
      sc.noise.accel_bias_extra.push_back(
          parse_vec3(cfg.get_doubles(akey), akey));
    if (cfg.has(gkey))
      sc.noise.gyro_bias_extra.push_back(
          parse_vec3(cfg.get_doubles(gkey), gkey));
  }
  return sc;
}

}  // namespace vdse
