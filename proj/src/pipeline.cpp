#include "vdse/pipeline.hpp"

#include <algorithm>
#include <chrono>

namespace vdse {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_us(Clock::time_point t0) {
  return std::chrono::duration<double, std::micro>(Clock::now() - t0).count();
}

}  // namespace

EstimatorPipeline::EstimatorPipeline(PipelineConfig cfg, VehicleParams params,
                                     MountConfig mounts,
                                     std::optional<TrackModel> track)
    : cfg_(std::move(cfg)),
      params_(std::move(params)),
      mounts_(std::move(mounts)),
      track_(std::move(track)) {
  params_.validate();
  const bool needs_track =
      cfg_.ekf.mode == EstimatorMode::kPlanarWithBankMap ||
      cfg_.ekf.mode == EstimatorMode::kThreedWithAngleMap;
  if (needs_track && !track_)
    throw ConfigError("map-based estimator mode requires a track model");
}

PipelineResult EstimatorPipeline::run(const SensorStreams& streams) {
  PipelineResult out;

  std::vector<ImuSample> imu = streams.imu;
  std::stable_sort(imu.begin(), imu.end(),
                   [](const ImuSample& a, const ImuSample& b) {
                     if (a.t != b.t) return a.t < b.t;
                     return a.source_id < b.source_id;
                   });
  std::vector<GnssFix> gnss = streams.gnss;
  std::stable_sort(gnss.begin(), gnss.end(),
                   [](const GnssFix& a, const GnssFix& b) { return a.t < b.t; });
  std::vector<WheelSpeeds> wheels = streams.wheels;
  std::stable_sort(wheels.begin(), wheels.end(),
                   [](const WheelSpeeds& a, const WheelSpeeds& b) {
                     return a.t < b.t;
                   });
  std::vector<ActuationSample> acts = streams.actuation;
  std::stable_sort(acts.begin(), acts.end(),
                   [](const ActuationSample& a, const ActuationSample& b) {
                     return a.t < b.t;
                   });

  Ekf3d ekf(cfg_.ekf);
  SideslipUkf ukf(cfg_.ukf, params_);
  GnssQualityTracker tracker(cfg_.acor);
  ImuConditioner conditioner(mounts_, cfg_.fir_taps, cfg_.dt);

  std::size_t gnss_cursor = 0, wheel_cursor = 0, act_cursor = 0;
  WheelSpeeds latest_wheels;
  ActuationSample latest_act;
  bool have_wheels = false;
  bool ukf_ready = false;
  double last_fix_t = 0.0;
  bool have_fix = false;
  RoadAngles road_delayed;  // EKF posterior of the previous tick
  std::optional<double> s_hint;
  int ukf_resets_seen = 0;

  const bool use_map = cfg_.ekf.mode == EstimatorMode::kPlanarWithBankMap ||
                       cfg_.ekf.mode == EstimatorMode::kThreedWithAngleMap;
  const bool emit_ref = cfg_.ekf.mode == EstimatorMode::kFull3d;

  for (std::size_t i = 0; i < imu.size();) {
    const double t_k = imu[i].t;
    std::vector<ImuSample> tick;
    while (i < imu.size() && imu[i].t <= t_k + 1e-9) tick.push_back(imu[i++]);

    if (!ekf.initialized()) {
      // Consume due fixes until the first RTK-fixed one seeds the state.
      while (gnss_cursor < gnss.size() && gnss[gnss_cursor].t <= t_k + 1e-9) {
        const GnssFix& fix = gnss[gnss_cursor++];
        if (fix.rtk_status == RtkStatus::kRtkFixed) {
          ekf.initialize(fix);
          last_fix_t = fix.t;
          have_fix = true;
          break;
        }
      }
      continue;
    }

    const ImuConditioner::Output cond = conditioner.step(tick, t_k);
    if (cond.imu_loss) ++out.imu_loss_ticks;

    std::uint32_t flags = 0;

    // Map lookups use the current estimate; the hint keeps the Frenet
    // query local across the lap.
    if (use_map) {
      const FrenetCoord f =
          frenet_project(*track_, ekf.estimate().state.pos, s_hint);
      s_hint = f.s;
      const RoadAngles map = road_angles_from_bounds(
          *track_, f.s, ekf.estimate().state.angles.yaw);
      ekf.set_map_angles(map.roll, map.pitch);
    }

    if (!cond.imu_loss) {
      auto t0 = Clock::now();
      ekf.predict(cond.fused, cfg_.dt);
      out.ekf_predict.add(elapsed_us(t0));

      if (cfg_.provider == VelocityProvider::kUkf && ukf_ready) {
        t0 = Clock::now();
        ukf.predict(cond.fused, road_delayed, cfg_.dt);
        out.ukf_step.add(elapsed_us(t0));
      }
    } else {
      flags |= kFlagImuLoss;
    }

    const Vec3 pos_after_predict = ekf.estimate().state.pos;

    std::vector<MeasurementPacket> packets;

    // Internally generated angle pseudo-measurements.
    if (!cond.imu_loss && emit_ref) {
      auto pkt = ekf.make_reference_packet(cond.fused);
      if (pkt) {
        packets.push_back(*pkt);
      } else {
        flags |= kFlagRefInvalid;
      }
    }
    if (cfg_.ekf.mode == EstimatorMode::kThreedWithAngleMap) {
      const RoadAngles map = road_angles_from_bounds(
          *track_, s_hint.value_or(0.0), ekf.estimate().state.angles.yaw);
      MeasurementPacket pkt;
      pkt.kind = MeasurementKind::kRefAngles;
      pkt.value = Eigen::Vector2d(map.roll, map.pitch);
      pkt.noise = Eigen::Matrix2d::Identity() * cfg_.map_angle_sigma *
                  cfg_.map_angle_sigma;
      pkt.t = t_k;
      packets.push_back(pkt);
    }

    // Wheel-speed / actuation driven virtual velocity.
    while (act_cursor < acts.size() && acts[act_cursor].t <= t_k + 1e-9)
      latest_act = acts[act_cursor++];
    bool new_wheels = false;
    while (wheel_cursor < wheels.size() &&
           wheels[wheel_cursor].t <= t_k + 1e-9) {
      latest_wheels = wheels[wheel_cursor++];
      have_wheels = true;
      new_wheels = true;
    }

    if (have_wheels && new_wheels && !cond.imu_loss) {
      switch (cfg_.provider) {
        case VelocityProvider::kNone:
          break;
        case VelocityProvider::kNonholonomic:
          packets.push_back(nonholonomic_velocity(
              latest_wheels, params_, cfg_.vel_noise, cond.fused,
              latest_wheels.t));
          break;
        case VelocityProvider::kKstm:
          packets.push_back(kstm_velocity(latest_wheels, latest_act, params_,
                                          cfg_.vel_noise, cond.fused,
                                          latest_wheels.t));
          break;
        case VelocityProvider::kUkf: {
          if (!ukf_ready) {
            SlipState s0;
            s0.v = 0.5 * (latest_wheels.fl + latest_wheels.fr) *
                   params_.r_dyn_front;
            s0.beta = 0.0;
            ukf.reset(s0, t_k);
            ukf_ready = true;
            break;
          }
          UkfInputs in;
          in.imu = cond.fused;
          in.wheels = latest_wheels;
          in.act = latest_act;
          in.omega_dot_z = cond.omega_dot.z();
          in.road = road_delayed;
          const auto t0 = Clock::now();
          ukf.update(in);
          out.ukf_step.add(elapsed_us(t0));
          if (auto pkt = ukf.make_packet(latest_wheels.t)) {
            packets.push_back(*pkt);
          }
          break;
        }
      }
    }
    if (ukf.pd_resets() > ukf_resets_seen) {
      flags |= kFlagUkfReset;
      out.ukf_resets = ukf.pd_resets();
      ukf_resets_seen = ukf.pd_resets();
    }

    // GNSS through the quality tracker.
    while (gnss_cursor < gnss.size() && gnss[gnss_cursor].t <= t_k + 1e-9) {
      const GnssFix& fix = gnss[gnss_cursor++];
      if (fix.has_position()) {
        last_fix_t = fix.t;
        have_fix = true;
      }
      const Vec3 ekf_pos_sigma =
          ekf.estimate().cov.diagonal().segment<3>(0).cwiseSqrt();
      std::optional<Vec3> sigma;
      if (cfg_.acor.enabled) {
        sigma = tracker.adapt_sigma(fix, ekf_pos_sigma);
      } else if (fix.has_position()) {
        sigma = fix.sigma;
      }
      if (sigma) {
        MeasurementPacket pkt;
        pkt.kind = MeasurementKind::kPosition;
        pkt.value = fix.pos;
        pkt.noise = sigma->cwiseProduct(*sigma).asDiagonal();
        pkt.t = fix.t;
        packets.push_back(pkt);
        if (fix.has_heading) {
          MeasurementPacket hp;
          hp.kind = MeasurementKind::kHeading;
          hp.value = Eigen::VectorXd::Constant(1, fix.heading);
          hp.noise = Eigen::MatrixXd::Constant(
              1, 1, cfg_.heading_sigma * cfg_.heading_sigma);
          hp.t = fix.t;
          packets.push_back(hp);
        }
      }
    }
    if (have_fix && t_k - last_fix_t > cfg_.gnss_gap_timeout)
      tracker.note_signal_gap();
    if (tracker.dropout_active()) flags |= kFlagDropout;
    if (tracker.decaying(t_k)) flags |= kFlagDecaying;

    // Apply all due updates in timestamp order. Position innovations pass
    // through the Mahalanobis gate (and, inside the recovery window, the
    // posterior step ceiling) against the current estimate.
    std::stable_sort(packets.begin(), packets.end(),
                     [](const MeasurementPacket& a,
                        const MeasurementPacket& b) { return a.t < b.t; });
    for (MeasurementPacket& pkt : packets) {
      if (pkt.kind == MeasurementKind::kPosition && cfg_.acor.enabled) {
        const EkfEstimate& est = ekf.estimate();
        const Vec3 innov = Vec3(pkt.value) - est.state.pos;
        const Mat3 s_innov = est.cov.topLeftCorner<3, 3>() +
                             Mat3(pkt.noise.topLeftCorner<3, 3>());
        GateResult gate = mahalanobis_gate(innov, s_innov,
                                           est.state.angles.yaw, cfg_.acor);
        if (gate.clamped) {
          flags |= kFlagGateClamped;
          out.gate_events.push_back(
              {pkt.t,
               std::max(gate.distance_lon, gate.distance_lat),
               gate.distance_lat >= gate.distance_lon ? 1 : 0});
        }
        Vec3 innovation = gate.innovation;
        if (tracker.decaying(pkt.t)) {
          // Bound the posterior position step during the recovery window.
          const Mat3 p_pos = est.cov.topLeftCorner<3, 3>();
          const Mat3 k_pos = p_pos * s_innov.inverse();
          const Vec3 step = k_pos * innovation;
          const double norm = step.head<2>().norm();
          if (norm > cfg_.acor.recovery_step_ceiling) {
            innovation *= cfg_.acor.recovery_step_ceiling / norm;
            flags |= kFlagStepCeiling;
          }
        }
        pkt.value = est.state.pos + innovation;
      }
      const auto t0 = Clock::now();
      ekf.update(pkt);
      out.ekf_update.add(elapsed_us(t0));
    }

    const double jump =
        (ekf.estimate().state.pos - pos_after_predict).norm();
    out.max_step_jump = std::max(out.max_step_jump, jump);

    if (cfg_.check_pd && !is_valid_covariance(ekf.estimate().cov))
      ++out.pd_failures;

    road_delayed.roll = ekf.estimate().state.angles.roll;
    road_delayed.pitch = ekf.estimate().state.angles.pitch;

    TraceRecord rec;
    rec.t = t_k;
    rec.state = ekf.estimate().state;
    rec.beta = std::atan2(rec.state.vel.y(), rec.state.vel.x());
    rec.flags = flags;
    rec.pos_sigma = ekf.estimate().cov.diagonal().segment<3>(0).cwiseSqrt();
    rec.step_jump = jump;
    out.trace.push_back(rec);
  }
  return out;
}

EstimatorMode parse_estimator_mode(const std::string& name) {
  if (name == "full_3d") return EstimatorMode::kFull3d;
  if (name == "planar") return EstimatorMode::kPlanar;
  if (name == "planar_bank_map") return EstimatorMode::kPlanarWithBankMap;
  if (name == "3d_angle_map") return EstimatorMode::kThreedWithAngleMap;
  throw ConfigError("unknown estimator mode: " + name);
}

std::string to_string(EstimatorMode mode) {
  switch (mode) {
    case EstimatorMode::kFull3d: return "full_3d";
    case EstimatorMode::kPlanar: return "planar";
    case EstimatorMode::kPlanarWithBankMap: return "planar_bank_map";
    case EstimatorMode::kThreedWithAngleMap: return "3d_angle_map";
  }
  return "?";
}

VelocityProvider parse_velocity_provider(const std::string& name) {
  if (name == "none") return VelocityProvider::kNone;
  if (name == "nonholonomic") return VelocityProvider::kNonholonomic;
  if (name == "kstm") return VelocityProvider::kKstm;
  if (name == "ukf") return VelocityProvider::kUkf;
  throw ConfigError("unknown velocity provider: " + name);
}

std::string to_string(VelocityProvider p) {
  switch (p) {
    case VelocityProvider::kNone: return "none";
    case VelocityProvider::kNonholonomic: return "nonholonomic";
    case VelocityProvider::kKstm: return "kstm";
    case VelocityProvider::kUkf: return "ukf";
  }
  return "?";
}

PipelineConfig pipeline_config_from(const Config& cfg) {
  PipelineConfig p;
  p.ekf.mode = parse_estimator_mode(cfg.get_string("estimator.mode",
                                                   "full_3d"));
  p.ekf.q_pos = cfg.get_double("ekf.q_pos", p.ekf.q_pos);
  p.ekf.q_ang = cfg.get_double("ekf.q_ang", p.ekf.q_ang);
  p.ekf.q_vel = cfg.get_double("ekf.q_vel", p.ekf.q_vel);
  p.ekf.init_pos_var = cfg.get_double("ekf.init_pos_var", p.ekf.init_pos_var);
  p.ekf.init_ang_var = cfg.get_double("ekf.init_ang_var", p.ekf.init_ang_var);
  p.ekf.init_vel_var = cfg.get_double("ekf.init_vel_var", p.ekf.init_vel_var);
  p.ekf.ref_sigma = deg2rad(cfg.get_double("ekf.ref_sigma_deg",
                                           rad2deg(p.ekf.ref_sigma)));
  p.ekf.ref_sigma_inflation =
      cfg.get_double("ekf.ref_sigma_inflation", p.ekf.ref_sigma_inflation);
  p.ekf.ref_hysteresis_steps =
      cfg.get_int("ekf.ref_hysteresis_steps", p.ekf.ref_hysteresis_steps);
  p.ekf.ref_min_speed = cfg.get_double("ekf.ref_min_speed",
                                       p.ekf.ref_min_speed);
  p.ekf.ref_jerk_limit = cfg.get_double("ekf.ref_jerk_limit",
                                        p.ekf.ref_jerk_limit);
  p.ekf.v_dot_tau = cfg.get_double("ekf.v_dot_tau", p.ekf.v_dot_tau);

  p.ukf.alpha = cfg.get_double("ukf.alpha", p.ukf.alpha);
  p.ukf.beta_w = cfg.get_double("ukf.beta_w", p.ukf.beta_w);
  p.ukf.kappa = cfg.get_double("ukf.kappa", p.ukf.kappa);
  p.ukf.q_v = cfg.get_double("ukf.q_v", p.ukf.q_v);
  p.ukf.q_beta = cfg.get_double("ukf.q_beta", p.ukf.q_beta);
  p.ukf.min_speed = cfg.get_double("ukf.min_speed", p.ukf.min_speed);
  p.ukf.excitation_low = cfg.get_double("ukf.excitation_low",
                                        p.ukf.excitation_low);
  p.ukf.excitation_high = cfg.get_double("ukf.excitation_high",
                                         p.ukf.excitation_high);
  p.ukf.sigma_wheel_min = cfg.get_double("ukf.sigma_wheel_min",
                                         p.ukf.sigma_wheel_min);
  p.ukf.sigma_wheel_max = cfg.get_double("ukf.sigma_wheel_max",
                                         p.ukf.sigma_wheel_max);
  p.ukf.sigma_force_min = cfg.get_double("ukf.sigma_force_min",
                                         p.ukf.sigma_force_min);
  p.ukf.sigma_force_max = cfg.get_double("ukf.sigma_force_max",
                                         p.ukf.sigma_force_max);

  p.acor.enabled = cfg.get_bool("acor.enabled", p.acor.enabled);
  p.acor.sigma_entry_threshold =
      cfg.get_double("acor.sigma_entry", p.acor.sigma_entry_threshold);
  p.acor.sigma_exit_threshold =
      cfg.get_double("acor.sigma_exit", p.acor.sigma_exit_threshold);
  p.acor.entry_consecutive = cfg.get_int("acor.entry_consecutive",
                                         p.acor.entry_consecutive);
  p.acor.decay_duration = cfg.get_double("acor.decay_duration",
                                         p.acor.decay_duration);
  p.acor.gate_longitudinal = cfg.get_double("acor.gate_longitudinal",
                                            p.acor.gate_longitudinal);
  p.acor.gate_lateral = cfg.get_double("acor.gate_lateral",
                                       p.acor.gate_lateral);
  p.acor.recovery_step_ceiling =
      cfg.get_double("acor.recovery_step_ceiling",
                     p.acor.recovery_step_ceiling);

  p.provider =
      parse_velocity_provider(cfg.get_string("estimator.provider", "ukf"));
  p.vel_noise.sigma_vx = cfg.get_double("vel_noise.sigma_vx",
                                        p.vel_noise.sigma_vx);
  p.vel_noise.sigma_vy = cfg.get_double("vel_noise.sigma_vy",
                                        p.vel_noise.sigma_vy);
  p.vel_noise.accel_inflation =
      cfg.get_double("vel_noise.accel_inflation", p.vel_noise.accel_inflation);

  p.fir_taps = cfg.get_doubles("pipeline.fir_taps", p.fir_taps);
  p.dt = cfg.get_double("pipeline.dt", p.dt);
  p.gnss_gap_timeout = cfg.get_double("pipeline.gnss_gap_timeout",
                                      p.gnss_gap_timeout);
  p.heading_sigma = deg2rad(cfg.get_double("pipeline.heading_sigma_deg",
                                           rad2deg(p.heading_sigma)));
  p.map_angle_sigma = deg2rad(cfg.get_double("pipeline.map_angle_sigma_deg",
                                             rad2deg(p.map_angle_sigma)));
  p.check_pd = cfg.get_bool("pipeline.check_pd", p.check_pd);
  return p;
}

}  // namespace vdse
