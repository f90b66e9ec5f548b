#include "vdse/harness.hpp"

#include <json.hpp>

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <thread>

namespace vdse {

namespace {

Vec3 vec3_from(const Config& cfg, const std::string& key, const Vec3& fb) {
  if (!cfg.has(key)) return fb;
  const auto v = cfg.get_doubles(key);
  if (v.size() != 3) throw ConfigError(key + " must have 3 components");
  return Vec3(v[0], v[1], v[2]);
}

MagicFormulaCoeffs mf_from(const Config& cfg, const std::string& key,
                           const MagicFormulaCoeffs& fb) {
  if (!cfg.has(key)) return fb;
  const auto v = cfg.get_doubles(key);
  if (v.size() != 4) throw ConfigError(key + " must be B,C,D,E");
  return {v[0], v[1], v[2], v[3]};
}

void write_plot_csvs(const std::string& dir,
                     const std::vector<TraceRecord>& trace,
                     const GroundTruth& gt, const TrackModel& track) {
  // Time series the evaluation figures are built from: lateral velocity
  // vs truth, roll vs track bank, and the position trace with flags.
  std::FILE* f = std::fopen((dir + "/plot_vy.csv").c_str(), "w");
  std::FILE* g = std::fopen((dir + "/plot_roll.csv").c_str(), "w");
  std::FILE* h = std::fopen((dir + "/plot_position.csv").c_str(), "w");
  if (!f || !g || !h) throw ConfigError("cannot write plot files in " + dir);
  std::fprintf(f, "t_s,vy_est_mps,vy_gt_mps\n");
  std::fprintf(g, "t_s,phi_est_deg,phi_gt_deg,bank_track_deg\n");
  std::fprintf(h, "t_s,x_est_m,y_est_m,x_gt_m,y_gt_m,step_jump_m,flags\n");

  std::optional<double> hint;
  const double gt_t0 = gt.samples.front().t;
  for (const auto& rec : trace) {
    const auto k = static_cast<std::ptrdiff_t>(
        std::llround((rec.t - gt_t0) / gt.dt));
    if (k < 0 || k >= static_cast<std::ptrdiff_t>(gt.samples.size()))
      continue;
    const auto& ref = gt.samples[static_cast<std::size_t>(k)];
    const FrenetCoord fr = frenet_project(track, ref.pos, hint);
    hint = fr.s;
    std::fprintf(f, "%.9f,%.9g,%.9g\n", rec.t, rec.state.vel.y(),
                 ref.vel.y());
    std::fprintf(g, "%.9f,%.9g,%.9g,%.9g\n", rec.t,
                 rad2deg(rec.state.angles.roll), rad2deg(ref.angles.roll),
                 rad2deg(track.at(fr.s).bank));
    std::fprintf(h, "%.9f,%.9g,%.9g,%.9g,%.9g,%.9g,%u\n", rec.t,
                 rec.state.pos.x(), rec.state.pos.y(), ref.pos.x(),
                 ref.pos.y(), rec.step_jump, rec.flags);
  }
  std::fclose(f);
  std::fclose(g);
  std::fclose(h);
}

}  // namespace

VehicleParams vehicle_params_from(const Config& cfg) {
  VehicleParams p;
  p.dist_cog_front = cfg.get_double("vehicle.dist_cog_front", p.dist_cog_front);
  p.dist_cog_rear = cfg.get_double("vehicle.dist_cog_rear", p.dist_cog_rear);
  p.track_front = cfg.get_double("vehicle.track_front", p.track_front);
  p.track_rear = cfg.get_double("vehicle.track_rear", p.track_rear);
  p.mass = cfg.get_double("vehicle.mass", p.mass);
  p.yaw_inertia = cfg.get_double("vehicle.yaw_inertia", p.yaw_inertia);
  p.r_dyn_front = cfg.get_double("vehicle.r_dyn_front", p.r_dyn_front);
  p.r_dyn_rear = cfg.get_double("vehicle.r_dyn_rear", p.r_dyn_rear);
  p.cog_height = cfg.get_double("vehicle.cog_height", p.cog_height);
  p.mf_long_front = mf_from(cfg, "mf.long_front", p.mf_long_front);
  p.mf_long_rear = mf_from(cfg, "mf.long_rear", p.mf_long_rear);
  p.mf_lat_front = mf_from(cfg, "mf.lat_front", p.mf_lat_front);
  p.mf_lat_rear = mf_from(cfg, "mf.lat_rear", p.mf_lat_rear);
  p.validate();
  return p;
}

MountConfig mount_config_from(const Config& cfg) {
  MountConfig m;
  for (int i = 0; i < 8; ++i) {
    const std::string prefix = "imu" + std::to_string(i) + ".";
    if (!cfg.has(prefix + "lever_arm") && !cfg.has(prefix + "gyro_bias") &&
        !cfg.has(prefix + "accel_bias"))
      break;
    ImuMount mount;
    mount.lever_arm = vec3_from(cfg, prefix + "lever_arm", Vec3::Zero());
    mount.gyro_bias = vec3_from(cfg, prefix + "gyro_bias", Vec3::Zero());
    mount.accel_bias = vec3_from(cfg, prefix + "accel_bias", Vec3::Zero());
    m.imus.push_back(mount);
  }
  if (m.imus.empty()) m.imus.push_back(ImuMount{});
  return m;
}

RunArtifacts run(const RunConfig& cfg) {
  RunArtifacts art;

  const Config scenario_cfg = Config::from_file(cfg.scenario_path);
  art.scenario = load_scenario(scenario_cfg);
  if (cfg.seed) art.scenario.noise.seed = *cfg.seed;

  Config estimator_cfg;
  if (!cfg.estimator_cfg_path.empty())
    estimator_cfg = Config::from_file(cfg.estimator_cfg_path);
  Config params_cfg;
  if (!cfg.params_path.empty())
    params_cfg = Config::from_file(cfg.params_path);

  const VehicleParams params = vehicle_params_from(params_cfg);
  const MountConfig mounts = mount_config_from(params_cfg);

  PipelineConfig pipe_cfg = pipeline_config_from(estimator_cfg);
  if (cfg.mode) pipe_cfg.ekf.mode = *cfg.mode;
  if (cfg.provider) pipe_cfg.provider = *cfg.provider;
  if (cfg.acor_enabled) pipe_cfg.acor.enabled = *cfg.acor_enabled;
  pipe_cfg.dt = art.scenario.sim.dt_imu;
  pipe_cfg.check_pd = pipe_cfg.check_pd || cfg.check_pd;

  const TrackModel track = build_oval(art.scenario.oval);
  art.gt = simulate_lap(track, art.scenario.profile, params,
                        art.scenario.sim);
  const SensorStreams streams =
      synthesize_sensors(art.gt, art.scenario.noise, mounts);

  EstimatorPipeline pipeline(pipe_cfg, params, mounts, track);
  art.pipeline = pipeline.run(streams);

  art.report = compute_metrics(art.pipeline.trace, art.gt, track,
                               cfg.skip_initial);
  art.report.gate_events =
      static_cast<int>(art.pipeline.gate_events.size());
  art.report.max_step_jump = art.pipeline.max_step_jump;
  art.report.ekf_predict = art.pipeline.ekf_predict;
  art.report.ekf_update = art.pipeline.ekf_update;
  art.report.ukf_step = art.pipeline.ukf_step;

  if (!cfg.out_dir.empty()) {
    std::filesystem::create_directories(cfg.out_dir);
    write_streams_csv(cfg.out_dir + "/streams.csv", streams);
    write_ground_truth_csv(cfg.out_dir + "/ground_truth.csv", art.gt);
    write_track_csv(cfg.out_dir + "/track.csv", track);
    write_trace_csv(cfg.out_dir + "/trace.csv", art.pipeline.trace);
    write_metrics_json(cfg.out_dir + "/metrics.json", art.report);
    write_plot_csvs(cfg.out_dir, art.pipeline.trace, art.gt, track);

    std::ofstream events(cfg.out_dir + "/gate_events.csv");
    events << "t_s,distance,axis\n";
    for (const auto& e : art.pipeline.gate_events)
      events << e.t << "," << e.distance << "," << e.axis << "\n";
  }
  return art;
}

std::vector<SweepEntry> sweep(const RunConfig& base,
                              const std::vector<EstimatorMode>& modes,
                              const std::vector<VelocityProvider>& providers,
                              const std::vector<std::uint64_t>& seeds,
                              int workers) {
  std::vector<SweepEntry> entries;
  for (const auto mode : modes)
    for (const auto provider : providers)
      for (const auto seed : seeds) {
        SweepEntry e;
        e.mode = mode;
        e.provider = provider;
        e.acor_enabled = base.acor_enabled.value_or(true);
        e.seed = seed;
        entries.push_back(e);
      }

  if (workers <= 0)
    workers = static_cast<int>(std::thread::hardware_concurrency());
  workers = std::max(1, std::min<int>(workers,
                                      static_cast<int>(entries.size())));

  std::atomic<std::size_t> next{0};
  std::vector<std::string> errors(entries.size());
  auto worker = [&]() {
    for (;;) {
      const std::size_t idx = next.fetch_add(1);
      if (idx >= entries.size()) return;
      SweepEntry& e = entries[idx];
      RunConfig rc = base;
      rc.out_dir.clear();  // per-run files only for single runs
      rc.mode = e.mode;
      rc.provider = e.provider;
      rc.seed = e.seed;
      try {
        e.report = run(rc).report;
      } catch (const std::exception& ex) {
        errors[idx] = ex.what();
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& th : pool) th.join();

  for (std::size_t i = 0; i < entries.size(); ++i)
    if (!errors[i].empty())
      throw EstimationError("sweep run failed (" +
                            to_string(entries[i].mode) + "/" +
                            to_string(entries[i].provider) + "): " +
                            errors[i]);

  if (!base.out_dir.empty()) {
    std::filesystem::create_directories(base.out_dir);
    write_sweep_json(base.out_dir + "/sweep.json", entries);
  }
  return entries;
}

void write_sweep_json(const std::string& path,
                      const std::vector<SweepEntry>& entries) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& e : entries) {
    nlohmann::json row = nlohmann::json::parse(metrics_to_json(e.report));
    row["mode"] = to_string(e.mode);
    row["provider"] = to_string(e.provider);
    row["acor"] = e.acor_enabled;
    row["seed"] = e.seed;
    j.push_back(row);
  }
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write sweep report: " + path);
  out << j.dump(2) << "\n";
}

}  // namespace vdse
