/**
 * @file vdse_main.cpp
 *
 * Command line front end: scenario simulation, estimation replay,
 * evaluation and configuration sweeps.
 *
 * Exit codes: 0 success, 1 configuration error, 2 runtime estimation
 * failure, 3 metric assertion violated (CI mode).
 */
#include "vdse/harness.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>

namespace {

using namespace vdse;

struct CommonArgs {
  std::string scenario;
  std::string estimator_cfg;
  std::string params;
  std::string out_dir = "out";
  std::string mode;
  std::string provider;
  std::string acor;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

RunConfig make_run_config(const CommonArgs& a, const CLI::App* cmd) {
  RunConfig rc;
  rc.scenario_path = a.scenario;
  rc.estimator_cfg_path = a.estimator_cfg;
  rc.params_path = a.params;
  rc.out_dir = a.out_dir;
  // Flags win over config-file values only when explicitly present.
  if (cmd->count("--mode") > 0) rc.mode = parse_estimator_mode(a.mode);
  if (cmd->count("--provider") > 0)
    rc.provider = parse_velocity_provider(a.provider);
  if (cmd->count("--acor") > 0) rc.acor_enabled = (a.acor == "on");
  if (cmd->count("--seed") > 0) rc.seed = a.seed;
  return rc;
}

int run_simulate(const CommonArgs& a) {
  const Config scenario_cfg = Config::from_file(a.scenario);
  Scenario sc = load_scenario(scenario_cfg);
  if (a.seed_set) sc.noise.seed = a.seed;

  Config params_cfg;
  if (!a.params.empty()) params_cfg = Config::from_file(a.params);
  const VehicleParams params = vehicle_params_from(params_cfg);
  const MountConfig mounts = mount_config_from(params_cfg);

  const TrackModel track = build_oval(sc.oval);
  const GroundTruth gt = simulate_lap(track, sc.profile, params, sc.sim);
  const SensorStreams streams = synthesize_sensors(gt, sc.noise, mounts);

  std::filesystem::create_directories(a.out_dir);
  write_streams_csv(a.out_dir + "/streams.csv", streams);
  write_ground_truth_csv(a.out_dir + "/ground_truth.csv", gt);
  write_track_csv(a.out_dir + "/track.csv", track);
  std::printf("simulate: %zu imu, %zu gnss, %zu wheel records -> %s\n",
              streams.imu.size(), streams.gnss.size(), streams.wheels.size(),
              a.out_dir.c_str());
  return 0;
}

int run_estimate(const CommonArgs& a, const CLI::App* cmd,
                 const std::string& streams_path) {
  Config estimator_cfg;
  if (!a.estimator_cfg.empty())
    estimator_cfg = Config::from_file(a.estimator_cfg);
  Config params_cfg;
  if (!a.params.empty()) params_cfg = Config::from_file(a.params);

  PipelineConfig pipe_cfg = pipeline_config_from(estimator_cfg);
  if (cmd->count("--mode") > 0)
    pipe_cfg.ekf.mode = parse_estimator_mode(a.mode);
  if (cmd->count("--provider") > 0)
    pipe_cfg.provider = parse_velocity_provider(a.provider);
  if (cmd->count("--acor") > 0) pipe_cfg.acor.enabled = (a.acor == "on");

  std::optional<TrackModel> track;
  if (!a.scenario.empty()) {
    const Scenario sc = load_scenario(Config::from_file(a.scenario));
    track = build_oval(sc.oval);
    pipe_cfg.dt = sc.sim.dt_imu;
  }

  const SensorStreams streams = read_streams_csv(streams_path);
  EstimatorPipeline pipeline(pipe_cfg, vehicle_params_from(params_cfg),
                             mount_config_from(params_cfg), track);
  const PipelineResult result = pipeline.run(streams);

  std::filesystem::create_directories(a.out_dir);
  write_trace_csv(a.out_dir + "/trace.csv", result.trace);
  std::printf("estimate: %zu trace rows, %zu gate events -> %s\n",
              result.trace.size(), result.gate_events.size(),
              a.out_dir.c_str());
  return 0;
}

struct Assertion {
  std::string signal;
  std::string stat;
  double bound;
};

Assertion parse_assertion(const std::string& text) {
  const auto lt = text.find('<');
  const auto dot = text.find('.');
  if (lt == std::string::npos || dot == std::string::npos || dot > lt)
    throw ConfigError("assertion must look like vy.rmse<0.5, got: " + text);
  Assertion a;
  a.signal = text.substr(0, dot);
  a.stat = text.substr(dot + 1, lt - dot - 1);
  a.bound = std::stod(text.substr(lt + 1));
  return a;
}

double metric_value(const MetricsReport& r, const Assertion& a) {
  const SignalMetrics* m = nullptr;
  if (a.signal == "vx") m = &r.vx;
  else if (a.signal == "vy") m = &r.vy;
  else if (a.signal == "beta") m = &r.beta;
  else if (a.signal == "theta") m = &r.pitch;
  else if (a.signal == "phi") m = &r.roll;
  else if (a.signal == "d_err") m = &r.frenet_d;
  else if (a.signal == "step_jump") return r.max_step_jump;
  else throw ConfigError("unknown assertion signal: " + a.signal);
  if (a.stat == "rmse") return m->rmse;
  if (a.stat == "max") return m->max;
  throw ConfigError("unknown assertion stat: " + a.stat);
}

int run_evaluate(const CommonArgs& a, const std::string& trace_path,
                 const std::string& gt_path, double skip_initial,
                 const std::vector<std::string>& assertions) {
  const Scenario sc = load_scenario(Config::from_file(a.scenario));
  const TrackModel track = build_oval(sc.oval);
  const auto trace = read_trace_csv(trace_path);
  const GroundTruth gt = read_ground_truth_csv(gt_path);

  const MetricsReport report =
      compute_metrics(trace, gt, track, skip_initial);
  std::filesystem::create_directories(a.out_dir);
  write_metrics_json(a.out_dir + "/metrics.json", report);
  std::printf("evaluate: %d aligned samples -> %s/metrics.json\n",
              report.n_samples, a.out_dir.c_str());

  int violations = 0;
  for (const auto& text : assertions) {
    const Assertion as = parse_assertion(text);
    const double value = metric_value(report, as);
    const bool ok = value < as.bound;
    std::printf("  assert %s: %.6g < %.6g ... %s\n", text.c_str(), value,
                as.bound, ok ? "ok" : "VIOLATED");
    if (!ok) ++violations;
  }
  return violations > 0 ? 3 : 0;
}

int run_all(const CommonArgs& a, const CLI::App* cmd) {
  const RunConfig rc = make_run_config(a, cmd);
  const RunArtifacts art = run(rc);
  std::printf("run: vy rmse %.4f m/s, phi rmse %.4f deg, d_err rmse %.4f m "
              "-> %s\n",
              art.report.vy.rmse, art.report.roll.rmse,
              art.report.frenet_d.rmse, a.out_dir.c_str());
  return 0;
}

int run_sweep(const CommonArgs& a, const CLI::App* cmd,
              const std::string& modes_csv, const std::string& providers_csv,
              int n_seeds, int workers) {
  RunConfig rc = make_run_config(a, cmd);

  std::vector<EstimatorMode> modes;
  std::istringstream ms(modes_csv);
  std::string item;
  while (std::getline(ms, item, ',')) modes.push_back(
      parse_estimator_mode(item));
  std::vector<VelocityProvider> providers;
  std::istringstream ps(providers_csv);
  while (std::getline(ps, item, ',')) providers.push_back(
      parse_velocity_provider(item));
  std::vector<std::uint64_t> seeds;
  const std::uint64_t seed0 = rc.seed.value_or(1);
  for (int s = 0; s < n_seeds; ++s) seeds.push_back(seed0 + s);

  const auto entries = sweep(rc, modes, providers, seeds, workers);
  for (const auto& e : entries)
    std::printf("  %-14s %-13s seed %llu: vy rmse %.4f, beta rmse %.4f, "
                "phi rmse %.4f\n",
                to_string(e.mode).c_str(), to_string(e.provider).c_str(),
                static_cast<unsigned long long>(e.seed), e.report.vy.rmse,
                e.report.beta.rmse, e.report.roll.rmse);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"3D vehicle dynamics state estimation toolkit"};
  app.require_subcommand(1);

  CommonArgs a;
  std::string streams_path, trace_path, gt_path;
  std::string modes_csv = "full_3d", providers_csv = "ukf";
  int n_seeds = 1, workers = 0;
  double skip_initial = 2.0;
  std::vector<std::string> assertions;

  auto add_common = [&](CLI::App* cmd, bool needs_scenario) {
    cmd->add_option("--scenario", a.scenario, "scenario definition file")
        ->required(needs_scenario);
    cmd->add_option("--config", a.estimator_cfg, "estimator config file");
    cmd->add_option("--params", a.params, "vehicle parameter file");
    cmd->add_option("--out", a.out_dir, "output directory");
    cmd->add_option("--mode", a.mode,
                    "full_3d|planar|planar_bank_map|3d_angle_map");
    cmd->add_option("--provider", a.provider,
                    "none|nonholonomic|kstm|ukf");
    cmd->add_option("--acor", a.acor, "on|off");
    cmd->add_option("--seed", a.seed, "noise seed override");
  };

  CLI::App* sim_cmd = app.add_subcommand("simulate",
                                         "scenario -> sensor streams");
  add_common(sim_cmd, true);

  CLI::App* est_cmd = app.add_subcommand("estimate",
                                         "streams -> estimate trace");
  add_common(est_cmd, false);
  est_cmd->add_option("--streams", streams_path, "streams CSV")->required();

  CLI::App* eval_cmd = app.add_subcommand("evaluate",
                                          "trace + ground truth -> metrics");
  add_common(eval_cmd, true);
  eval_cmd->add_option("--trace", trace_path, "estimate trace CSV")
      ->required();
  eval_cmd->add_option("--gt", gt_path, "ground truth CSV")->required();
  eval_cmd->add_option("--skip-initial", skip_initial,
                       "seconds excluded from metrics");
  eval_cmd->add_option("--assert", assertions,
                       "metric bound, e.g. vy.rmse<0.5 (exit 3 on violation)");

  CLI::App* all_cmd = app.add_subcommand("all", "end-to-end single run");
  add_common(all_cmd, true);

  CLI::App* sweep_cmd = app.add_subcommand("sweep",
                                           "mode/provider/seed matrix");
  add_common(sweep_cmd, true);
  sweep_cmd->add_option("--modes", modes_csv, "comma list of modes");
  sweep_cmd->add_option("--providers", providers_csv,
                        "comma list of providers");
  sweep_cmd->add_option("--seeds", n_seeds, "number of consecutive seeds");
  sweep_cmd->add_option("--workers", workers, "worker pool size (0 = auto)");

  CLI11_PARSE(app, argc, argv);
  a.seed_set = app.get_subcommands().front()->count("--seed") > 0;

  try {
    CLI::App* cmd = app.get_subcommands().front();
    if (cmd == sim_cmd) return run_simulate(a);
    if (cmd == est_cmd) return run_estimate(a, cmd, streams_path);
    if (cmd == eval_cmd)
      return run_evaluate(a, trace_path, gt_path, skip_initial, assertions);
    if (cmd == all_cmd) return run_all(a, cmd);
    if (cmd == sweep_cmd)
      return run_sweep(a, cmd, modes_csv, providers_csv, n_seeds, workers);
  } catch (const vdse::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "estimation failure: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
