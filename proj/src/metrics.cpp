#include "vdse/metrics.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>

namespace vdse {

namespace {

class Accumulator {
 public:
  void add(double e) {
    sum_sq_ += e * e;
    max_ = std::max(max_, std::abs(e));
    ++n_;
  }
  SignalMetrics result() const {
    SignalMetrics m;
    if (n_ > 0) m.rmse = std::sqrt(sum_sq_ / static_cast<double>(n_));
    m.max = max_;
    return m;
  }

 private:
  double sum_sq_ = 0.0;
  double max_ = 0.0;
  long n_ = 0;
};

}  // namespace

MetricsReport compute_metrics(const std::vector<TraceRecord>& trace,
                              const GroundTruth& gt, const TrackModel& track,
                              double skip_initial) {
  if (trace.empty() || gt.samples.empty())
    throw EmptyOverlap("empty trace or ground truth");

  const double gt_t0 = gt.samples.front().t;
  const double half_tick = 0.5 * gt.dt;
  const double t_min =
      std::max(trace.front().t, gt_t0) + skip_initial;

  Accumulator acc_vx, acc_vy, acc_beta, acc_pitch, acc_roll, acc_d;
  std::optional<double> hint_est, hint_gt;
  MetricsReport out;
  out.t_begin = std::numeric_limits<double>::infinity();

  for (const auto& rec : trace) {
    if (rec.t < t_min) continue;
    const double idx = (rec.t - gt_t0) / gt.dt;
    const auto k = static_cast<std::ptrdiff_t>(std::llround(idx));
    if (k < 0 || k >= static_cast<std::ptrdiff_t>(gt.samples.size()))
      continue;
    const GroundTruthSample& ref = gt.samples[static_cast<std::size_t>(k)];
    if (std::abs(ref.t - rec.t) > half_tick) continue;

    acc_vx.add(rec.state.vel.x() - ref.vel.x());
    acc_vy.add(rec.state.vel.y() - ref.vel.y());
    acc_beta.add(rad2deg(wrap_angle(rec.beta - ref.beta)));
    acc_pitch.add(
        rad2deg(wrap_angle(rec.state.angles.pitch - ref.angles.pitch)));
    acc_roll.add(
        rad2deg(wrap_angle(rec.state.angles.roll - ref.angles.roll)));

    const FrenetCoord f_est = frenet_project(track, rec.state.pos, hint_est);
    const FrenetCoord f_gt = frenet_project(track, ref.pos, hint_gt);
    hint_est = f_est.s;
    hint_gt = f_gt.s;
    acc_d.add(f_est.d - f_gt.d);

    out.t_begin = std::min(out.t_begin, rec.t);
    out.t_end = std::max(out.t_end, rec.t);
    ++out.n_samples;
  }

  if (out.n_samples == 0)
    throw EmptyOverlap("trace and ground truth do not overlap");

  out.vx = acc_vx.result();
  out.vy = acc_vy.result();
  out.beta = acc_beta.result();
  out.pitch = acc_pitch.result();
  out.roll = acc_roll.result();
  out.frenet_d = acc_d.result();
  return out;
}

namespace {

nlohmann::json signal_json(const SignalMetrics& m) {
  return {{"rmse", m.rmse}, {"max", m.max}};
}

SignalMetrics signal_from(const nlohmann::json& j) {
  return {j.at("rmse").get<double>(), j.at("max").get<double>()};
}

nlohmann::json timing_json(const TimingStats& t) {
  return {{"mean_us", t.mean_us}, {"max_us", t.max_us}, {"count", t.count}};
}

}  // namespace

std::string metrics_to_json(const MetricsReport& r) {
  nlohmann::json j;
  j["schema_version"] = r.schema_version;
  j["vx_mps"] = signal_json(r.vx);
  j["vy_mps"] = signal_json(r.vy);
  j["beta_deg"] = signal_json(r.beta);
  j["theta_deg"] = signal_json(r.pitch);
  j["phi_deg"] = signal_json(r.roll);
  j["d_err_m"] = signal_json(r.frenet_d);
  j["gate_events"] = r.gate_events;
  j["max_step_jump_m"] = r.max_step_jump;
  j["n_samples"] = r.n_samples;
  j["t_begin_s"] = r.t_begin;
  j["t_end_s"] = r.t_end;
  // Wall-clock numbers are reported but excluded from determinism
  // comparisons; see docs/formats.md.
  j["timing"] = {{"ekf_predict", timing_json(r.ekf_predict)},
                 {"ekf_update", timing_json(r.ekf_update)},
                 {"ukf_step", timing_json(r.ukf_step)}};
  return j.dump(2);
}

MetricsReport metrics_from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  MetricsReport r;
  r.schema_version = j.at("schema_version").get<int>();
  r.vx = signal_from(j.at("vx_mps"));
  r.vy = signal_from(j.at("vy_mps"));
  r.beta = signal_from(j.at("beta_deg"));
  r.pitch = signal_from(j.at("theta_deg"));
  r.roll = signal_from(j.at("phi_deg"));
  r.frenet_d = signal_from(j.at("d_err_m"));
  r.gate_events = j.at("gate_events").get<int>();
  r.max_step_jump = j.at("max_step_jump_m").get<double>();
  r.n_samples = j.at("n_samples").get<int>();
  r.t_begin = j.at("t_begin_s").get<double>();
  r.t_end = j.at("t_end_s").get<double>();
  return r;
}

void write_metrics_json(const std::string& path, const MetricsReport& r) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write metrics file: " + path);
  out << metrics_to_json(r) << "\n";
}

}  // namespace vdse
