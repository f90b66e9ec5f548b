/**
 * @file metrics.hpp
 *
 * RMSE/MAX evaluation of an estimate trace against ground truth, including
 * the Frenet lateral position error, plus the JSON report.
 */
#pragma once

#include "vdse/csv.hpp"
#include "vdse/pipeline.hpp"

#include <string>

namespace vdse {

struct SignalMetrics {
  double rmse = 0.0;
  double max = 0.0;
};

struct MetricsReport {
  int schema_version = 1;
  SignalMetrics vx;         // m/s
  SignalMetrics vy;         // m/s
  SignalMetrics beta;       // deg
  SignalMetrics pitch;      // deg
  SignalMetrics roll;       // deg
  SignalMetrics frenet_d;   // m
  int gate_events = 0;
  double max_step_jump = 0.0;  // m
  TimingStats ekf_predict, ekf_update, ukf_step;
  int n_samples = 0;
  double t_begin = 0.0, t_end = 0.0;
};

/// Nearest-sample alignment within half a tick; errors accumulated after
/// skip_initial seconds of settled operation. Throws EmptyOverlap when the
/// traces do not overlap.
MetricsReport compute_metrics(const std::vector<TraceRecord>& trace,
                              const GroundTruth& gt, const TrackModel& track,
                              double skip_initial = 2.0);

std::string metrics_to_json(const MetricsReport& r);
/// Parse the JSON produced by metrics_to_json.
MetricsReport metrics_from_json(const std::string& text);

void write_metrics_json(const std::string& path, const MetricsReport& r);

}  // namespace vdse
