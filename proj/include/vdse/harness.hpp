/**
 * @file harness.hpp
 *
 * End-to-end run orchestration: scenario -> streams -> estimate -> metrics,
 * plus the parallel mode/provider/seed sweep. Every run is deterministic
 * for a given seed.
 */
#pragma once

#include "vdse/metrics.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace vdse {

struct RunConfig {
  std::string scenario_path;
  std::string estimator_cfg_path;  // optional; defaults apply when empty
  std::string params_path;         // optional; defaults apply when empty
  std::string out_dir;             // empty: no files written
  std::optional<EstimatorMode> mode;        // overrides estimator config
  std::optional<VelocityProvider> provider;  // overrides estimator config
  std::optional<bool> acor_enabled;
  std::optional<std::uint64_t> seed;  // overrides scenario seed
  double skip_initial = 2.0;
  bool check_pd = false;
};

struct RunArtifacts {
  MetricsReport report;
  PipelineResult pipeline;
  GroundTruth gt;
  Scenario scenario;
};

VehicleParams vehicle_params_from(const Config& cfg);
MountConfig mount_config_from(const Config& cfg);

/// Full pipeline for one configuration. Writes streams/gt/track/trace/
/// metrics/plot files into out_dir when set.
RunArtifacts run(const RunConfig& cfg);

struct SweepEntry {
  EstimatorMode mode;
  VelocityProvider provider;
  bool acor_enabled = true;
  std::uint64_t seed = 1;
  MetricsReport report;
};

/// Cartesian sweep over modes x providers x seeds, executed by a worker
/// pool; each run is internally single-threaded. Writes a combined JSON
/// report into out_dir when set.
std::vector<SweepEntry> sweep(const RunConfig& base,
                              const std::vector<EstimatorMode>& modes,
                              const std::vector<VelocityProvider>& providers,
                              const std::vector<std::uint64_t>& seeds,
                              int workers = 0);

void write_sweep_json(const std::string& path,
                      const std::vector<SweepEntry>& entries);

}  // namespace vdse
