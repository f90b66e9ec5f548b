/**
 * @file csv.hpp
 *
 * CSV readers/writers for the sensor stream, ground truth, track and
 * estimate trace files. Exact column layouts are documented in
 * docs/formats.md.
 */
#pragma once

#include "vdse/sim.hpp"

#include <string>

namespace vdse {

struct TraceRecord {
  double t = 0.0;
  VehicleState state;
  double beta = 0.0;
  std::uint32_t flags = 0;
  Vec3 pos_sigma = Vec3::Zero();
  double step_jump = 0.0;  // update-induced posterior position change, m
};

// Trace flag bits.
inline constexpr std::uint32_t kFlagGateClamped = 1u << 0;
inline constexpr std::uint32_t kFlagRefInvalid = 1u << 1;
inline constexpr std::uint32_t kFlagDropout = 1u << 2;
inline constexpr std::uint32_t kFlagDecaying = 1u << 3;
inline constexpr std::uint32_t kFlagUkfReset = 1u << 4;
inline constexpr std::uint32_t kFlagImuLoss = 1u << 5;
inline constexpr std::uint32_t kFlagStepCeiling = 1u << 6;

void write_streams_csv(const std::string& path, const SensorStreams& s);
SensorStreams read_streams_csv(const std::string& path);

void write_ground_truth_csv(const std::string& path, const GroundTruth& gt);
GroundTruth read_ground_truth_csv(const std::string& path);

void write_track_csv(const std::string& path, const TrackModel& track,
                     double ds = 1.0);

void write_trace_csv(const std::string& path,
                     const std::vector<TraceRecord>& trace);
std::vector<TraceRecord> read_trace_csv(const std::string& path);

}  // namespace vdse
