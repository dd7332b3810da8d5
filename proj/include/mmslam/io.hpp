#pragma once

#include "mmslam/metrics.hpp"
#include "mmslam/pipeline.hpp"
#include "mmslam/simulate.hpp"
#include "mmslam/slam.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace mmslam::io {

namespace fs = std::filesystem;

/// Scene document:
///   {"bs": {"position": [x, y], "heading": rad},
///    "trajectory": [{"position": [x, y], "heading": rad}, ...],
///    "landmarks": [{"position": [x, y], "reflection": rho}, ...],
///    "bias": [meters per position]              (optional, default 0)
///    "los_blocked": [position indices]          (optional)
///    "tx_half_fov": rad                         (optional)
///    "seed": n}                                 (optional)
/// Throws ConfigError naming the file on any problem.
Scene read_scene(const fs::path& path);
void write_scene(const fs::path& path, const Scene& scene);

/// CSV: header "tx_angle_rad,<rx angles>", then one row per TX beam.
void write_map_csv(const fs::path& path, const BrsrpMap& map);

/// Little-endian binary: "BRSP", u32 version, u32 rows, u32 cols, i32 elements,
/// u8 tx_circular, u8 rx_circular, f64 noise floor, f64 tx angles, f64 rx
/// angles, f64 values row-major.
void write_map_binary(const fs::path& path, const BrsrpMap& map);
BrsrpMap read_map_binary(const fs::path& path);

void write_paths_csv(const fs::path& path, std::size_t position, const std::vector<PathTruth>& paths);

void write_measurements_csv(const fs::path& path, std::size_t position, const std::vector<Measurement>& z);
std::vector<Measurement> read_measurements_csv(const fs::path& path);

/// Columns: position_id, n, aod_rad, aoa_rad, power_linear, tx_index,
/// rx_index, toa_s, range_m, candidates.
void write_estimates_csv(const fs::path& path, const PositionEstimates& estimates);
PositionEstimates read_estimates_csv(const fs::path& path);

/// One JSON record per position: estimate, row-major covariance, cost,
/// hypothesis, iterations, runtime; failed positions carry "error".
void write_solutions_json(const fs::path& path, const std::vector<TrajectoryStep>& steps);
std::vector<TrajectoryStep> read_solutions_json(const fs::path& path);

void write_report_json(const fs::path& path, const EvalReport& report);
/// Flat per-position CSV: position, gospa, false/missed detections, slfd, errors.
void write_report_csv(const fs::path& path, const EvalReport& report);

/// 64-bit FNV-1a, stable across platforms; used for config hashes.
std::uint64_t fnv1a(const std::string& text);

std::string position_stem(std::size_t position);

} // namespace mmslam::io
