#pragma once

#include "mmslam/angles.hpp"
#include "mmslam/metrics.hpp"
#include "mmslam/simulate.hpp"
#include "mmslam/slam.hpp"
#include "mmslam/toa.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace mmslam {

enum class AngleMethod { Svd, Cfar };

const char* to_string(AngleMethod method);
AngleMethod parse_method(const std::string& name);

struct CfarParams {
    int train = 4;
    int guard = 2;
    double pfa = 1e-3;
};

struct PipelineConfig {
    BeamCodebook codebook;
    WaveformConfig waveform;
    double noise_floor = 0.2;
    AngleMethod method = AngleMethod::Svd;
    SvdParams svd;
    CfarParams cfar;
    Eigen::Matrix3d measurement_covariance = Eigen::Matrix3d::Identity();
    /// Samples subtracted from the coarse ToA before fine estimation.
    long coarse_backoff = 16;
    /// Receive buffer for coarse ToA, relative to the receiver clock origin.
    long buffer_start = -32;
    int buffer_extra = 96;
    std::uint64_t seed = 1;

    /// 63 x 126 beams, 16 elements, K = 256, M = 4, R = diag(0.3 m, 3 deg, 3 deg)^2.
    static PipelineConfig desk();
};

struct PositionEstimates {
    std::size_t position = 0;
    std::vector<PathEstimate> paths;
    CoarseToa coarse;
    int rank_used = 0;
    /// Pre-threshold candidate count (SVD) or raw detection count (CFAR).
    std::size_t candidates = 0;
};

/// Seeded generator for one (purpose, position, i, j) tuple, so every draw is
/// reproducible independently of processing order.
Rng stream_rng(std::uint64_t seed, std::uint64_t purpose, std::uint64_t position, std::uint64_t a = 0,
               std::uint64_t b = 0);

BrsrpMap synthesize_map(const Scene& scene, std::size_t position, const PipelineConfig& config);

/// Angle extraction on `map`, coarse ToA on the strongest estimate's beam
/// pair, fine ToA per estimate. RS samples are synthesized on demand from the
/// scene for the beam pairs that are actually probed.
PositionEstimates estimate_position(const Scene& scene, std::size_t position, const BrsrpMap& map,
                                    const PipelineConfig& config);

std::vector<Measurement> to_measurements(const PositionEstimates& estimates, const Eigen::Matrix3d& covariance);

/// Ground-truth angle points of the scene at one position.
std::vector<AnglePoint> truth_angles(const Scene& scene, std::size_t position, double carrier);

struct PipelineRun {
    std::vector<PositionEstimates> estimates;
    std::vector<TrajectoryStep> slam;
    TrajectoryReport report;
};

/// Full simulate, estimate, SLAM pass over the scene.
PipelineRun run_pipeline(const Scene& scene, const PipelineConfig& config, const SnapshotConfig& slam,
                         bool known_bias = false);

} // namespace mmslam
