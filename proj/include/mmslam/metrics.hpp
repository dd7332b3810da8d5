#pragma once

#include "mmslam/simulate.hpp"
#include "mmslam/slam.hpp"
#include "mmslam/toa.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <utility>
#include <vector>

namespace mmslam {

struct GospaParams {
    double cutoff = 10.0;  // degrees
    double exponent = 2.0;
    double penalty = 2.0;

    void validate() const;
};

/// (aod, aoa) in radians.
struct AnglePoint {
    double aod = 0.0;
    double aoa = 0.0;
};

struct GospaResult {
    double gospa = 0.0;
    /// Sum of d^P over assigned pairs (degrees^P).
    double localization = 0.0;
    /// (estimate index, truth index) pairs closer than the cutoff.
    std::vector<std::pair<std::size_t, std::size_t>> assignment;
    std::size_t false_detections = 0;
    std::size_t missed_detections = 0;
};

/// Euclidean distance in degrees between wrapped angle differences.
double angle_distance_deg(const AnglePoint& a, const AnglePoint& b);

/// Minimum-cost perfect assignment for a square cost matrix; entry r of the
/// result is the column given to row r.
std::vector<int> hungarian(const Eigen::MatrixXd& cost);

GospaResult gospa_angles(const std::vector<AnglePoint>& estimates, const std::vector<AnglePoint>& truth,
                         const GospaParams& params = {});

struct SlfdResult {
    std::size_t count = 0;
    double gamma = 0.0;
    /// Indices of estimates judged to be sidelobes, ascending.
    std::vector<std::size_t> flagged;
};

/// Sidelobe false detections: for every pair with |dToA| <= tau_th whose TX or
/// RX beam indices differ by at most one, the weaker member is flagged. Each
/// estimate counts once.
SlfdResult slfd_metric(const std::vector<PathEstimate>& estimates, double tau_th, const BeamCodebook& codebook,
                       const GospaParams& params = {});

struct ErrorStats {
    double rmse = 0.0;
    double std = 0.0;
};

/// RMSE and population standard deviation of non-negative error magnitudes.
ErrorStats error_stats(const std::vector<double>& errors);

struct TrajectoryReport {
    ErrorStats position;     // meters
    ErrorStats heading;      // degrees
    ErrorStats bias;         // meters
    double mean_seconds = 0.0;
    std::size_t failures = 0;
    std::vector<double> position_errors;
    std::vector<double> heading_errors;
    std::vector<double> bias_errors;
};

/// Errors of each solved position against the scene truth. Failed positions
/// are counted and left out of the statistics.
TrajectoryReport trajectory_stats(const std::vector<TrajectoryStep>& steps, const Scene& truth);

struct PositionEval {
    GospaResult gospa;
    SlfdResult slfd;
};

struct EvalReport {
    std::vector<PositionEval> positions;
    TrajectoryReport trajectory;
};

} // namespace mmslam
