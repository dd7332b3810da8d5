#pragma once

#include "mmslam/simulate.hpp"

#include <Eigen/Dense>

#include <optional>
#include <utility>
#include <vector>

namespace mmslam {

/// One rank-1 peak: the beam pair picked from sigma_r u_r v_r^T and the power
/// read from the original map at that pair.
struct AngleCandidate {
    double aod = 0.0;
    double aoa = 0.0;
    double power = 0.0;
    int tx_index = 0;
    int rx_index = 0;
    int rank_index = 0;
};

struct AngleEstimate {
    double aod = 0.0;
    double aoa = 0.0;
    /// Largest member power.
    double power = 0.0;
    /// Beam pair of the strongest member; used for ToA beam selection and SLFD.
    int tx_index = 0;
    int rx_index = 0;
    std::vector<AngleCandidate> cluster_members;
};

struct SvdParams {
    /// Percent of sum sigma_r^2 that the rank-1 terms must cover, in (0, 100].
    double power_ratio = 99.0;
    /// Candidates at or below this power are dropped. Unset means
    /// 1.1 x the map's noise floor.
    std::optional<double> power_threshold;
    /// Chebyshev radius in beams for single-linkage clustering.
    int cluster_radius = 1;
    /// Half-width of the polynomial fit window in beams; 0 derives it from the
    /// beamwidth.
    int fit_window = 0;
    bool refine = true;
};

struct SvdResult {
    std::vector<AngleEstimate> estimates;
    /// Pre-threshold candidates in rank order.
    std::vector<AngleCandidate> candidates;
    Eigen::VectorXd singular_values;
    int rank_used = 0;
};

/// SVD extraction with thresholding, clustering and local quadratic
/// refinement. Estimates are sorted by descending power.
std::vector<AngleEstimate> svd_extract(const BrsrpMap& map, const SvdParams& params = {});

SvdResult svd_extract_detailed(const BrsrpMap& map, const SvdParams& params = {});

/// Argmax of a rank-1 matrix after flipping its sign so the largest-magnitude
/// entry is positive. Ties go to the lowest (i, j). Throws on an all-zero input.
std::pair<int, int> rank1_peak(const Eigen::MatrixXd& b_r);

/// Single-linkage clusters of candidates on the beam-index grid
/// (Chebyshev distance <= radius, wrapping on circular axes). Angles are
/// power-weighted means; power is the maximum member power. Clusters come out
/// sorted by descending power.
std::vector<AngleEstimate> cluster_candidates(const std::vector<AngleCandidate>& cands, const BeamCodebook& codebook,
                                              int radius);

/// Weighted least-squares quadratic surface over a (2w+1)^2 window centred on
/// the strongest map cell within one beam of the pair nearest (aod, aoa).
/// Returns the vertex when it is a maximum inside the window, otherwise
/// (aod, aoa) unchanged.
std::pair<double, double> polyfit_refine(const BrsrpMap& map, double aod, double aoa, int window);

/// Window half-width in beams covering roughly one beamwidth.
int default_fit_window(const BeamCodebook& codebook);

/// 2D cell-averaging CFAR. The training region is the square ring between
/// half-sizes `guard` and `guard + train`; edge cells use the truncated ring
/// and circular axes wrap. Detections are clustered with radius 1.
std::vector<AngleEstimate> cfar_detect(const BrsrpMap& map, int train, int guard, double pfa);

/// Threshold multiplier N (P_FA^(-1/N) - 1).
double cfar_alpha(int n_training, double pfa);

} // namespace mmslam
