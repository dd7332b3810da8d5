#pragma once

#include "mmslam/geometry.hpp"

#include <Eigen/Dense>

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mmslam {

/// Prior mean and information over the stacked state. A zero information
/// block means no prior on that block.
struct GaussianPrior {
    Eigen::VectorXd mean;
    Eigen::MatrixXd information;

    static GaussianPrior none(int dim);
};

/// Prior on the UE block only, e.g. the previous position's estimate.
struct UePrior {
    Eigen::Vector4d mean = Eigen::Vector4d::Zero();
    Eigen::Matrix4d covariance = Eigen::Matrix4d::Identity();
};

struct Hypothesis {
    /// Measurement treated as the direct path; unset means NLoS only.
    std::optional<std::size_t> los_measurement;
    bool uses_prior = false;

    std::string label() const;
};

struct SlamSolution {
    JointState estimate;
    Eigen::MatrixXd covariance;
    double cost = 0.0;
    Hypothesis hypothesis;
    int iterations = 0;
    bool converged = false;
    /// Cost of every accepted iterate, starting with the initial point.
    std::vector<double> cost_history;
};

/// Path role per measurement under a hypothesis: the LoS measurement maps to
/// the direct path, the rest to landmarks in measurement order.
std::vector<PathKind> assign_paths(std::size_t n_measurements, const Hypothesis& hypothesis);

/// q = (z - h)^T R^-1 (z - h) with wrapped angles.
double normalized_residual(const Measurement& z, const Eigen::Vector3d& h);

/// (1 + q) R.
Eigen::Matrix3d inflate_covariance(const Eigen::Matrix3d& r, double q);

/// (x - mu)^T Lambda (x - mu) + sum_n f(q_n), f(q) = log(1 + q) when robust,
/// f(q) = q otherwise. The heading component of x - mu is wrapped.
double objective(const Pose2& bs, const JointState& x, const std::vector<Measurement>& z,
                 const std::vector<PathKind>& kinds, const GaussianPrior& prior, bool robust);

/// Analytic gradient of objective with respect to x.to_vector().
Eigen::VectorXd objective_gradient(const Pose2& bs, const JointState& x, const std::vector<Measurement>& z,
                                   const std::vector<PathKind>& kinds, const GaussianPrior& prior, bool robust);

/// Normal matrix A = Lambda + sum_n H_n^T (1+q_n)^-1 R_n^-1 H_n (robust) and
/// right-hand side b; the GN step is A^-1 b and the gradient equals -2 b.
std::pair<Eigen::MatrixXd, Eigen::VectorXd> normal_equations(const Pose2& bs, const JointState& x,
                                                             const std::vector<Measurement>& z,
                                                             const std::vector<PathKind>& kinds,
                                                             const GaussianPrior& prior, bool robust);

struct GnOptions {
    bool robust = true;
    int max_iterations = 100;
    double step_tolerance = 1e-6;
    double decrease_tolerance = 1e-9;
    double armijo_alpha = 0.3;
    double armijo_beta = 0.8;
    int max_backtracks = 30;
    /// Smallest accepted eigenvalue ratio of the Jacobi-scaled normal matrix.
    double rank_tolerance = 1e-10;
};

/// Gauss-Newton with covariance inflation and backtracking line search.
/// Throws RankDeficiencyError when the normal matrix is singular.
SlamSolution gn_solve(const Pose2& bs, const std::vector<Measurement>& z, const GaussianPrior& prior,
                      const Hypothesis& hypothesis, const JointState& init, const GnOptions& options = {});

/// Bias interval such that d_min <= range + B <= d_max, the LoS distance
/// implied by range = d - B.
std::pair<double, double> bias_bounds(double los_range, double d_min, double d_max);

/// UE mean and covariance from the LoS measurement and a trial bias.
UePrior init_ue_from_los(const Measurement& z_los, const Pose2& bs, double bias, double bias_variance);

struct LandmarkInit {
    Landmark landmark;
    double cost = 0.0;
    /// GN did not converge within its iteration budget.
    bool weak = false;
};

/// Landmark minimizing (z - h)^T W^-1 (z - h), W = H_s Sigma_ss H_s^T + R,
/// started from the ray intersection and from the range-matched point on each
/// ray; the lowest cost wins.
LandmarkInit init_landmark(const Measurement& z_n, const Pose2& bs, const UePrior& ue);

struct LosInitConfig {
    double d_min = 1.0;
    double d_max = 20.0;
    double bias_variance = 9.0;
    int grid_points = 40;
    int restarts = 3;
    bool robust = true;
    /// Skip the search and use this bias.
    std::optional<double> known_bias;
};

struct LosInit {
    JointState state;
    UePrior ue;
    double bias = 0.0;
    double cost = 0.0;
};

/// UE initialization from the LoS measurement with the bias chosen by a
/// bounded scalar search over the joint cost, landmarks re-initialized for
/// every trial.
LosInit initialize_from_los(const Pose2& bs, const std::vector<Measurement>& z, std::size_t los_index,
                            const LosInitConfig& config);

/// State whose UE block comes from `ue` and whose landmarks are initialized
/// from it, one per NLoS measurement of the hypothesis.
JointState initialize_from_prior(const Pose2& bs, const std::vector<Measurement>& z, const Hypothesis& hypothesis,
                                 const UePrior& ue);

/// Measurements within 1 m of the shortest range and within 3 dB of the
/// strongest power, in index order.
std::vector<std::size_t> los_candidates(const std::vector<Measurement>& z);

/// With a prior: per candidate (with prior, without prior), then NLoS only;
/// 2 N_LoS + 1 in total. Without a prior: one hypothesis per candidate.
std::vector<Hypothesis> enumerate_hypotheses(const std::vector<Measurement>& z, bool prior_available);

enum class Ablation { OFv0, OFv1, OFv2, Proposed };

struct SnapshotConfig {
    bool robust = true;
    bool use_prior = true;
    std::optional<double> known_bias;
    double known_bias_information = 1e12;
    LosInitConfig los;
    GnOptions gn;

    static SnapshotConfig for_ablation(Ablation ablation);
};

/// Every hypothesis failed; `diagnostics` holds one line per hypothesis.
class SnapshotError : public std::runtime_error {
public:
    SnapshotError(const std::string& what, std::vector<std::string> diagnostics)
        : std::runtime_error(what), diagnostics_(std::move(diagnostics)) {}

    const std::vector<std::string>& diagnostics() const { return diagnostics_; }

private:
    std::vector<std::string> diagnostics_;
};

/// Solves every hypothesis and keeps the lowest cost (earlier hypothesis on ties).
SlamSolution solve_snapshot(const Pose2& bs, const std::vector<Measurement>& z, const std::optional<UePrior>& prior,
                            const SnapshotConfig& config);

struct TrajectoryStep {
    std::optional<SlamSolution> solution;
    std::string error;
    double seconds = 0.0;
};

/// Sequential pass; each position uses the last successful UE estimate as
/// prior mean with covariance `prior_covariance` when the config allows priors.
std::vector<TrajectoryStep> run_trajectory(const Pose2& bs, const std::vector<std::vector<Measurement>>& z,
                                           const SnapshotConfig& config,
                                           const std::vector<double>& known_biases = {},
                                           const Eigen::Matrix4d& prior_covariance = Eigen::Matrix4d::Identity());

const char* to_string(Ablation ablation);
Ablation parse_ablation(const std::string& name);

} // namespace mmslam
