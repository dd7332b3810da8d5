#include "mmslam/slam.hpp"

#include "mmslam/errors.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

namespace mmslam {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Landmark iterates closer than this to the BS or the UE are rejected; at the
// endpoints themselves the bounce angles are undefined.
constexpr double kLandmarkClearance = 0.25;

Eigen::Matrix3d checked_inverse(const Eigen::Matrix3d& r)
{
    Eigen::LLT<Eigen::Matrix3d> llt(r);
    if (llt.info() != Eigen::Success || !r.isApprox(r.transpose())) {
        throw std::invalid_argument("measurement covariance is not symmetric positive definite");
    }
    return llt.solve(Eigen::Matrix3d::Identity());
}

Eigen::VectorXd prior_residual(const Eigen::VectorXd& x, const GaussianPrior& prior)
{
    if (prior.mean.size() != x.size() || prior.information.rows() != x.size() ||
        prior.information.cols() != x.size()) {
        throw std::invalid_argument("prior dimension does not match the state");
    }
    Eigen::VectorXd d = x - prior.mean;
    d(2) = wrap_angle(d(2));
    return d;
}

double loss(double q, bool robust) { return robust ? std::log1p(q) : q; }

double loss_weight(double q, bool robust) { return robust ? 1.0 / (1.0 + q) : 1.0; }

void check_sizes(const std::vector<Measurement>& z, const std::vector<PathKind>& kinds)
{
    if (z.size() != kinds.size()) {
        throw std::invalid_argument("measurement and path-role lists differ in length");
    }
}

std::string block_name(Eigen::Index index)
{
    if (index < kUeDim) {
        return "ue";
    }
    return "landmark " + std::to_string((index - kUeDim) / 2);
}

void check_rank(const Eigen::MatrixXd& a, double tolerance)
{
    const Eigen::VectorXd diag = a.diagonal();
    for (Eigen::Index i = 0; i < diag.size(); ++i) {
        if (!(diag(i) > 0.0)) {
            throw RankDeficiencyError(block_name(i), "normal matrix has no information on state " +
                                                         std::to_string(i) + " (" + block_name(i) + ")");
        }
    }
    // Jacobi scaling removes the unit mismatch between meters, radians and
    // near-delta priors before judging the conditioning.
    const Eigen::VectorXd d = diag.cwiseSqrt().cwiseInverse();
    const Eigen::MatrixXd s = d.asDiagonal() * a * d.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s);
    const Eigen::VectorXd ev = eig.eigenvalues();
    if (ev(0) <= tolerance * ev(ev.size() - 1)) {
        const Eigen::VectorXd null_dir = d.asDiagonal() * eig.eigenvectors().col(0);
        Eigen::Index worst = 0;
        null_dir.cwiseAbs().maxCoeff(&worst);
        throw RankDeficiencyError(block_name(worst), "normal matrix is rank deficient; null direction dominated by " +
                                                         block_name(worst));
    }
}

} // namespace

GaussianPrior GaussianPrior::none(int dim)
{
    return {Eigen::VectorXd::Zero(dim), Eigen::MatrixXd::Zero(dim, dim)};
}

std::string Hypothesis::label() const
{
    std::string s = los_measurement ? "los:" + std::to_string(*los_measurement) : std::string("nlos-only");
    return s + (uses_prior ? "+prior" : "");
}

std::vector<PathKind> assign_paths(std::size_t n_measurements, const Hypothesis& hypothesis)
{
    if (hypothesis.los_measurement && *hypothesis.los_measurement >= n_measurements) {
        throw std::out_of_range("LoS measurement index out of range");
    }
    std::vector<PathKind> kinds;
    kinds.reserve(n_measurements);
    std::size_t next = 0;
    for (std::size_t n = 0; n < n_measurements; ++n) {
        if (hypothesis.los_measurement == n) {
            kinds.push_back(PathKind::los());
        } else {
            kinds.push_back(PathKind::nlos(next++));
        }
    }
    return kinds;
}

double normalized_residual(const Measurement& z, const Eigen::Vector3d& h)
{
    const Eigen::Vector3d r = measurement_residual(z.vector(), h);
    return r.dot(checked_inverse(z.covariance) * r);
}

Eigen::Matrix3d inflate_covariance(const Eigen::Matrix3d& r, double q)
{
    if (!(q >= 0.0)) {
        throw std::invalid_argument("inflate_covariance: q must be >= 0");
    }
    return (1.0 + q) * r;
}

double objective(const Pose2& bs, const JointState& x, const std::vector<Measurement>& z,
                 const std::vector<PathKind>& kinds, const GaussianPrior& prior, bool robust)
{
    check_sizes(z, kinds);
    const Eigen::VectorXd d = prior_residual(x.to_vector(), prior);
    double cost = d.dot(prior.information * d);
    for (std::size_t n = 0; n < z.size(); ++n) {
        cost += loss(normalized_residual(z[n], predict_measurement(bs, x, kinds[n])), robust);
    }
    return cost;
}

std::pair<Eigen::MatrixXd, Eigen::VectorXd> normal_equations(const Pose2& bs, const JointState& x,
                                                             const std::vector<Measurement>& z,
                                                             const std::vector<PathKind>& kinds,
                                                             const GaussianPrior& prior, bool robust)
{
    check_sizes(z, kinds);
    const Eigen::VectorXd d = prior_residual(x.to_vector(), prior);
    Eigen::MatrixXd a = prior.information;
    Eigen::VectorXd b = -prior.information * d;
    for (std::size_t n = 0; n < z.size(); ++n) {
        const Eigen::Matrix3d r_inv = checked_inverse(z[n].covariance);
        const Eigen::Vector3d res = measurement_residual(z[n].vector(), predict_measurement(bs, x, kinds[n]));
        const double w = loss_weight(res.dot(r_inv * res), robust);
        const Eigen::MatrixXd h = jacobian_measurement(bs, x, kinds[n]);
        const Eigen::MatrixXd ht_w = h.transpose() * (w * r_inv);
        a.noalias() += ht_w * h;
        b.noalias() += ht_w * res;
    }
    return {a, b};
}

Eigen::VectorXd objective_gradient(const Pose2& bs, const JointState& x, const std::vector<Measurement>& z,
                                   const std::vector<PathKind>& kinds, const GaussianPrior& prior, bool robust)
{
    return -2.0 * normal_equations(bs, x, z, kinds, prior, robust).second;
}

SlamSolution gn_solve(const Pose2& bs, const std::vector<Measurement>& z, const GaussianPrior& prior,
                      const Hypothesis& hypothesis, const JointState& init, const GnOptions& options)
{
    const std::vector<PathKind> kinds = assign_paths(z.size(), hypothesis);
    const std::size_t n_landmarks = z.size() - (hypothesis.los_measurement ? 1 : 0);
    if (init.landmarks.size() != n_landmarks) {
        throw std::invalid_argument("gn_solve: initial state has " + std::to_string(init.landmarks.size()) +
                                    " landmarks, hypothesis needs " + std::to_string(n_landmarks));
    }

    auto cost_at = [&](const JointState& x) {
        try {
            return objective(bs, x, z, kinds, prior, options.robust);
        } catch (const DegenerateGeometryError&) {
            return kInf;
        }
    };

    SlamSolution sol;
    sol.hypothesis = hypothesis;
    JointState x = init;
    double cost = objective(bs, x, z, kinds, prior, options.robust);
    sol.cost_history.push_back(cost);

    int it = 0;
    for (; it < options.max_iterations; ++it) {
        const auto [a, b] = normal_equations(bs, x, z, kinds, prior, options.robust);
        check_rank(a, options.rank_tolerance);
        const Eigen::VectorXd delta = a.ldlt().solve(b);
        if (delta.lpNorm<Eigen::Infinity>() < options.step_tolerance) {
            sol.converged = true;
            break;
        }
        // Armijo condition with directional derivative grad^T delta = -2 b^T delta.
        const double slope = -2.0 * b.dot(delta);
        const Eigen::VectorXd x0 = x.to_vector();
        double t = 1.0;
        bool accepted = false;
        double new_cost = cost;
        JointState trial;
        for (int k = 0; k <= options.max_backtracks; ++k) {
            Eigen::VectorXd xv = x0 + t * delta;
            xv(2) = wrap_angle(xv(2));
            trial = JointState::from_vector(xv);
            new_cost = cost_at(trial);
            if (new_cost <= cost + options.armijo_alpha * t * slope) {
                accepted = true;
                break;
            }
            t *= options.armijo_beta;
        }
        if (!accepted) {
            sol.converged = true;
            break;
        }
        const double decrease = cost - new_cost;
        x = trial;
        cost = new_cost;
        sol.cost_history.push_back(cost);
        if (decrease < options.decrease_tolerance || (t * delta).lpNorm<Eigen::Infinity>() < options.step_tolerance) {
            sol.converged = true;
            ++it;
            break;
        }
    }

    const auto [a, b] = normal_equations(bs, x, z, kinds, prior, options.robust);
    check_rank(a, options.rank_tolerance);
    sol.covariance = a.ldlt().solve(Eigen::MatrixXd::Identity(a.rows(), a.cols()));
    sol.covariance = 0.5 * (sol.covariance + sol.covariance.transpose()).eval();
    sol.estimate = x;
    sol.cost = cost;
    sol.iterations = it;
    return sol;
}

std::pair<double, double> bias_bounds(double los_range, double d_min, double d_max)
{
    if (!(d_min < d_max)) {
        throw std::invalid_argument("bias_bounds: d_min must be below d_max");
    }
    // range = d - B, so d in [d_min, d_max] bounds B from both sides.
    return {d_min - los_range, d_max - los_range};
}

UePrior init_ue_from_los(const Measurement& z_los, const Pose2& bs, double bias, double bias_variance)
{
    const double s = z_los.range + bias;
    const double ang = bs.heading + z_los.aod;
    const double c = std::cos(ang);
    const double sn = std::sin(ang);
    UePrior ue;
    ue.mean << bs.position.x() + s * c, bs.position.y() + s * sn, wrap_angle(ang + kPi - z_los.aoa), bias;

    // Jacobian of the mean with respect to [range, aod, aoa, bias].
    Eigen::Matrix4d h;
    h << c, -s * sn, 0.0, c,
         sn, s * c, 0.0, sn,
         0.0, 1.0, -1.0, 0.0,
         0.0, 0.0, 0.0, 1.0;
    Eigen::Matrix4d r = Eigen::Matrix4d::Zero();
    r.topLeftCorner<3, 3>() = z_los.covariance;
    r(3, 3) = bias_variance;
    ue.covariance = h * r * h.transpose();
    return ue;
}

namespace {

JointState ue_only_state(const Eigen::Vector4d& mean, const Landmark& m)
{
    JointState x;
    x.ue.position = mean.head<2>();
    x.ue.heading = mean(2);
    x.ue.bias = mean(3);
    x.landmarks = {m};
    return x;
}

// Point at distance t along `dir` from `origin` whose bounce via `other` has
// total length d: |origin + t dir - other| + t = d.
std::optional<Eigen::Vector2d> on_ellipse(const Eigen::Vector2d& origin, const Eigen::Vector2d& dir,
                                          const Eigen::Vector2d& other, double d)
{
    const Eigen::Vector2d v = origin - other;
    const double denom = 2.0 * (d + v.dot(dir));
    if (denom > 1e-9) {
        const double t = (d * d - v.squaredNorm()) / denom;
        if (t > 0.0) {
            return origin + t * dir;
        }
    }
    return std::nullopt;
}

// Starting points: the AoD/AoA ray intersection, and the points on each ray
// whose bistatic length matches range + bias. The ray intersection alone
// degenerates when the reflector lies behind the UE as seen from the BS.
std::vector<Eigen::Vector2d> initial_landmark_guesses(const Measurement& z_n, const Pose2& bs, const UePrior& ue)
{
    const Eigen::Vector2d p_ue = ue.mean.head<2>();
    const Eigen::Vector2d u1(std::cos(bs.heading + z_n.aod), std::sin(bs.heading + z_n.aod));
    const Eigen::Vector2d u2(std::cos(ue.mean(2) + z_n.aoa), std::sin(ue.mean(2) + z_n.aoa));
    std::vector<Eigen::Vector2d> out;

    // bs + t u1 = ue + s u2
    Eigen::Matrix2d m;
    m << u1, -u2;
    if (std::abs(m.determinant()) > 1e-3) {
        const Eigen::Vector2d ts = m.inverse() * (p_ue - bs.position);
        if (ts(0) > 0.0 && ts(1) > 0.0) {
            out.push_back(bs.position + ts(0) * u1);
        }
    }
    const double d = z_n.range + ue.mean(3);
    if (const auto g = on_ellipse(bs.position, u1, p_ue, d)) {
        out.push_back(*g);
    }
    if (const auto g = on_ellipse(p_ue, u2, bs.position, d)) {
        out.push_back(*g);
    }
    if (out.empty()) {
        out.push_back(bs.position + 0.5 * std::max(d, 1.0) * u1);
    }
    return out;
}

} // namespace

LandmarkInit init_landmark(const Measurement& z_n, const Pose2& bs, const UePrior& ue)
{
    const Eigen::Matrix4d cov = ue.covariance;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> eig(cov);
    if (eig.eigenvalues().minCoeff() < -1e-9 * std::max(1.0, eig.eigenvalues().maxCoeff())) {
        throw std::invalid_argument("init_landmark: UE covariance is not positive semidefinite");
    }
    const PathKind kind = PathKind::nlos(0);

    auto weighted = [&](const Eigen::Vector2d& m, Eigen::Vector3d* res, Eigen::Matrix3d* w_inv,
                        Eigen::Matrix<double, 3, 2>* jm) {
        const JointState x = ue_only_state(ue.mean, {m});
        const Eigen::Vector3d r = measurement_residual(z_n.vector(), predict_measurement(bs, x, kind));
        const Eigen::MatrixXd h = jacobian_measurement(bs, x, kind);
        const Eigen::Matrix<double, 3, 4> hs = h.leftCols<kUeDim>();
        const Eigen::Matrix3d w = hs * cov * hs.transpose() + z_n.covariance;
        const Eigen::Matrix3d wi = w.ldlt().solve(Eigen::Matrix3d::Identity());
        if (res) {
            *res = r;
        }
        if (w_inv) {
            *w_inv = wi;
        }
        if (jm) {
            *jm = h.rightCols<2>();
        }
        return r.dot(wi * r);
    };
    const Eigen::Vector2d p_ue = ue.mean.head<2>();
    auto safe_cost = [&](const Eigen::Vector2d& m) {
        if ((m - bs.position).norm() < kLandmarkClearance || (m - p_ue).norm() < kLandmarkClearance) {
            return kInf;
        }
        try {
            return weighted(m, nullptr, nullptr, nullptr);
        } catch (const DegenerateGeometryError&) {
            return kInf;
        }
    };

    auto refine = [&](Eigen::Vector2d m) {
        LandmarkInit out;
        double cost = safe_cost(m);
        if (!std::isfinite(cost)) {
            // Push the guess off whichever endpoint it sits on, along the measured ray.
            if ((m - bs.position).norm() < kLandmarkClearance) {
                m = bs.position + 2.0 * kLandmarkClearance *
                                      Eigen::Vector2d(std::cos(bs.heading + z_n.aod), std::sin(bs.heading + z_n.aod));
            } else {
                m = p_ue + 2.0 * kLandmarkClearance *
                               Eigen::Vector2d(std::cos(ue.mean(2) + z_n.aoa), std::sin(ue.mean(2) + z_n.aoa));
            }
            cost = safe_cost(m);
        }
        out.weak = true;
        constexpr int kMaxIterations = 50;
        for (int it = 0; it < kMaxIterations && std::isfinite(cost); ++it) {
            Eigen::Vector3d r;
            Eigen::Matrix3d wi;
            Eigen::Matrix<double, 3, 2> jm;
            weighted(m, &r, &wi, &jm);
            const Eigen::Matrix2d a = jm.transpose() * wi * jm;
            if (!(a.determinant() > 0.0)) {
                break;
            }
            const Eigen::Vector2d step = a.ldlt().solve(jm.transpose() * wi * r);
            double t = 1.0;
            bool moved = false;
            for (int k = 0; k < 30; ++k) {
                const double c = safe_cost(m + t * step);
                if (c <= cost) {
                    m += t * step;
                    cost = c;
                    moved = true;
                    break;
                }
                t *= 0.5;
            }
            // No descent left along the GN direction, or a negligible step: converged.
            if (!moved || (t * step).lpNorm<Eigen::Infinity>() < 1e-9) {
                out.weak = false;
                break;
            }
        }
        out.landmark.position = m;
        out.cost = cost;
        return out;
    };

    // Seeds starting next to an already refined landmark share its basin.
    std::optional<LandmarkInit> best;
    std::vector<Eigen::Vector2d> found;
    for (const Eigen::Vector2d& g : initial_landmark_guesses(z_n, bs, ue)) {
        if (std::any_of(found.begin(), found.end(), [&](const Eigen::Vector2d& f) { return (f - g).norm() < 0.5; })) {
            continue;
        }
        LandmarkInit l = refine(g);
        found.push_back(l.landmark.position);
        if (!best || l.cost < best->cost) {
            best = l;
        }
    }
    return *best;
}

JointState initialize_from_prior(const Pose2& bs, const std::vector<Measurement>& z, const Hypothesis& hypothesis,
                                 const UePrior& ue)
{
    JointState x;
    x.ue.position = ue.mean.head<2>();
    x.ue.heading = wrap_angle(ue.mean(2));
    x.ue.bias = ue.mean(3);
    for (std::size_t n = 0; n < z.size(); ++n) {
        if (hypothesis.los_measurement != n) {
            x.landmarks.push_back(init_landmark(z[n], bs, ue).landmark);
        }
    }
    return x;
}

LosInit initialize_from_los(const Pose2& bs, const std::vector<Measurement>& z, std::size_t los_index,
                            const LosInitConfig& config)
{
    if (los_index >= z.size()) {
        throw std::out_of_range("initialize_from_los: no such LoS measurement");
    }
    Hypothesis h;
    h.los_measurement = los_index;
    const std::vector<PathKind> kinds = assign_paths(z.size(), h);

    auto trial = [&](double bias) {
        LosInit init;
        init.bias = bias;
        init.ue = init_ue_from_los(z[los_index], bs, bias, config.bias_variance);
        init.state = initialize_from_prior(bs, z, h, init.ue);
        try {
            init.cost = objective(bs, init.state, z, kinds, GaussianPrior::none(init.state.dim()), config.robust);
        } catch (const DegenerateGeometryError&) {
            init.cost = kInf;
        }
        return init;
    };

    if (config.known_bias) {
        return trial(*config.known_bias);
    }

    const auto [lo, hi] = bias_bounds(z[los_index].range, config.d_min, config.d_max);
    const int n = std::max(config.grid_points, 3);
    std::vector<double> grid(static_cast<std::size_t>(n));
    std::vector<double> costs(static_cast<std::size_t>(n));
    LosInit best;
    best.cost = kInf;
    for (int g = 0; g < n; ++g) {
        grid[static_cast<std::size_t>(g)] = lo + (hi - lo) * g / (n - 1);
        LosInit t = trial(grid[static_cast<std::size_t>(g)]);
        costs[static_cast<std::size_t>(g)] = t.cost;
        if (t.cost < best.cost || g == 0) {
            best = std::move(t);
        }
    }

    // Golden-section search inside the brackets around the best grid points.
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return costs[static_cast<std::size_t>(a)] < costs[static_cast<std::size_t>(b)]; });
    const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
    for (int r = 0; r < std::min(config.restarts, n); ++r) {
        const int g = order[static_cast<std::size_t>(r)];
        double a = grid[static_cast<std::size_t>(std::max(g - 1, 0))];
        double b = grid[static_cast<std::size_t>(std::min(g + 1, n - 1))];
        double c = b - ratio * (b - a);
        double d = a + ratio * (b - a);
        double fc = trial(c).cost;
        double fd = trial(d).cost;
        // A millimeter bracket is far below the range noise; GN refines the bias afterwards.
        for (int it = 0; it < 40 && b - a > 1e-3; ++it) {
            if (fc < fd) {
                b = d;
                d = c;
                fd = fc;
                c = b - ratio * (b - a);
                fc = trial(c).cost;
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + ratio * (b - a);
                fd = trial(d).cost;
            }
        }
        LosInit t = trial(0.5 * (a + b));
        if (t.cost < best.cost) {
            best = std::move(t);
        }
    }
    return best;
}

std::vector<std::size_t> los_candidates(const std::vector<Measurement>& z)
{
    std::vector<std::size_t> out;
    if (z.empty()) {
        return out;
    }
    double min_range = kInf;
    double max_power = -kInf;
    for (const auto& m : z) {
        min_range = std::min(min_range, m.range);
        max_power = std::max(max_power, m.power);
    }
    const double power_floor = max_power * std::pow(10.0, -0.3);
    for (std::size_t n = 0; n < z.size(); ++n) {
        if (z[n].range <= min_range + 1.0 && z[n].power >= power_floor) {
            out.push_back(n);
        }
    }
    return out;
}

std::vector<Hypothesis> enumerate_hypotheses(const std::vector<Measurement>& z, bool prior_available)
{
    std::vector<Hypothesis> hyps;
    for (std::size_t n : los_candidates(z)) {
        if (prior_available) {
            hyps.push_back({n, true});
        }
        hyps.push_back({n, false});
    }
    if (prior_available && !z.empty()) {
        hyps.push_back({std::nullopt, true});
    }
    return hyps;
}

SnapshotConfig SnapshotConfig::for_ablation(Ablation ablation)
{
    SnapshotConfig c;
    c.use_prior = ablation == Ablation::OFv2 || ablation == Ablation::Proposed;
    c.robust = ablation == Ablation::OFv1 || ablation == Ablation::Proposed;
    c.los.robust = c.robust;
    c.gn.robust = c.robust;
    return c;
}

SlamSolution solve_snapshot(const Pose2& bs, const std::vector<Measurement>& z, const std::optional<UePrior>& prior,
                            const SnapshotConfig& config)
{
    const bool with_prior = config.use_prior && prior.has_value();
    const std::vector<Hypothesis> hyps = enumerate_hypotheses(z, with_prior);
    GnOptions gn = config.gn;
    gn.robust = config.robust;
    LosInitConfig los = config.los;
    los.robust = config.robust;
    los.known_bias = config.known_bias;

    std::optional<SlamSolution> best;
    std::vector<std::string> diagnostics;
    for (const auto& h : hyps) {
        try {
            JointState init;
            GaussianPrior p;
            if (h.uses_prior) {
                init = initialize_from_prior(bs, z, h, *prior);
                p = GaussianPrior::none(init.dim());
                p.mean.head<kUeDim>() = prior->mean;
                p.information.topLeftCorner<kUeDim, kUeDim>() =
                    prior->covariance.ldlt().solve(Eigen::Matrix4d::Identity());
            } else {
                init = initialize_from_los(bs, z, *h.los_measurement, los).state;
                p = GaussianPrior::none(init.dim());
                p.mean = init.to_vector();
            }
            if (config.known_bias) {
                // Fuse a near-delta bias observation into the UE prior block.
                const double kappa = config.known_bias_information;
                if (h.uses_prior) {
                    Eigen::Matrix4d info = p.information.topLeftCorner<kUeDim, kUeDim>();
                    Eigen::Vector4d eta = info * p.mean.head<kUeDim>();
                    info(3, 3) += kappa;
                    eta(3) += kappa * *config.known_bias;
                    p.mean.head<kUeDim>() = info.ldlt().solve(eta);
                    p.information.topLeftCorner<kUeDim, kUeDim>() = info;
                } else {
                    p.mean(3) = *config.known_bias;
                    p.information(3, 3) = kappa;
                }
                init.ue.bias = *config.known_bias;
            }
            SlamSolution s = gn_solve(bs, z, p, h, init, gn);
            if (!std::isfinite(s.cost)) {
                throw std::runtime_error("non-finite cost");
            }
            if (!best || s.cost < best->cost) {
                best = std::move(s);
            }
        } catch (const std::exception& e) {
            diagnostics.push_back(h.label() + ": " + e.what());
        }
    }
    if (!best) {
        std::string what = "no hypothesis produced a solution";
        if (hyps.empty()) {
            what += " (no LoS candidate and no prior)";
        }
        throw SnapshotError(what, diagnostics);
    }
    return *best;
}

std::vector<TrajectoryStep> run_trajectory(const Pose2& bs, const std::vector<std::vector<Measurement>>& z,
                                           const SnapshotConfig& config, const std::vector<double>& known_biases,
                                           const Eigen::Matrix4d& prior_covariance)
{
    if (!known_biases.empty() && known_biases.size() != z.size()) {
        throw std::invalid_argument("run_trajectory: known bias count does not match the trajectory");
    }
    std::vector<TrajectoryStep> steps(z.size());
    std::optional<UePrior> prior;
    for (std::size_t i = 0; i < z.size(); ++i) {
        SnapshotConfig c = config;
        if (!known_biases.empty()) {
            c.known_bias = known_biases[i];
        }
        const auto start = std::chrono::steady_clock::now();
        try {
            SlamSolution s = solve_snapshot(bs, z[i], prior, c);
            if (config.use_prior) {
                UePrior next;
                next.mean = s.estimate.to_vector().head<kUeDim>();
                next.covariance = prior_covariance;
                prior = next;
            }
            steps[i].solution = std::move(s);
        } catch (const SnapshotError& e) {
            std::string msg = e.what();
            for (const auto& d : e.diagnostics()) {
                msg += "; " + d;
            }
            steps[i].error = msg;
        } catch (const std::exception& e) {
            steps[i].error = e.what();
        }
        steps[i].seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
    return steps;
}

const char* to_string(Ablation ablation)
{
    switch (ablation) {
    case Ablation::OFv0:
        return "ofv0";
    case Ablation::OFv1:
        return "ofv1";
    case Ablation::OFv2:
        return "ofv2";
    case Ablation::Proposed:
        return "proposed";
    }
    return "proposed";
}

Ablation parse_ablation(const std::string& name)
{
    for (Ablation a : {Ablation::OFv0, Ablation::OFv1, Ablation::OFv2, Ablation::Proposed}) {
        if (name == to_string(a)) {
            return a;
        }
    }
    throw ConfigError("unknown ablation '" + name + "' (expected ofv0, ofv1, ofv2 or proposed)");
}

} // namespace mmslam
