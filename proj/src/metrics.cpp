#include "mmslam/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <tuple>

namespace mmslam {

void GospaParams::validate() const
{
    if (!(cutoff > 0.0) || !(exponent >= 1.0) || !(penalty > 0.0 && penalty <= 2.0)) {
        throw std::invalid_argument("GOSPA parameters need cutoff > 0, exponent >= 1, 0 < penalty <= 2");
    }
}

double angle_distance_deg(const AnglePoint& a, const AnglePoint& b)
{
    return rad2deg(std::hypot(wrap_angle(a.aod - b.aod), wrap_angle(a.aoa - b.aoa)));
}

std::vector<int> hungarian(const Eigen::MatrixXd& cost)
{
    const int n = static_cast<int>(cost.rows());
    if (cost.cols() != n) {
        throw std::invalid_argument("hungarian: cost matrix must be square");
    }
    if (n == 0) {
        return {};
    }
    // Shortest augmenting path with row/column potentials, 1-based with a
    // virtual column 0.
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0);
    std::vector<double> v(n + 1, 0.0);
    std::vector<int> p(n + 1, 0);
    std::vector<int> way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<bool> used(n + 1, false);
        do {
            used[j0] = true;
            const int i0 = p[j0];
            double delta = inf;
            int j1 = 0;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) {
                    continue;
                }
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> row_to_col(n, -1);
    for (int j = 1; j <= n; ++j) {
        row_to_col[p[j] - 1] = j - 1;
    }
    return row_to_col;
}

GospaResult gospa_angles(const std::vector<AnglePoint>& estimates, const std::vector<AnglePoint>& truth,
                         const GospaParams& params)
{
    params.validate();
    const std::size_t n = estimates.size();
    const std::size_t m = truth.size();
    const double cut_p = std::pow(params.cutoff, params.exponent);
    const double unassigned = cut_p / params.penalty;

    // Rows: estimates then one dummy per truth. Columns: truths then one dummy
    // per estimate. Pairs at or beyond the cutoff cost more than leaving both
    // unassigned.
    const auto size = static_cast<Eigen::Index>(n + m);
    Eigen::MatrixXd cost = Eigen::MatrixXd::Zero(size, size);
    Eigen::MatrixXd dist(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            const double d = angle_distance_deg(estimates[i], truth[j]);
            dist(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = d;
            cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                d < params.cutoff ? std::pow(d, params.exponent) : 2.0 * unassigned + cut_p;
        }
        for (std::size_t j = m; j < n + m; ++j) {
            cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = unassigned;
        }
    }
    for (std::size_t i = n; i < n + m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = unassigned;
        }
    }

    GospaResult res;
    const std::vector<int> match = hungarian(cost);
    for (std::size_t i = 0; i < n; ++i) {
        const auto j = static_cast<std::size_t>(match[i]);
        if (j < m && dist(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) < params.cutoff) {
            res.assignment.emplace_back(i, j);
            res.localization += std::pow(dist(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)),
                                         params.exponent);
        }
    }
    res.false_detections = n - res.assignment.size();
    res.missed_detections = m - res.assignment.size();
    const double total =
        res.localization + static_cast<double>(res.false_detections + res.missed_detections) * unassigned;
    res.gospa = std::pow(total, 1.0 / params.exponent);
    return res;
}

SlfdResult slfd_metric(const std::vector<PathEstimate>& estimates, double tau_th, const BeamCodebook& codebook,
                       const GospaParams& params)
{
    params.validate();
    if (!(tau_th > 0.0)) {
        throw std::invalid_argument("slfd_metric: tau_th must be positive");
    }
    auto index_gap = [&](int a, int b, Side side) {
        const int d = std::abs(a - b);
        return codebook.circular(side) ? std::min(d, codebook.size(side) - d) : d;
    };
    auto key = [&](std::size_t i) {
        const auto& e = estimates[i];
        return std::make_tuple(e.power, e.aod, e.aoa, e.toa);
    };

    std::vector<bool> sidelobe(estimates.size(), false);
    for (std::size_t a = 0; a < estimates.size(); ++a) {
        for (std::size_t b = a + 1; b < estimates.size(); ++b) {
            const auto& ea = estimates[a];
            const auto& eb = estimates[b];
            const bool close_in_time = std::abs(ea.toa - eb.toa) <= tau_th;
            const bool adjacent = index_gap(ea.tx_index, eb.tx_index, Side::Tx) <= 1 ||
                                  index_gap(ea.rx_index, eb.rx_index, Side::Rx) <= 1;
            if (close_in_time && adjacent) {
                sidelobe[key(a) < key(b) ? a : b] = true;
            }
        }
    }
    SlfdResult res;
    for (std::size_t i = 0; i < sidelobe.size(); ++i) {
        if (sidelobe[i]) {
            res.flagged.push_back(i);
        }
    }
    res.count = res.flagged.size();
    res.gamma = std::pow(static_cast<double>(res.count) * std::pow(params.cutoff, params.exponent) / params.penalty,
                         1.0 / params.exponent);
    return res;
}

ErrorStats error_stats(const std::vector<double>& errors)
{
    ErrorStats s;
    if (errors.empty()) {
        return s;
    }
    double sum = 0.0;
    double sum_sq = 0.0;
    for (double e : errors) {
        sum += e;
        sum_sq += e * e;
    }
    const double n = static_cast<double>(errors.size());
    const double mean = sum / n;
    s.rmse = std::sqrt(sum_sq / n);
    double var = 0.0;
    for (double e : errors) {
        var += (e - mean) * (e - mean);
    }
    s.std = std::sqrt(var / n);
    return s;
}

TrajectoryReport trajectory_stats(const std::vector<TrajectoryStep>& steps, const Scene& truth)
{
    if (steps.size() != truth.size()) {
        throw std::invalid_argument("trajectory_stats: " + std::to_string(steps.size()) + " solutions for " +
                                    std::to_string(truth.size()) + " positions");
    }
    TrajectoryReport r;
    double seconds = 0.0;
    for (std::size_t i = 0; i < steps.size(); ++i) {
        seconds += steps[i].seconds;
        if (!steps[i].solution) {
            ++r.failures;
            continue;
        }
        const UEState est = steps[i].solution->estimate.ue;
        const UEState gt = truth.ue_state(i);
        r.position_errors.push_back((est.position - gt.position).norm());
        r.heading_errors.push_back(rad2deg(std::abs(wrap_angle(est.heading - gt.heading))));
        r.bias_errors.push_back(std::abs(est.bias - gt.bias));
    }
    r.position = error_stats(r.position_errors);
    r.heading = error_stats(r.heading_errors);
    r.bias = error_stats(r.bias_errors);
    r.mean_seconds = steps.empty() ? 0.0 : seconds / static_cast<double>(steps.size());
    return r;
}

} // namespace mmslam
