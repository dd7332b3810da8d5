#include "mmslam/angles.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <tuple>

namespace mmslam {

namespace {

int index_distance(int a, int b, int size, bool circular)
{
    const int d = std::abs(a - b);
    return circular ? std::min(d, size - d) : d;
}

int wrap_index(int i, int size) { return ((i % size) + size) % size; }

struct DisjointSet {
    std::vector<std::size_t> parent;

    explicit DisjointSet(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }

    std::size_t find(std::size_t i)
    {
        while (parent[i] != i) {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        return i;
    }

    void unite(std::size_t a, std::size_t b)
    {
        a = find(a);
        b = find(b);
        if (a != b) {
            parent[std::max(a, b)] = std::min(a, b);
        }
    }
};

bool stronger(const AngleEstimate& a, const AngleEstimate& b)
{
    return std::tie(b.power, a.tx_index, a.rx_index) < std::tie(a.power, b.tx_index, b.rx_index);
}

} // namespace

std::pair<int, int> rank1_peak(const Eigen::MatrixXd& b_r)
{
    if (b_r.size() == 0) {
        throw std::invalid_argument("rank1_peak: empty matrix");
    }
    Eigen::Index ai = 0;
    Eigen::Index aj = 0;
    const double biggest = b_r.cwiseAbs().maxCoeff(&ai, &aj);
    if (!(biggest > 0.0)) {
        throw std::invalid_argument("rank1_peak: all-zero matrix");
    }
    const double sign = b_r(ai, aj) > 0.0 ? 1.0 : -1.0;
    int bi = 0;
    int bj = 0;
    double best = sign * b_r(0, 0);
    // Row-major scan so that strict > keeps the lexicographically first maximum.
    for (Eigen::Index i = 0; i < b_r.rows(); ++i) {
        for (Eigen::Index j = 0; j < b_r.cols(); ++j) {
            const double v = sign * b_r(i, j);
            if (v > best) {
                best = v;
                bi = static_cast<int>(i);
                bj = static_cast<int>(j);
            }
        }
    }
    return {bi, bj};
}

std::vector<AngleEstimate> cluster_candidates(const std::vector<AngleCandidate>& cands, const BeamCodebook& codebook,
                                              int radius)
{
    if (radius < 1) {
        throw std::invalid_argument("cluster_candidates: radius must be >= 1");
    }
    const int l_tx = codebook.size(Side::Tx);
    const int l_rx = codebook.size(Side::Rx);
    DisjointSet sets(cands.size());
    for (std::size_t a = 0; a < cands.size(); ++a) {
        for (std::size_t b = a + 1; b < cands.size(); ++b) {
            const int di = index_distance(cands[a].tx_index, cands[b].tx_index, l_tx, codebook.tx_circular);
            const int dj = index_distance(cands[a].rx_index, cands[b].rx_index, l_rx, codebook.rx_circular);
            if (std::max(di, dj) <= radius) {
                sets.unite(a, b);
            }
        }
    }

    std::vector<std::vector<std::size_t>> groups(cands.size());
    for (std::size_t a = 0; a < cands.size(); ++a) {
        groups[sets.find(a)].push_back(a);
    }

    std::vector<AngleEstimate> out;
    for (const auto& g : groups) {
        if (g.empty()) {
            continue;
        }
        AngleEstimate e;
        std::size_t peak = g.front();
        for (std::size_t a : g) {
            e.cluster_members.push_back(cands[a]);
            if (cands[a].power > cands[peak].power) {
                peak = a;
            }
        }
        // Weighted mean of offsets from the peak member keeps circular axes unwrapped.
        const double ref_aod = cands[peak].aod;
        const double ref_aoa = cands[peak].aoa;
        double w_sum = 0.0;
        double d_aod = 0.0;
        double d_aoa = 0.0;
        for (std::size_t a : g) {
            const double w = cands[a].power;
            w_sum += w;
            d_aod += w * wrap_angle(cands[a].aod - ref_aod);
            d_aoa += w * wrap_angle(cands[a].aoa - ref_aoa);
        }
        if (w_sum > 0.0) {
            d_aod /= w_sum;
            d_aoa /= w_sum;
        } else {
            d_aod = 0.0;
            d_aoa = 0.0;
        }
        e.aod = wrap_angle(ref_aod + d_aod);
        e.aoa = wrap_angle(ref_aoa + d_aoa);
        e.power = cands[peak].power;
        e.tx_index = cands[peak].tx_index;
        e.rx_index = cands[peak].rx_index;
        out.push_back(std::move(e));
    }
    std::sort(out.begin(), out.end(), stronger);
    return out;
}

int default_fit_window(const BeamCodebook& codebook)
{
    const double spacing = std::min(codebook.spacing(Side::Tx), codebook.spacing(Side::Rx));
    return std::max(1, static_cast<int>(std::lround(0.5 * codebook.beamwidth() / spacing)));
}

std::pair<double, double> polyfit_refine(const BrsrpMap& map, double aod, double aoa, int window)
{
    if (window < 1) {
        throw std::invalid_argument("polyfit_refine: window must be >= 1");
    }
    const BeamCodebook& cb = map.codebook;
    const int l_tx = cb.size(Side::Tx);
    const int l_rx = cb.size(Side::Rx);
    int i0 = cb.nearest_beam(Side::Tx, aod);
    int j0 = cb.nearest_beam(Side::Rx, aoa);
    // Centre the window on the strongest cell next to the start; deep SVD
    // components can put the candidate one beam off the map's peak.
    {
        const int si = i0;
        const int sj = j0;
        for (int di = -1; di <= 1; ++di) {
            for (int dj = -1; dj <= 1; ++dj) {
                const int i = cb.tx_circular ? wrap_index(si + di, l_tx) : si + di;
                const int j = cb.rx_circular ? wrap_index(sj + dj, l_rx) : sj + dj;
                if (i >= 0 && i < l_tx && j >= 0 && j < l_rx && map.values(i, j) > map.values(i0, j0)) {
                    i0 = i;
                    j0 = j;
                }
            }
        }
    }
    const double phi0 = cb.tx_angles[static_cast<std::size_t>(i0)];
    const double theta0 = cb.rx_angles[static_cast<std::size_t>(j0)];

    std::vector<Eigen::Matrix<double, 6, 1>> rows;
    std::vector<double> beta;
    for (int di = -window; di <= window; ++di) {
        int i = i0 + di;
        if (cb.tx_circular) {
            i = wrap_index(i, l_tx);
        } else if (i < 0 || i >= l_tx) {
            continue;
        }
        for (int dj = -window; dj <= window; ++dj) {
            int j = j0 + dj;
            if (cb.rx_circular) {
                j = wrap_index(j, l_rx);
            } else if (j < 0 || j >= l_rx) {
                continue;
            }
            const double phi = wrap_angle(cb.tx_angles[static_cast<std::size_t>(i)] - phi0);
            const double theta = wrap_angle(cb.rx_angles[static_cast<std::size_t>(j)] - theta0);
            Eigen::Matrix<double, 6, 1> r;
            r << 1.0, phi, theta, theta * theta, phi * theta, phi * phi;
            rows.push_back(r);
            beta.push_back(map.values(i, j));
        }
    }
    if (rows.size() < 6) {
        return {aod, aoa};
    }

    // Work in beam-spacing units so the normal matrix is well scaled.
    const double s_tx = cb.spacing(Side::Tx);
    const double s_rx = cb.spacing(Side::Rx);
    Eigen::Matrix<double, 6, 1> scale;
    scale << 1.0, s_tx, s_rx, s_rx * s_rx, s_tx * s_rx, s_tx * s_tx;
    Eigen::Matrix<double, 6, 6> n = Eigen::Matrix<double, 6, 6>::Zero();
    Eigen::Matrix<double, 6, 1> rhs = Eigen::Matrix<double, 6, 1>::Zero();
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const Eigen::Matrix<double, 6, 1> r = rows[k].cwiseQuotient(scale);
        const double w = std::max(beta[k], 0.0);
        n.noalias() += w * r * r.transpose();
        rhs.noalias() += w * beta[k] * r;
    }
    Eigen::FullPivLU<Eigen::Matrix<double, 6, 6>> lu(n);
    if (lu.rank() < 6) {
        return {aod, aoa};
    }
    const Eigen::Matrix<double, 6, 1> c = lu.solve(rhs).cwiseQuotient(scale);

    // Stationary point of c1 + c2 phi + c3 theta + c4 theta^2 + c5 phi theta + c6 phi^2.
    const double det = 4.0 * c(5) * c(3) - c(4) * c(4);
    if (!(c(5) < 0.0) || !(det > 0.0)) {
        return {aod, aoa};
    }
    const double phi = (c(4) * c(2) - 2.0 * c(3) * c(1)) / det;
    const double theta = (c(4) * c(1) - 2.0 * c(5) * c(2)) / det;
    if (!std::isfinite(phi) || !std::isfinite(theta) || std::abs(phi) > window * s_tx ||
        std::abs(theta) > window * s_rx) {
        return {aod, aoa};
    }
    return {wrap_angle(phi0 + phi), wrap_angle(theta0 + theta)};
}

SvdResult svd_extract_detailed(const BrsrpMap& map, const SvdParams& params)
{
    if (map.values.size() == 0) {
        throw std::invalid_argument("svd_extract: empty map");
    }
    if (!(params.power_ratio > 0.0 && params.power_ratio <= 100.0)) {
        throw std::invalid_argument("svd_extract: power ratio must be in (0, 100]");
    }
    const BeamCodebook& cb = map.codebook;
    if (map.values.rows() != cb.size(Side::Tx) || map.values.cols() != cb.size(Side::Rx)) {
        throw std::invalid_argument("svd_extract: map does not match its codebook");
    }
    const double threshold = params.power_threshold.value_or(1.1 * map.noise_floor);

    SvdResult res;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(map.values, Eigen::ComputeThinU | Eigen::ComputeThinV);
    res.singular_values = svd.singularValues();
    const Eigen::VectorXd s2 = res.singular_values.cwiseAbs2();
    const double total = s2.sum();
    if (!(total > 0.0)) {
        return res;
    }

    const double target = params.power_ratio / 100.0;
    double covered = 0.0;
    for (Eigen::Index r = 0; r < s2.size(); ++r) {
        if (!(s2(r) > 0.0)) {
            break;
        }
        const Eigen::MatrixXd b_r = res.singular_values(r) * svd.matrixU().col(r) * svd.matrixV().col(r).transpose();
        const auto [i, j] = rank1_peak(b_r);
        AngleCandidate c;
        c.tx_index = i;
        c.rx_index = j;
        c.aod = cb.tx_angles[static_cast<std::size_t>(i)];
        c.aoa = cb.rx_angles[static_cast<std::size_t>(j)];
        c.power = map.values(i, j);
        c.rank_index = static_cast<int>(r);
        res.candidates.push_back(c);
        covered += s2(r) / total;
        res.rank_used = static_cast<int>(r) + 1;
        if (covered >= target) {
            break;
        }
    }

    std::vector<AngleCandidate> kept;
    for (const auto& c : res.candidates) {
        if (c.power > threshold) {
            kept.push_back(c);
        }
    }
    res.estimates = cluster_candidates(kept, cb, params.cluster_radius);
    if (params.refine) {
        const int w = params.fit_window > 0 ? params.fit_window : default_fit_window(cb);
        for (auto& e : res.estimates) {
            std::tie(e.aod, e.aoa) = polyfit_refine(map, e.aod, e.aoa, w);
        }
    }
    return res;
}

std::vector<AngleEstimate> svd_extract(const BrsrpMap& map, const SvdParams& params)
{
    return svd_extract_detailed(map, params).estimates;
}

double cfar_alpha(int n_training, double pfa)
{
    if (n_training < 1 || !(pfa > 0.0 && pfa < 1.0)) {
        throw std::invalid_argument("cfar_alpha: need N >= 1 and 0 < pfa < 1");
    }
    return n_training * (std::pow(pfa, -1.0 / n_training) - 1.0);
}

std::vector<AngleEstimate> cfar_detect(const BrsrpMap& map, int train, int guard, double pfa)
{
    if (train < 1 || guard < 0) {
        throw std::invalid_argument("cfar_detect: need train >= 1 and guard >= 0");
    }
    const BeamCodebook& cb = map.codebook;
    const int l_tx = static_cast<int>(map.values.rows());
    const int l_rx = static_cast<int>(map.values.cols());
    const int outer = guard + train;
    if (l_tx <= 2 * outer || l_rx <= 2 * outer) {
        throw std::invalid_argument("cfar_detect: map smaller than the CFAR window");
    }

    std::vector<AngleCandidate> hits;
    for (int i = 0; i < l_tx; ++i) {
        for (int j = 0; j < l_rx; ++j) {
            double sum = 0.0;
            int count = 0;
            for (int di = -outer; di <= outer; ++di) {
                int ii = i + di;
                if (cb.tx_circular) {
                    ii = wrap_index(ii, l_tx);
                } else if (ii < 0 || ii >= l_tx) {
                    continue;
                }
                for (int dj = -outer; dj <= outer; ++dj) {
                    if (std::abs(di) <= guard && std::abs(dj) <= guard) {
                        continue;
                    }
                    int jj = j + dj;
                    if (cb.rx_circular) {
                        jj = wrap_index(jj, l_rx);
                    } else if (jj < 0 || jj >= l_rx) {
                        continue;
                    }
                    sum += map.values(ii, jj);
                    ++count;
                }
            }
            const double cut = map.values(i, j);
            if (count > 0 && cut > cfar_alpha(count, pfa) * sum / count) {
                AngleCandidate c;
                c.tx_index = i;
                c.rx_index = j;
                c.aod = cb.tx_angles[static_cast<std::size_t>(i)];
                c.aoa = cb.rx_angles[static_cast<std::size_t>(j)];
                c.power = cut;
                hits.push_back(c);
            }
        }
    }
    return cluster_candidates(hits, cb, 1);
}

} // namespace mmslam
