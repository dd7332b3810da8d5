#include "mmslam/simulate.hpp"

#include "mmslam/errors.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace mmslam {

namespace {

std::vector<double> uniform_axis(int count, double fov)
{
    if (count < 2) {
        throw std::invalid_argument("codebook needs at least two beams per side");
    }
    std::vector<double> a(static_cast<std::size_t>(count));
    const double step = fov / count;
    for (int i = 0; i < count; ++i) {
        a[static_cast<std::size_t>(i)] = -fov / 2.0 + (i + 0.5) * step;
    }
    return a;
}

constexpr double kFullCircleTol = 1e-9;

} // namespace

BeamCodebook BeamCodebook::uniform(int l_tx, double tx_fov, int l_rx, double rx_fov, int elements)
{
    BeamCodebook cb;
    cb.tx_angles = uniform_axis(l_tx, tx_fov);
    cb.rx_angles = uniform_axis(l_rx, rx_fov);
    cb.elements_per_row = elements;
    cb.tx_circular = tx_fov >= 2.0 * kPi - kFullCircleTol;
    cb.rx_circular = rx_fov >= 2.0 * kPi - kFullCircleTol;
    return cb;
}

int BeamCodebook::size(Side side) const { return static_cast<int>(angles(side).size()); }

const std::vector<double>& BeamCodebook::angles(Side side) const
{
    return side == Side::Tx ? tx_angles : rx_angles;
}

bool BeamCodebook::circular(Side side) const { return side == Side::Tx ? tx_circular : rx_circular; }

double BeamCodebook::spacing(Side side) const
{
    const auto& a = angles(side);
    return (a.back() - a.front()) / static_cast<double>(a.size() - 1);
}

int BeamCodebook::nearest_beam(Side side, double angle) const
{
    const auto& a = angles(side);
    int best = 0;
    double best_d = std::abs(wrap_angle(a[0] - angle));
    for (std::size_t i = 1; i < a.size(); ++i) {
        const double d = std::abs(wrap_angle(a[i] - angle));
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(i);
        }
    }
    return best;
}

double BeamCodebook::beamwidth() const
{
    // Bisection on the half-power point of the boresight pattern.
    BeamCodebook probe = *this;
    probe.tx_angles = {0.0, 1.0};
    const double peak = beam_gain(probe, Side::Tx, 0, 0.0);
    double lo = 0.0;
    double hi = 2.0 / elements_per_row;  // first null of the uniform array
    while (beam_gain(probe, Side::Tx, 0, hi) > 0.5 * peak && hi < kPi / 2) {
        hi *= 1.5;
    }
    for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        (beam_gain(probe, Side::Tx, 0, mid) > 0.5 * peak ? lo : hi) = mid;
    }
    return 2.0 * lo;
}

cdouble beam_response(const BeamCodebook& codebook, Side side, int beam_index, double angle)
{
    const auto& a = codebook.angles(side);
    if (beam_index < 0 || beam_index >= static_cast<int>(a.size())) {
        throw std::out_of_range("beam index " + std::to_string(beam_index));
    }
    const double offset = wrap_angle(angle - a[static_cast<std::size_t>(beam_index)]);
    if (std::abs(offset) > kPi / 2.0) {
        return {0.0, 0.0};
    }
    const int n = codebook.elements_per_row;
    const double u = kPi * std::sin(offset);
    cdouble sum{0.0, 0.0};
    for (int e = 0; e < n; ++e) {
        const double w = codebook.taper.empty() ? 1.0 : codebook.taper[static_cast<std::size_t>(e)];
        sum += w * std::polar(1.0, u * (e - 0.5 * (n - 1)));
    }
    return sum;
}

double beam_gain(const BeamCodebook& codebook, Side side, int beam_index, double angle)
{
    return std::norm(beam_response(codebook, side, beam_index, angle));
}

Eigen::VectorXd beam_gain_vector(const BeamCodebook& codebook, Side side, double angle)
{
    Eigen::VectorXd g(codebook.size(side));
    for (int i = 0; i < g.size(); ++i) {
        g(i) = beam_gain(codebook, side, i, angle);
    }
    return g;
}

Eigen::VectorXcd rs_sequence(int sequence_id, int symbol, int length)
{
    Rng rng(0x9E3779B97F4A7C15ULL ^ (static_cast<std::uint64_t>(sequence_id) * 1000003ULL +
                                     static_cast<std::uint64_t>(symbol)));
    std::uniform_int_distribution<int> quadrant(0, 3);
    Eigen::VectorXcd x(length);
    for (int k = 0; k < length; ++k) {
        x(k) = std::polar(1.0, kPi / 4.0 + kPi / 2.0 * quadrant(rng));
    }
    return x;
}

WaveformConfig WaveformConfig::make(int subcarriers, int symbols, double scs, double carrier, int sequence_id)
{
    if (subcarriers < 1 || symbols < 1 || !(scs > 0.0)) {
        throw std::invalid_argument("WaveformConfig: subcarriers, symbols and scs must be positive");
    }
    WaveformConfig wf;
    wf.subcarriers = subcarriers;
    wf.symbols = symbols;
    wf.scs = scs;
    // Useful symbol plus normal cyclic prefix (144/2048).
    wf.symbol_duration = (1.0 + 144.0 / 2048.0) / scs;
    wf.carrier = carrier;
    wf.sequence_id = sequence_id;
    wf.rs_symbols.resize(subcarriers, symbols);
    for (int m = 0; m < symbols; ++m) {
        wf.rs_symbols.col(m) = rs_sequence(sequence_id, m, subcarriers);
    }
    return wf;
}

bool Scene::los_visible(std::size_t index) const
{
    return index >= los_blocked.size() || !los_blocked[index];
}

UEState Scene::ue_state(std::size_t index) const
{
    const Pose2& p = ue_trajectory.at(index);
    UEState s;
    s.position = p.position;
    s.heading = p.heading;
    s.bias = index < bias_trajectory.size() ? bias_trajectory[index] : 0.0;
    return s;
}

PathTruth make_path(const Pose2& bs, const Pose2& ue, PathKind kind, const Eigen::Vector2d* landmark,
                    double reflection, double carrier)
{
    JointState x;
    x.ue.position = ue.position;
    x.ue.heading = ue.heading;
    PathKind geometric = PathKind::los();
    if (!kind.is_los()) {
        x.landmarks.push_back({*landmark});
        geometric = PathKind::nlos(0);
    }
    const Eigen::Vector3d h = predict_measurement(bs, x, geometric);
    PathTruth p;
    p.kind = kind;
    p.range = h(0);
    p.delay = h(0) / kSpeedOfLight;
    p.aod = h(1);
    p.aoa = h(2);
    p.gain = std::polar(reflection / p.range, -2.0 * kPi * std::fmod(carrier * p.delay, 1.0));
    return p;
}

std::vector<PathTruth> true_paths(const Scene& scene, std::size_t position_index, double carrier)
{
    if (position_index >= scene.size()) {
        throw std::out_of_range("position index " + std::to_string(position_index));
    }
    const Pose2& ue = scene.ue_trajectory[position_index];
    std::vector<PathTruth> paths;
    auto radiated = [&](const PathTruth& p) { return std::abs(p.aod) <= scene.tx_half_fov; };
    if (scene.los_visible(position_index)) {
        PathTruth p = make_path(scene.bs, ue, PathKind::los(), nullptr, 1.0, carrier);
        if (radiated(p)) {
            paths.push_back(p);
        }
    }
    for (std::size_t k = 0; k < scene.landmarks.size(); ++k) {
        const auto& lm = scene.landmarks[k];
        PathTruth p = make_path(scene.bs, ue, PathKind::nlos(k), &lm.landmark.position, lm.reflection, carrier);
        if (radiated(p)) {
            paths.push_back(p);
        }
    }
    return paths;
}

Eigen::MatrixXd brsrp_model(const std::vector<PathTruth>& paths, const BeamCodebook& codebook)
{
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(codebook.size(Side::Tx), codebook.size(Side::Rx));
    for (const auto& p : paths) {
        b.noalias() += p.power() * beam_gain_vector(codebook, Side::Tx, p.aod) *
                       beam_gain_vector(codebook, Side::Rx, p.aoa).transpose();
    }
    return b;
}

BrsrpMap synth_brsrp(const std::vector<PathTruth>& paths, const BeamCodebook& codebook, double noise_floor,
                     int n_rs, Rng& rng)
{
    if (!(noise_floor >= 0.0)) {
        throw std::invalid_argument("synth_brsrp: noise floor must be >= 0");
    }
    if (n_rs < 1) {
        throw std::invalid_argument("synth_brsrp: N_RS must be positive");
    }
    BrsrpMap map;
    map.codebook = codebook;
    map.noise_floor = noise_floor;
    map.values = brsrp_model(paths, codebook);
    if (noise_floor > 0.0) {
        // Mean of n_rs exponentials (|CN(0, s2)|^2) is Gamma(n_rs, s2 / n_rs).
        std::gamma_distribution<double> noise(static_cast<double>(n_rs), noise_floor / n_rs);
        for (Eigen::Index j = 0; j < map.values.cols(); ++j) {
            for (Eigen::Index i = 0; i < map.values.rows(); ++i) {
                map.values(i, j) += noise(rng);
            }
        }
    }
    return map;
}

namespace {

cdouble complex_gaussian(Rng& rng, double variance)
{
    std::normal_distribution<double> n(0.0, std::sqrt(variance / 2.0));
    const double re = n(rng);
    const double im = n(rng);
    return {re, im};
}

} // namespace

Eigen::MatrixXcd synth_rs_samples(const std::vector<PathTruth>& paths, const BeamCodebook& codebook,
                                  const WaveformConfig& wf, int tx_beam, int rx_beam, double noise_var, Rng& rng,
                                  double window_start)
{
    const int K = wf.subcarriers;
    const int M = wf.symbols;
    Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(K, M);
    for (const auto& p : paths) {
        const cdouble amp = p.gain * beam_response(codebook, Side::Tx, tx_beam, p.aod) *
                            beam_response(codebook, Side::Rx, rx_beam, p.aoa);
        if (amp == cdouble{0.0, 0.0}) {
            continue;
        }
        const double tau_f = p.delay - window_start;
        for (int m = 0; m < M; ++m) {
            const cdouble doppler = std::polar(1.0, 2.0 * kPi * m * wf.symbol_duration * p.doppler);
            for (int k = 0; k < K; ++k) {
                y(k, m) += amp * doppler * std::polar(1.0, -2.0 * kPi * k * wf.scs * tau_f) * wf.rs_symbols(k, m);
            }
        }
    }
    if (noise_var > 0.0) {
        for (int m = 0; m < M; ++m) {
            for (int k = 0; k < K; ++k) {
                y(k, m) += complex_gaussian(rng, noise_var);
            }
        }
    }
    return y;
}

Eigen::VectorXcd synth_time_samples(const std::vector<PathTruth>& paths, const BeamCodebook& codebook,
                                    const WaveformConfig& wf, int tx_beam, int rx_beam, double noise_var, Rng& rng,
                                    long buffer_start, int length, double clock_bias_seconds)
{
    const int K = wf.subcarriers;
    const double fs = wf.sample_rate();
    const double symbol = 1.0 / wf.scs;
    const double norm = 1.0 / std::sqrt(static_cast<double>(K));
    Eigen::VectorXcd y = Eigen::VectorXcd::Zero(length);
    for (const auto& p : paths) {
        const cdouble amp = p.gain * beam_response(codebook, Side::Tx, tx_beam, p.aod) *
                            beam_response(codebook, Side::Rx, rx_beam, p.aoa);
        if (amp == cdouble{0.0, 0.0}) {
            continue;
        }
        const double arrival = p.delay - clock_bias_seconds;
        for (int q = 0; q < length; ++q) {
            const double t = static_cast<double>(buffer_start + q) / fs - arrival;
            if (t < 0.0 || t >= symbol) {
                continue;
            }
            const cdouble w = std::polar(1.0, 2.0 * kPi * wf.scs * t);
            cdouble phasor{1.0, 0.0};
            cdouble s{0.0, 0.0};
            for (int k = 0; k < K; ++k) {
                s += wf.rs_symbols(k, 0) * phasor;
                phasor *= w;
            }
            y(q) += amp * norm * s;
        }
    }
    if (noise_var > 0.0) {
        for (int q = 0; q < length; ++q) {
            y(q) += complex_gaussian(rng, noise_var);
        }
    }
    return y;
}

double exact_brsrp(const Eigen::MatrixXcd& grid)
{
    if (grid.size() == 0) {
        throw std::invalid_argument("exact_brsrp: empty grid");
    }
    return grid.cwiseAbs2().sum() / static_cast<double>(grid.size());
}

double approx_brsrp(const std::vector<PathTruth>& paths, const BeamCodebook& codebook, int tx_beam, int rx_beam,
                    double noise_var)
{
    double b = noise_var;
    for (const auto& p : paths) {
        b += p.power() * beam_gain(codebook, Side::Tx, tx_beam, p.aod) * beam_gain(codebook, Side::Rx, rx_beam, p.aoa);
    }
    return b;
}

std::vector<Measurement> synth_measurements(const std::vector<PathTruth>& paths, const Eigen::Matrix3d& covariance,
                                            double bias, Rng& rng, const OutlierModel& outliers)
{
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(covariance);
    if (eig.info() != Eigen::Success || eig.eigenvalues().minCoeff() < -1e-12) {
        throw std::invalid_argument("synth_measurements: covariance is not positive semidefinite");
    }
    const Eigen::Matrix3d sqrt_r =
        eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() * eig.eigenvectors().transpose();

    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<Measurement> z;
    z.reserve(paths.size());
    for (const auto& p : paths) {
        const Eigen::Vector3d n(normal(rng), normal(rng), normal(rng));
        const Eigen::Vector3d e = sqrt_r * n;
        Measurement m;
        m.range = p.range - bias + e(0);
        m.aod = wrap_angle(p.aod + e(1));
        m.aoa = wrap_angle(p.aoa + e(2));
        m.covariance = covariance;
        m.power = p.power();
        if (unit(rng) < outliers.rate) {
            m.range += outliers.min_excess + (outliers.max_excess - outliers.min_excess) * unit(rng);
            m.aod = wrap_angle(-kPi + 2.0 * kPi * unit(rng));
            m.aoa = wrap_angle(-kPi + 2.0 * kPi * unit(rng));
        }
        z.push_back(m);
    }
    return z;
}

std::vector<double> random_walk_bias(std::size_t n, double initial, double step_variance, Rng& rng)
{
    std::normal_distribution<double> step(0.0, std::sqrt(step_variance));
    std::vector<double> b(n);
    double current = initial;
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0) {
            current += step(rng);
        }
        b[i] = current;
    }
    return b;
}

Scene default_scene(std::uint64_t seed)
{
    Scene s;
    s.rng_seed = seed;
    s.bs.position = {0.0, 0.0};
    s.bs.heading = 0.0;

    // 28 steps north along x = 4, then 17 steps east along y = 7.5.
    for (int i = 0; i < 28; ++i) {
        s.ue_trajectory.push_back({Eigen::Vector2d(4.0, -6.0 + 0.5 * i), kPi / 2.0});
    }
    for (int i = 0; i < 17; ++i) {
        s.ue_trajectory.push_back({Eigen::Vector2d(4.5 + 0.5 * i, 7.5), 0.0});
    }

    // Room-scale reflectors a few meters off the route.
    s.landmarks = {
        {{Eigen::Vector2d(7.0, -5.0)}, 0.9},
        {{Eigen::Vector2d(8.0, 1.0)}, 0.9},
        {{Eigen::Vector2d(7.5, 4.5)}, 0.85},
        {{Eigen::Vector2d(1.0, 9.5)}, 0.8},
        {{Eigen::Vector2d(9.0, 10.5)}, 0.85},
        {{Eigen::Vector2d(2.5, -8.0)}, 0.8},
        {{Eigen::Vector2d(13.0, 4.5)}, 0.85},
    };

    s.los_blocked.assign(s.ue_trajectory.size(), false);
    for (std::size_t i : {12u, 13u, 14u, 33u, 34u, 35u}) {
        s.los_blocked[i] = true;
    }

    Rng rng(seed);
    s.bias_trajectory = random_walk_bias(s.ue_trajectory.size(), 3.0, 1.0, rng);
    return s;
}

Scene random_scene(std::uint64_t seed, std::size_t n_positions, std::size_t n_landmarks)
{
    Rng rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto uniform = [&](double a, double b) { return a + (b - a) * unit(rng); };

    Scene s;
    s.rng_seed = seed;
    const Eigen::Vector2d start(uniform(3.0, 8.0), uniform(-6.0, -2.0));
    const double course = uniform(kPi / 3.0, 2.0 * kPi / 3.0);
    const Eigen::Vector2d dir(std::cos(course), std::sin(course));
    for (std::size_t i = 0; i < n_positions; ++i) {
        s.ue_trajectory.push_back({start + 0.5 * static_cast<double>(i) * dir, course});
    }

    // Reflectors beside the route, 2 to 7 m to either side.
    const Eigen::Vector2d normal(-dir.y(), dir.x());
    const double length = 0.5 * static_cast<double>(n_positions);
    auto acceptable = [&](const Eigen::Vector2d& p) {
        if (p.norm() < 2.0 || std::abs(std::atan2(p.y(), p.x())) > deg2rad(80.0)) {
            return false;
        }
        for (const auto& u : s.ue_trajectory) {
            // Too close to the UE, or a bounce whose excess path over LoS is
            // below a meter and so unresolvable from the direct path.
            const double excess = p.norm() + (u.position - p).norm() - u.position.norm();
            if ((u.position - p).norm() < 1.5 || excess < 1.0) {
                return false;
            }
        }
        return true;
    };
    for (int attempt = 0; s.landmarks.size() < n_landmarks; ++attempt) {
        if (attempt > 100000) {
            throw std::runtime_error("random_scene: cannot place landmarks");
        }
        const double side = unit(rng) < 0.5 ? -1.0 : 1.0;
        const Eigen::Vector2d p = start + uniform(-2.0, length + 2.0) * dir + side * uniform(2.0, 7.0) * normal;
        if (acceptable(p)) {
            s.landmarks.push_back({{p}, uniform(0.6, 0.95)});
        }
    }

    s.los_blocked.assign(n_positions, false);
    for (std::size_t i = 1; i < n_positions; ++i) {
        s.los_blocked[i] = unit(rng) < 0.15;
    }
    s.bias_trajectory = random_walk_bias(n_positions, uniform(-5.0, 5.0), 1.0, rng);
    return s;
}

Eigen::Matrix3d diag_covariance(double range_std, double aod_std, double aoa_std)
{
    return Eigen::Vector3d(range_std * range_std, aod_std * aod_std, aoa_std * aoa_std).asDiagonal();
}

} // namespace mmslam
