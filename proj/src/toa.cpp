#include "mmslam/toa.hpp"

#include <cmath>
#include <stdexcept>
#include <tuple>
#include <vector>

namespace mmslam {

ReferenceWaveform reference_waveform(const WaveformConfig& wf)
{
    const int K = wf.subcarriers;
    ReferenceWaveform ref;
    ref.sequence_id = wf.sequence_id;
    ref.samples.resize(K);
    const double norm = 1.0 / std::sqrt(static_cast<double>(K));
    for (int q = 0; q < K; ++q) {
        const cdouble w = std::polar(1.0, 2.0 * kPi * q / K);
        cdouble phasor{1.0, 0.0};
        cdouble s{0.0, 0.0};
        for (int k = 0; k < K; ++k) {
            s += wf.rs_symbols(k, 0) * phasor;
            phasor *= w;
        }
        ref.samples(q) = norm * s;
    }
    return ref;
}

CoarseToa coarse_toa(const Eigen::VectorXcd& rx, const std::vector<ReferenceWaveform>& refs, double sample_rate,
                     long buffer_start)
{
    if (rx.size() == 0 || refs.empty()) {
        throw std::invalid_argument("coarse_toa: empty input");
    }
    if (!(sample_rate > 0.0)) {
        throw std::invalid_argument("coarse_toa: sample rate must be positive");
    }
    CoarseToa best;
    best.sample_rate = sample_rate;
    double best_val = -1.0;
    for (const auto& ref : refs) {
        const Eigen::Index n = ref.samples.size();
        if (n == 0 || n > rx.size()) {
            throw std::invalid_argument("coarse_toa: reference longer than received buffer");
        }
        for (Eigen::Index lag = 0; lag + n <= rx.size(); ++lag) {
            const double v = std::norm(ref.samples.dot(rx.segment(lag, n)));  // dot conjugates the first operand
            if (v > best_val) {
                best_val = v;
                best.sequence_id = ref.sequence_id;
                best.sample_offset = buffer_start + static_cast<long>(lag);
            }
        }
    }
    best.delay = static_cast<double>(best.sample_offset) / sample_rate;
    return best;
}

double fine_delay(const Eigen::MatrixXcd& grid, const WaveformConfig& wf)
{
    const int K = wf.subcarriers;
    if (grid.rows() != K || grid.cols() > wf.rs_symbols.cols() || grid.cols() == 0) {
        throw std::invalid_argument("fine_delay: grid does not match the waveform");
    }
    const Eigen::VectorXcd r =
        (wf.rs_symbols.leftCols(grid.cols()).conjugate().cwiseProduct(grid)).rowwise().sum();
    if (!(r.cwiseAbs2().sum() > 0.0)) {
        throw std::invalid_argument("fine_delay: all-zero grid");
    }

    const double period = 1.0 / wf.scs;
    const int n_grid = 8 * K;
    const double step = period / n_grid;
    auto objective = [&](double tau) {
        const cdouble w = std::polar(1.0, 2.0 * kPi * wf.scs * tau);
        cdouble phasor{1.0, 0.0};
        cdouble s{0.0, 0.0};
        for (int k = 0; k < K; ++k) {
            s += r(k) * phasor;
            phasor *= w;
        }
        return std::abs(s);
    };

    int best = 0;
    double best_val = -1.0;
    std::vector<double> vals(static_cast<std::size_t>(n_grid));
    for (int g = 0; g < n_grid; ++g) {
        vals[static_cast<std::size_t>(g)] = objective(g * step);
        if (vals[static_cast<std::size_t>(g)] > best_val) {
            best_val = vals[static_cast<std::size_t>(g)];
            best = g;
        }
    }

    // Parabola through the peak and its circular neighbours, repeated once on a
    // finer stencil around the first vertex.
    double tau = best * step;
    double h = step;
    double ym = vals[static_cast<std::size_t>((best - 1 + n_grid) % n_grid)];
    double y0 = best_val;
    double yp = vals[static_cast<std::size_t>((best + 1) % n_grid)];
    for (int round = 0; round < 2; ++round) {
        const double denom = ym - 2.0 * y0 + yp;
        if (denom < 0.0) {
            const double shift = 0.5 * (ym - yp) / denom;
            if (std::abs(shift) <= 1.0) {
                tau += shift * h;
            }
        }
        if (round == 0) {
            h /= 8.0;
            ym = objective(tau - h);
            y0 = objective(tau);
            yp = objective(tau + h);
        }
    }
    tau = std::fmod(tau, period);
    if (tau < 0.0) {
        tau += period;
    }
    return tau;
}

std::pair<int, int> nearest_beam_pair(const AngleEstimate& estimate, const BeamCodebook& codebook)
{
    return {codebook.nearest_beam(Side::Tx, estimate.aod), codebook.nearest_beam(Side::Rx, estimate.aoa)};
}

FineToa fine_toa(const Eigen::MatrixXcd& grid, const WaveformConfig& wf, const AngleEstimate& estimate,
                 const BeamCodebook& codebook, int path_index)
{
    FineToa f;
    f.path_index = path_index;
    std::tie(f.tx_beam, f.rx_beam) = nearest_beam_pair(estimate, codebook);
    f.delay = fine_delay(grid, wf);
    return f;
}

double combine_toa(const CoarseToa& coarse, const FineToa& fine) { return coarse.delay + fine.delay; }

CoarseToa back_off(const CoarseToa& coarse, long samples)
{
    CoarseToa c = coarse;
    c.sample_offset -= samples;
    c.delay = static_cast<double>(c.sample_offset) / c.sample_rate;
    return c;
}

} // namespace mmslam
