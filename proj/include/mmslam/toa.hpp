#pragma once

#include "mmslam/angles.hpp"
#include "mmslam/simulate.hpp"

#include <Eigen/Dense>

#include <utility>
#include <vector>

namespace mmslam {

struct CoarseToa {
    int sequence_id = 0;
    /// Receiver-clock sample index of the correlation peak.
    long sample_offset = 0;
    double delay = 0.0;  // sample_offset / sample_rate
    double sample_rate = 1.0;
};

struct FineToa {
    int path_index = 0;
    /// Delay within the window, in [0, 1/scs).
    double delay = 0.0;
    int tx_beam = 0;
    int rx_beam = 0;
};

struct ReferenceWaveform {
    int sequence_id = 0;
    Eigen::VectorXcd samples;
};

/// Time-domain first RS symbol (K samples at F_s = K * scs), the template
/// matched by coarse_toa.
ReferenceWaveform reference_waveform(const WaveformConfig& wf);

/// Joint argmax over (sequence, lag) of |sum_q rx[q + lag] conj(ref[q])|^2.
/// `buffer_start` is the receiver-clock sample index of rx[0]. Ties go to the
/// first reference and the smallest lag.
CoarseToa coarse_toa(const Eigen::VectorXcd& rx, const std::vector<ReferenceWaveform>& refs, double sample_rate,
                     long buffer_start = 0);

/// Delay maximizing |sum_k r_k exp(i 2 pi k scs tau)| with r_k = sum_m
/// conj(x_km) y_km: dense grid of step 1/(8 K scs) then parabolic refinement.
double fine_delay(const Eigen::MatrixXcd& grid, const WaveformConfig& wf);

/// fine_delay on the grid measured at the beam pair nearest the estimate.
FineToa fine_toa(const Eigen::MatrixXcd& grid, const WaveformConfig& wf, const AngleEstimate& estimate,
                 const BeamCodebook& codebook, int path_index = 0);

/// Biased ToA: coarse + fine.
double combine_toa(const CoarseToa& coarse, const FineToa& fine);

/// (argmin_i |Phi_i - aod|, argmin_j |Theta_j - aoa|).
std::pair<int, int> nearest_beam_pair(const AngleEstimate& estimate, const BeamCodebook& codebook);

/// One path as reported by channel estimation: angles, peak power, the beam
/// pair used for ToA and the biased ToA.
struct PathEstimate {
    double aod = 0.0;
    double aoa = 0.0;
    double power = 0.0;
    int tx_index = 0;
    int rx_index = 0;
    double toa = 0.0;
    double range = 0.0;  // c * toa
    int candidates = 1;
};

/// Moves the coarse window start `samples` earlier so that paths arriving
/// slightly before the correlation peak still get a non-negative fine delay.
CoarseToa back_off(const CoarseToa& coarse, long samples);

} // namespace mmslam
