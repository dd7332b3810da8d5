#pragma once

#include "mmslam/geometry.hpp"

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <random>
#include <vector>

namespace mmslam {

using Rng = std::mt19937_64;
using cdouble = std::complex<double>;

enum class Side { Tx, Rx };

/// Beam steering angles of both ends plus the array driving the beam shape.
///
/// Each beam is the broadside pattern of a uniform linear array of
/// `elements_per_row` half-wavelength-spaced elements, pointed at its beam
/// angle (electronic steering plus mechanical rotation). Energy arriving from
/// behind the array (more than 90 degrees off the beam angle) is blocked.
struct BeamCodebook {
    std::vector<double> tx_angles;
    std::vector<double> rx_angles;
    int elements_per_row = 16;
    /// Per-element amplitude taper; empty means uniform weights.
    std::vector<double> taper;
    /// Axis covers the full circle, so beam index distances wrap around.
    bool tx_circular = false;
    bool rx_circular = false;

    /// `l_tx` beams uniformly over `tx_fov` centred on 0, same for RX.
    static BeamCodebook uniform(int l_tx, double tx_fov, int l_rx, double rx_fov, int elements);

    int size(Side side) const;
    const std::vector<double>& angles(Side side) const;
    bool circular(Side side) const;
    double spacing(Side side) const;
    /// Index of the beam whose angle is closest to `angle`.
    int nearest_beam(Side side, double angle) const;
    /// Half-power beamwidth of the array pattern in radians.
    double beamwidth() const;
};

/// Complex angular response G_i(angle) of beam `beam_index`.
cdouble beam_response(const BeamCodebook& codebook, Side side, int beam_index, double angle);

/// |G_i(angle)|^2. Peaks at N^2 on the beam angle for a uniform taper.
double beam_gain(const BeamCodebook& codebook, Side side, int beam_index, double angle);

/// Gain vector g(angle) over all beams of one side.
Eigen::VectorXd beam_gain_vector(const BeamCodebook& codebook, Side side, double angle);

/// OFDM reference-signal layout and the unit-modulus RS symbols x_{k,m}.
struct WaveformConfig {
    int subcarriers = 256;
    int symbols = 4;
    double scs = 120e3;
    double symbol_duration = 1.0 / 120e3;
    double carrier = 60e9;
    int sequence_id = 1;
    Eigen::MatrixXcd rs_symbols;  // subcarriers x symbols

    /// Builds the RS grid from a pseudo-random unit-modulus sequence seeded by
    /// `sequence_id`.
    static WaveformConfig make(int subcarriers, int symbols, double scs, double carrier, int sequence_id);

    int n_rs() const { return subcarriers * symbols; }
    double sample_rate() const { return subcarriers * scs; }
};

/// Unit-modulus pseudo-random sequence of `length` symbols seeded by
/// `sequence_id` and `symbol`.
Eigen::VectorXcd rs_sequence(int sequence_id, int symbol, int length);

/// A scatterer in the scene with its amplitude reflection coefficient.
struct SceneLandmark {
    Landmark landmark;
    double reflection = 0.5;
};

struct Scene {
    Pose2 bs;
    std::vector<Pose2> ue_trajectory;
    std::vector<SceneLandmark> landmarks;
    /// Clock bias in meters per UE position.
    std::vector<double> bias_trajectory;
    /// UE positions where the direct path is blocked.
    std::vector<bool> los_blocked;
    /// Paths leaving the BS more than this far off its heading are not radiated.
    double tx_half_fov = kPi / 2.0;
    std::uint64_t rng_seed = 1;

    std::size_t size() const { return ue_trajectory.size(); }
    bool los_visible(std::size_t index) const;
    /// Ground-truth UE state (position, heading, bias) at `index`.
    UEState ue_state(std::size_t index) const;
};

struct PathTruth {
    /// For NLoS paths `kind.landmark` indexes Scene::landmarks.
    PathKind kind;
    double delay = 0.0;
    double range = 0.0;
    double aod = 0.0;
    double aoa = 0.0;
    cdouble gain{1.0, 0.0};
    double doppler = 0.0;

    double power() const { return std::norm(gain); }
};

/// Builds a path from geometry: delay/angles from positions, |gain| =
/// reflection / range with a carrier-phase rotation.
PathTruth make_path(const Pose2& bs, const Pose2& ue, PathKind kind, const Eigen::Vector2d* landmark,
                    double reflection, double carrier);

/// LoS path (unless blocked) plus one single-bounce path per visible landmark.
/// `kind.landmark` indexes Scene::landmarks.
std::vector<PathTruth> true_paths(const Scene& scene, std::size_t position_index, double carrier = 60e9);

struct BrsrpMap {
    Eigen::MatrixXd values;  // L_TX x L_RX, linear power
    BeamCodebook codebook;
    double noise_floor = 0.0;
};

/// Noise-free power map sum_n |xi_n|^2 g_TX(aod_n) g_RX(aoa_n)^T.
Eigen::MatrixXd brsrp_model(const std::vector<PathTruth>& paths, const BeamCodebook& codebook);

/// Model map plus a noise matrix whose entries are the average of `n_rs`
/// exponential variates with mean `noise_floor`.
BrsrpMap synth_brsrp(const std::vector<PathTruth>& paths, const BeamCodebook& codebook, double noise_floor,
                     int n_rs, Rng& rng);

/// Frequency-domain RS samples y_{k,m} for beam pair (i, j). Fine delays are
/// measured from `window_start` (seconds, true time base).
Eigen::MatrixXcd synth_rs_samples(const std::vector<PathTruth>& paths, const BeamCodebook& codebook,
                                  const WaveformConfig& wf, int tx_beam, int rx_beam, double noise_var,
                                  Rng& rng, double window_start = 0.0);

/// Time-domain samples of the first RS symbol at F_s = K * scs for beam pair
/// (i, j). Sample q is taken at receiver time (buffer_start + q) / F_s; each
/// path arrives at delay - clock_bias_seconds.
Eigen::VectorXcd synth_time_samples(const std::vector<PathTruth>& paths, const BeamCodebook& codebook,
                                    const WaveformConfig& wf, int tx_beam, int rx_beam, double noise_var,
                                    Rng& rng, long buffer_start, int length, double clock_bias_seconds = 0.0);

/// (1/N_RS) sum |y_{k,m}|^2.
double exact_brsrp(const Eigen::MatrixXcd& grid);

/// Separable-path approximation of the BRSRP at beam pair (i, j):
/// sum_n |xi_n G_TX G_RX|^2 + noise_var.
double approx_brsrp(const std::vector<PathTruth>& paths, const BeamCodebook& codebook, int tx_beam, int rx_beam,
                    double noise_var);

struct OutlierModel {
    double rate = 0.0;
    /// Excess range added to an outlier, drawn uniformly from [min, max] meters.
    double min_excess = 5.0;
    double max_excess = 20.0;
};

/// Noisy channel-parameter measurements: [range - bias, aod, aoa] plus
/// N(0, R). Outliers get a uniform excess range and uniform angles.
std::vector<Measurement> synth_measurements(const std::vector<PathTruth>& paths, const Eigen::Matrix3d& covariance,
                                            double bias, Rng& rng, const OutlierModel& outliers = {});

/// Clock-bias random walk in meters.
std::vector<double> random_walk_bias(std::size_t n, double initial, double step_variance, Rng& rng);

/// The bundled 45-position indoor scene (0.5 m steps).
Scene default_scene(std::uint64_t seed = 1);

/// Randomized scene for Monte-Carlo studies: random straight trajectory of
/// `n_positions` 0.5 m steps, `n_landmarks` scatterers beside the route,
/// random bias walk.
Scene random_scene(std::uint64_t seed, std::size_t n_positions, std::size_t n_landmarks = 5);

/// Measurement covariance diag([range_std, aod_std, aoa_std]^2).
Eigen::Matrix3d diag_covariance(double range_std, double aod_std, double aoa_std);

} // namespace mmslam
