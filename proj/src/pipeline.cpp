#include "mmslam/pipeline.hpp"

#include "mmslam/errors.hpp"

#include <algorithm>
#include <cmath>

namespace mmslam {

namespace {

enum Purpose : std::uint64_t { kMapNoise = 1, kTimeSamples = 2, kRsGrid = 3 };

} // namespace

const char* to_string(AngleMethod method) { return method == AngleMethod::Svd ? "svd" : "cfar"; }

AngleMethod parse_method(const std::string& name)
{
    if (name == "svd") {
        return AngleMethod::Svd;
    }
    if (name == "cfar") {
        return AngleMethod::Cfar;
    }
    throw ConfigError("unknown method '" + name + "' (expected svd or cfar)");
}

PipelineConfig PipelineConfig::desk()
{
    PipelineConfig c;
    c.codebook = BeamCodebook::uniform(63, kPi, 126, 2.0 * kPi, 16);
    c.waveform = WaveformConfig::make(256, 4, 120e3, 60e9, 1);
    c.measurement_covariance = diag_covariance(0.3, deg2rad(3.0), deg2rad(3.0));
    return c;
}

Rng stream_rng(std::uint64_t seed, std::uint64_t purpose, std::uint64_t position, std::uint64_t a, std::uint64_t b)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(purpose), static_cast<std::uint32_t>(position),
                      static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b)};
    return Rng(seq);
}

BrsrpMap synthesize_map(const Scene& scene, std::size_t position, const PipelineConfig& config)
{
    Rng rng = stream_rng(config.seed, kMapNoise, position);
    return synth_brsrp(true_paths(scene, position, config.waveform.carrier), config.codebook, config.noise_floor,
                       config.waveform.n_rs(), rng);
}

PositionEstimates estimate_position(const Scene& scene, std::size_t position, const BrsrpMap& map,
                                    const PipelineConfig& config)
{
    PositionEstimates out;
    out.position = position;
    std::vector<AngleEstimate> angles;
    if (config.method == AngleMethod::Svd) {
        SvdResult r = svd_extract_detailed(map, config.svd);
        angles = std::move(r.estimates);
        out.rank_used = r.rank_used;
        out.candidates = r.candidates.size();
    } else {
        angles = cfar_detect(map, config.cfar.train, config.cfar.guard, config.cfar.pfa);
        for (const auto& a : angles) {
            out.candidates += a.cluster_members.size();
        }
    }
    if (angles.empty()) {
        return out;
    }

    const WaveformConfig& wf = config.waveform;
    const std::vector<PathTruth> paths = true_paths(scene, position, wf.carrier);
    const double bias_s = scene.ue_state(position).bias / kSpeedOfLight;
    const BeamCodebook& cb = map.codebook;

    // Coarse ToA on the strongest path's beam pair.
    const auto [ci, cj] = nearest_beam_pair(angles.front(), cb);
    Rng time_rng = stream_rng(config.seed, kTimeSamples, position, static_cast<std::uint64_t>(ci),
                              static_cast<std::uint64_t>(cj));
    const int length = wf.subcarriers + config.buffer_extra;
    const Eigen::VectorXcd rx = synth_time_samples(paths, cb, wf, ci, cj, map.noise_floor, time_rng,
                                                   config.buffer_start, length, bias_s);
    const CoarseToa coarse = back_off(
        coarse_toa(rx, {reference_waveform(wf)}, wf.sample_rate(), config.buffer_start), config.coarse_backoff);
    out.coarse = coarse;

    for (std::size_t n = 0; n < angles.size(); ++n) {
        const AngleEstimate& a = angles[n];
        const auto [i, j] = nearest_beam_pair(a, cb);
        Rng grid_rng = stream_rng(config.seed, kRsGrid, position, static_cast<std::uint64_t>(i),
                                  static_cast<std::uint64_t>(j));
        // The receiver window opens at coarse.delay on its own clock, which is
        // coarse.delay + bias on the true time base.
        const Eigen::MatrixXcd grid =
            synth_rs_samples(paths, cb, wf, i, j, map.noise_floor, grid_rng, coarse.delay + bias_s);
        const FineToa fine = fine_toa(grid, wf, a, cb, static_cast<int>(n));
        PathEstimate p;
        p.aod = a.aod;
        p.aoa = a.aoa;
        p.power = a.power;
        p.tx_index = i;
        p.rx_index = j;
        p.toa = combine_toa(coarse, fine);
        p.range = kSpeedOfLight * p.toa;
        p.candidates = static_cast<int>(a.cluster_members.size());
        out.paths.push_back(p);
    }
    return out;
}

std::vector<Measurement> to_measurements(const PositionEstimates& estimates, const Eigen::Matrix3d& covariance)
{
    std::vector<Measurement> z;
    z.reserve(estimates.paths.size());
    for (const auto& p : estimates.paths) {
        Measurement m;
        m.range = p.range;
        m.aod = p.aod;
        m.aoa = p.aoa;
        m.covariance = covariance;
        m.power = p.power;
        z.push_back(m);
    }
    return z;
}

std::vector<AnglePoint> truth_angles(const Scene& scene, std::size_t position, double carrier)
{
    std::vector<AnglePoint> t;
    for (const auto& p : true_paths(scene, position, carrier)) {
        t.push_back({p.aod, p.aoa});
    }
    return t;
}

PipelineRun run_pipeline(const Scene& scene, const PipelineConfig& config, const SnapshotConfig& slam,
                         bool known_bias)
{
    PipelineRun run;
    std::vector<std::vector<Measurement>> z;
    for (std::size_t i = 0; i < scene.size(); ++i) {
        const BrsrpMap map = synthesize_map(scene, i, config);
        run.estimates.push_back(estimate_position(scene, i, map, config));
        z.push_back(to_measurements(run.estimates.back(), config.measurement_covariance));
    }
    std::vector<double> biases;
    if (known_bias) {
        for (std::size_t i = 0; i < scene.size(); ++i) {
            biases.push_back(scene.ue_state(i).bias);
        }
    }
    run.slam = run_trajectory(scene.bs, z, slam, biases);
    run.report = trajectory_stats(run.slam, scene);
    return run;
}

} // namespace mmslam
