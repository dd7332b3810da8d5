// mmslam: simulate, estimate, slam, eval and run-all over a scene.

#include "mmslam/errors.hpp"
#include "mmslam/io.hpp"
#include "mmslam/pipeline.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

using namespace mmslam;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

struct Options {
    std::string scene;
    std::uint64_t seed = 1;
    std::vector<double> power_ratios{99.0};
    double threshold_scale = 1.0;
    std::string method = "svd";
    std::string ablation = "proposed";
    bool known_bias = false;
    double outlier_rate = 0.0;
    std::string source = "estimates";
    std::string out_dir = "out";
};

std::string format_number(double v)
{
    std::ostringstream s;
    s << v;
    return s.str();
}

std::string estimate_label(const Options& o, double p)
{
    if (o.method == "cfar") {
        return "cfar";
    }
    std::string label = "svd_p" + format_number(p);
    if (o.threshold_scale != 1.0) {
        label += "_t" + format_number(o.threshold_scale);
    }
    return label;
}

std::string solution_label(const Options& o)
{
    std::string label = (o.source == "measurements" ? std::string("meas") : estimate_label(o, o.power_ratios.front())) +
                        "_" + o.ablation;
    return o.known_bias ? label + "_kb" : label;
}

void validate(const Options& o)
{
    parse_method(o.method);
    parse_ablation(o.ablation);
    for (double p : o.power_ratios) {
        if (!(p > 0.0 && p <= 100.0)) {
            throw ConfigError("--power-ratio must be in (0, 100], got " + format_number(p));
        }
    }
    if (!(o.threshold_scale >= 0.0)) {
        throw ConfigError("--power-threshold-scale must be >= 0");
    }
    if (!(o.outlier_rate >= 0.0 && o.outlier_rate <= 1.0)) {
        throw ConfigError("--outlier-rate must be in [0, 1]");
    }
    if (o.source != "estimates" && o.source != "measurements") {
        throw ConfigError("--source must be estimates or measurements");
    }
}

std::string config_text(const Options& o)
{
    std::ostringstream s;
    s << std::setprecision(17) << o.scene << '|' << o.seed << '|' << o.threshold_scale << '|' << o.method << '|'
      << o.ablation << '|' << o.known_bias << '|' << o.outlier_rate << '|' << o.source;
    for (double p : o.power_ratios) {
        s << '|' << p;
    }
    return s.str();
}

void record_manifest(const Options& o, const std::string& stage, const json& extra = json::object())
{
    const fs::path path = fs::path(o.out_dir) / "manifest.json";
    json m = json::object();
    if (fs::exists(path)) {
        std::ifstream in(path);
        m = json::parse(in, nullptr, false);
        if (m.is_discarded()) {
            m = json::object();
        }
    }
    json entry = extra;
    entry["seed"] = o.seed;
    entry["config_hash"] = io::fnv1a(config_text(o));
    entry["version"] = kVersion;
    m[stage] = entry;
    std::ofstream out(path);
    out << m.dump(2) << "\n";
}

json read_manifest(const Options& o)
{
    const fs::path path = fs::path(o.out_dir) / "manifest.json";
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("missing run manifest " + path.string() + " (run simulate first)");
    }
    return json::parse(in);
}

void require_seed(const Options& o, const json& manifest, const std::string& stage)
{
    if (!manifest.contains(stage)) {
        throw std::runtime_error("run manifest has no '" + stage + "' stage; run it first");
    }
    if (manifest[stage].at("seed").get<std::uint64_t>() != o.seed) {
        throw std::runtime_error("run manifest mismatch: '" + stage + "' used seed " +
                                 std::to_string(manifest[stage]["seed"].get<std::uint64_t>()) + ", requested " +
                                 std::to_string(o.seed));
    }
}

Scene load_scene(const Options& o)
{
    if (o.scene.empty()) {
        return default_scene(o.seed);
    }
    return io::read_scene(o.scene);
}

PipelineConfig pipeline_config(const Options& o, double power_ratio)
{
    PipelineConfig c = PipelineConfig::desk();
    c.seed = o.seed;
    c.method = parse_method(o.method);
    c.svd.power_ratio = power_ratio;
    c.svd.power_threshold = 1.1 * o.threshold_scale * c.noise_floor;
    return c;
}

fs::path run_scene_path(const Options& o) { return fs::path(o.out_dir) / "scene.json"; }

void cmd_simulate(const Options& o)
{
    const Scene scene = load_scene(o);
    const PipelineConfig pc = pipeline_config(o, o.power_ratios.front());
    const fs::path out(o.out_dir);
    fs::create_directories(out);
    io::write_scene(run_scene_path(o), scene);
    OutlierModel outliers;
    outliers.rate = o.outlier_rate;
    for (std::size_t i = 0; i < scene.size(); ++i) {
        const std::string stem = io::position_stem(i);
        const BrsrpMap map = synthesize_map(scene, i, pc);
        io::write_map_csv(out / "maps" / (stem + ".csv"), map);
        io::write_map_binary(out / "maps" / (stem + ".bin"), map);
        const auto paths = true_paths(scene, i, pc.waveform.carrier);
        io::write_paths_csv(out / "paths" / (stem + ".csv"), i, paths);
        Rng rng = stream_rng(o.seed, 4, i);
        io::write_measurements_csv(out / "measurements" / (stem + ".csv"), i,
                                   synth_measurements(paths, pc.measurement_covariance,
                                                      scene.ue_state(i).bias, rng, outliers));
    }
    record_manifest(o, "simulate", {{"positions", scene.size()}});
    std::cout << "simulate: " << scene.size() << " positions written to " << out.string() << "\n";
}

void cmd_estimate(const Options& o)
{
    require_seed(o, read_manifest(o), "simulate");
    const Scene scene = io::read_scene(run_scene_path(o));
    const fs::path out(o.out_dir);
    const std::vector<double> ratios = o.method == "cfar" ? std::vector<double>{o.power_ratios.front()} : o.power_ratios;
    json labels = json::array();
    for (double p : ratios) {
        const PipelineConfig pc = pipeline_config(o, p);
        const std::string label = estimate_label(o, p);
        const fs::path dir = out / "estimates" / label;
        fs::create_directories(dir);
        std::ofstream summary(dir / "summary.csv");
        summary << "position_id,rank_used,candidates,estimates\n";
        for (std::size_t i = 0; i < scene.size(); ++i) {
            const fs::path map_path = out / "maps" / (io::position_stem(i) + ".bin");
            if (!fs::exists(map_path)) {
                throw std::runtime_error("missing map " + map_path.string());
            }
            const PositionEstimates e = estimate_position(scene, i, io::read_map_binary(map_path), pc);
            io::write_estimates_csv(dir / (io::position_stem(i) + ".csv"), e);
            summary << i << ',' << e.rank_used << ',' << e.candidates << ',' << e.paths.size() << '\n';
        }
        labels.push_back(label);
        std::cout << "estimate: " << label << " -> " << dir.string() << "\n";
    }
    record_manifest(o, "estimate", {{"labels", labels}});
}

std::vector<std::vector<Measurement>> load_measurements(const Options& o, const Scene& scene)
{
    const fs::path out(o.out_dir);
    const PipelineConfig pc = pipeline_config(o, o.power_ratios.front());
    std::vector<std::vector<Measurement>> z;
    for (std::size_t i = 0; i < scene.size(); ++i) {
        const std::string stem = io::position_stem(i) + ".csv";
        if (o.source == "measurements") {
            z.push_back(io::read_measurements_csv(out / "measurements" / stem));
        } else {
            const fs::path p = out / "estimates" / estimate_label(o, o.power_ratios.front()) / stem;
            if (!fs::exists(p)) {
                throw std::runtime_error("missing estimates " + p.string() + " (run estimate first)");
            }
            PositionEstimates e = io::read_estimates_csv(p);
            e.position = i;
            z.push_back(to_measurements(e, pc.measurement_covariance));
        }
    }
    return z;
}

void cmd_slam(const Options& o)
{
    const json manifest = read_manifest(o);
    require_seed(o, manifest, "simulate");
    if (o.source == "estimates") {
        require_seed(o, manifest, "estimate");
    }
    const Scene scene = io::read_scene(run_scene_path(o));
    const auto z = load_measurements(o, scene);
    std::vector<double> biases;
    if (o.known_bias) {
        for (std::size_t i = 0; i < scene.size(); ++i) {
            biases.push_back(scene.ue_state(i).bias);
        }
    }
    const auto steps =
        run_trajectory(scene.bs, z, SnapshotConfig::for_ablation(parse_ablation(o.ablation)), biases);
    const std::string label = solution_label(o);
    io::write_solutions_json(fs::path(o.out_dir) / "solutions" / (label + ".json"), steps);
    std::size_t failed = 0;
    for (const auto& s : steps) {
        if (!s.solution) {
            ++failed;
            std::cerr << "slam: position failed: " << s.error << "\n";
        }
    }
    record_manifest(o, "slam", {{"label", label}, {"failures", failed}});
    std::cout << "slam: " << label << " (" << steps.size() - failed << "/" << steps.size() << " solved)\n";
}

void print_table(const TrajectoryReport& t)
{
    std::printf("%-6s %12s %14s %10s %10s\n", "", "position[m]", "heading[deg]", "bias[m]", "time[s]");
    std::printf("%-6s %12.4f %14.4f %10.4f %10.4f\n", "RMSE", t.position.rmse, t.heading.rmse, t.bias.rmse,
                t.mean_seconds);
    std::printf("%-6s %12.4f %14.4f %10.4f %10s\n", "STD", t.position.std, t.heading.std, t.bias.std, "-");
    if (t.failures > 0) {
        std::printf("failed positions: %zu\n", t.failures);
    }
}

void cmd_eval(const Options& o)
{
    const json manifest = read_manifest(o);
    require_seed(o, manifest, "simulate");
    require_seed(o, manifest, "slam");
    const Scene scene = io::read_scene(run_scene_path(o));
    const std::string label = solution_label(o);
    const fs::path out(o.out_dir);
    const fs::path sol_path = out / "solutions" / (label + ".json");
    if (!fs::exists(sol_path)) {
        throw std::runtime_error("missing solutions " + sol_path.string() + " (run slam first)");
    }
    const auto steps = io::read_solutions_json(sol_path);
    if (steps.size() != scene.size()) {
        throw std::runtime_error("run manifest mismatch: " + sol_path.string() + " has " +
                                 std::to_string(steps.size()) + " positions, scene has " +
                                 std::to_string(scene.size()));
    }

    EvalReport report;
    report.trajectory = trajectory_stats(steps, scene);
    const PipelineConfig pc = pipeline_config(o, o.power_ratios.front());
    if (o.source == "estimates") {
        for (std::size_t i = 0; i < scene.size(); ++i) {
            const PositionEstimates e =
                io::read_estimates_csv(out / "estimates" / estimate_label(o, o.power_ratios.front()) /
                                       (io::position_stem(i) + ".csv"));
            std::vector<AnglePoint> est;
            for (const auto& p : e.paths) {
                est.push_back({p.aod, p.aoa});
            }
            PositionEval pe;
            pe.gospa = gospa_angles(est, truth_angles(scene, i, pc.waveform.carrier));
            pe.slfd = slfd_metric(e.paths, 0.3e-9, pc.codebook);
            report.positions.push_back(pe);
        }
    }
    io::write_report_json(out / "reports" / (label + ".json"), report);
    io::write_report_csv(out / "reports" / (label + ".csv"), report);
    record_manifest(o, "eval", {{"label", label}});
    std::cout << "eval: " << label << "\n";
    print_table(report.trajectory);
}

void add_common(CLI::App* cmd, Options& o)
{
    cmd->add_option("--scene", o.scene, "Scene JSON (default: built-in 45-position scene)");
    cmd->add_option("--seed", o.seed, "Master seed");
    cmd->add_option("--out-dir", o.out_dir, "Run directory");
}

void add_estimate_flags(CLI::App* cmd, Options& o)
{
    cmd->add_option("--power-ratio", o.power_ratios, "SVD power ratio(s) in percent");
    cmd->add_option("--power-threshold-scale", o.threshold_scale, "Multiplier on 1.1 x noise floor");
    cmd->add_option("--method", o.method, "svd or cfar");
}

void add_slam_flags(CLI::App* cmd, Options& o)
{
    cmd->add_option("--ablation", o.ablation, "ofv0, ofv1, ofv2 or proposed");
    cmd->add_flag("--known-bias", o.known_bias, "Pin the clock bias to its true value");
    cmd->add_option("--source", o.source, "estimates or measurements");
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"mmWave bistatic snapshot SLAM on synthetic scenes"};
    app.require_subcommand(1);
    Options o;

    auto* sim = app.add_subcommand("simulate", "Synthesize maps, paths and measurements");
    add_common(sim, o);
    add_estimate_flags(sim, o);
    sim->add_option("--outlier-rate", o.outlier_rate, "Outlier probability for synthetic measurements");

    auto* est = app.add_subcommand("estimate", "Angle and ToA estimation from stored maps");
    add_common(est, o);
    add_estimate_flags(est, o);

    auto* slam = app.add_subcommand("slam", "Sequential snapshot SLAM over the trajectory");
    add_common(slam, o);
    add_estimate_flags(slam, o);
    add_slam_flags(slam, o);

    auto* ev = app.add_subcommand("eval", "GOSPA, SLFD and trajectory error report");
    add_common(ev, o);
    add_estimate_flags(ev, o);
    add_slam_flags(ev, o);

    auto* all = app.add_subcommand("run-all", "simulate, estimate, slam and eval");
    add_common(all, o);
    add_estimate_flags(all, o);
    add_slam_flags(all, o);
    all->add_option("--outlier-rate", o.outlier_rate, "Outlier probability for synthetic measurements");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        validate(o);
        if (sim->parsed()) {
            cmd_simulate(o);
        } else if (est->parsed()) {
            cmd_estimate(o);
        } else if (slam->parsed()) {
            cmd_slam(o);
        } else if (ev->parsed()) {
            cmd_eval(o);
        } else if (all->parsed()) {
            cmd_simulate(o);
            cmd_estimate(o);
            cmd_slam(o);
            cmd_eval(o);
        }
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
