#include "mmslam/io.hpp"

#include "mmslam/errors.hpp"

#include <json.hpp>

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace mmslam::io {

using json = nlohmann::json;

namespace {

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out)
{
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    std::ofstream out(path, mode | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out << std::setprecision(17);
    return out;
}

std::ifstream open_in(const fs::path& path, std::ios::openmode mode = std::ios::in)
{
    std::ifstream in(path, mode);
    if (!in) {
        throw std::runtime_error("cannot read " + path.string());
    }
    return in;
}

std::vector<std::string> split_csv(const std::string& line)
{
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        cells.push_back(cell);
    }
    return cells;
}

std::vector<std::vector<std::string>> read_csv_rows(const fs::path& path, std::size_t columns)
{
    std::ifstream in = open_in(path);
    std::string line;
    std::getline(in, line);  // header
    std::vector<std::vector<std::string>> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        auto cells = split_csv(line);
        if (cells.size() != columns) {
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": expected " +
                                     std::to_string(columns) + " columns");
        }
        rows.push_back(std::move(cells));
    }
    return rows;
}

json vec2(const Eigen::Vector2d& v) { return json::array({v.x(), v.y()}); }

Eigen::Vector2d to_vec2(const json& j)
{
    if (!j.is_array() || j.size() != 2) {
        throw std::runtime_error("expected a [x, y] pair");
    }
    return {j[0].get<double>(), j[1].get<double>()};
}

template <typename T>
void put_le(std::ostream& out, T value)
{
    static_assert(std::is_trivially_copyable_v<T>);
    std::array<unsigned char, sizeof(T)> bytes{};
    std::memcpy(bytes.data(), &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) {
        std::reverse(bytes.begin(), bytes.end());
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), sizeof(T));
}

template <typename T>
T get_le(std::istream& in, const fs::path& path)
{
    std::array<unsigned char, sizeof(T)> bytes{};
    if (!in.read(reinterpret_cast<char*>(bytes.data()), sizeof(T))) {
        throw std::runtime_error("truncated map file " + path.string());
    }
    if constexpr (std::endian::native == std::endian::big) {
        std::reverse(bytes.begin(), bytes.end());
    }
    T value;
    std::memcpy(&value, bytes.data(), sizeof(T));
    return value;
}

constexpr std::uint32_t kMapVersion = 1;

} // namespace

Scene read_scene(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open scene file " + path.string());
    }
    try {
        const json j = json::parse(in);
        Scene s;
        s.bs.position = to_vec2(j.at("bs").at("position"));
        s.bs.heading = wrap_angle(j.at("bs").value("heading", 0.0));
        for (const auto& p : j.at("trajectory")) {
            s.ue_trajectory.push_back({to_vec2(p.at("position")), wrap_angle(p.value("heading", 0.0))});
        }
        if (s.ue_trajectory.empty()) {
            throw std::runtime_error("trajectory is empty");
        }
        for (const auto& l : j.value("landmarks", json::array())) {
            s.landmarks.push_back({{to_vec2(l.at("position"))}, l.value("reflection", 0.5)});
        }
        s.bias_trajectory = j.value("bias", std::vector<double>(s.size(), 0.0));
        if (s.bias_trajectory.size() != s.size()) {
            throw std::runtime_error("bias has " + std::to_string(s.bias_trajectory.size()) + " entries for " +
                                     std::to_string(s.size()) + " positions");
        }
        s.los_blocked.assign(s.size(), false);
        for (std::size_t i : j.value("los_blocked", std::vector<std::size_t>{})) {
            if (i >= s.size()) {
                throw std::runtime_error("los_blocked index " + std::to_string(i) + " out of range");
            }
            s.los_blocked[i] = true;
        }
        s.tx_half_fov = j.value("tx_half_fov", kPi / 2.0);
        s.rng_seed = j.value("seed", std::uint64_t{1});
        return s;
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError("invalid scene file " + path.string() + ": " + e.what());
    }
}

void write_scene(const fs::path& path, const Scene& scene)
{
    json j;
    j["bs"] = {{"position", vec2(scene.bs.position)}, {"heading", scene.bs.heading}};
    json traj = json::array();
    for (const auto& p : scene.ue_trajectory) {
        traj.push_back({{"position", vec2(p.position)}, {"heading", p.heading}});
    }
    j["trajectory"] = traj;
    json lms = json::array();
    for (const auto& l : scene.landmarks) {
        lms.push_back({{"position", vec2(l.landmark.position)}, {"reflection", l.reflection}});
    }
    j["landmarks"] = lms;
    j["bias"] = scene.bias_trajectory;
    std::vector<std::size_t> blocked;
    for (std::size_t i = 0; i < scene.los_blocked.size(); ++i) {
        if (scene.los_blocked[i]) {
            blocked.push_back(i);
        }
    }
    j["los_blocked"] = blocked;
    j["tx_half_fov"] = scene.tx_half_fov;
    j["seed"] = scene.rng_seed;
    open_out(path) << j.dump(2) << "\n";
}

void write_map_csv(const fs::path& path, const BrsrpMap& map)
{
    std::ofstream out = open_out(path);
    out << "tx_angle_rad";
    for (double a : map.codebook.rx_angles) {
        out << ',' << a;
    }
    out << '\n';
    for (Eigen::Index i = 0; i < map.values.rows(); ++i) {
        out << map.codebook.tx_angles[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < map.values.cols(); ++j) {
            out << ',' << map.values(i, j);
        }
        out << '\n';
    }
}

void write_map_binary(const fs::path& path, const BrsrpMap& map)
{
    std::ofstream out = open_out(path, std::ios::out | std::ios::binary);
    out.write("BRSP", 4);
    put_le<std::uint32_t>(out, kMapVersion);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(map.values.rows()));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(map.values.cols()));
    put_le<std::int32_t>(out, map.codebook.elements_per_row);
    put_le<std::uint8_t>(out, map.codebook.tx_circular ? 1 : 0);
    put_le<std::uint8_t>(out, map.codebook.rx_circular ? 1 : 0);
    put_le<double>(out, map.noise_floor);
    for (double a : map.codebook.tx_angles) {
        put_le<double>(out, a);
    }
    for (double a : map.codebook.rx_angles) {
        put_le<double>(out, a);
    }
    for (Eigen::Index i = 0; i < map.values.rows(); ++i) {
        for (Eigen::Index j = 0; j < map.values.cols(); ++j) {
            put_le<double>(out, map.values(i, j));
        }
    }
    if (!out) {
        throw std::runtime_error("failed writing " + path.string());
    }
}

BrsrpMap read_map_binary(const fs::path& path)
{
    std::ifstream in = open_in(path, std::ios::in | std::ios::binary);
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, "BRSP", 4) != 0) {
        throw std::runtime_error(path.string() + " is not a BRSRP map file");
    }
    const auto version = get_le<std::uint32_t>(in, path);
    if (version != kMapVersion) {
        throw std::runtime_error(path.string() + ": unsupported map version " + std::to_string(version));
    }
    const auto rows = get_le<std::uint32_t>(in, path);
    const auto cols = get_le<std::uint32_t>(in, path);
    BrsrpMap map;
    map.codebook.elements_per_row = get_le<std::int32_t>(in, path);
    map.codebook.tx_circular = get_le<std::uint8_t>(in, path) != 0;
    map.codebook.rx_circular = get_le<std::uint8_t>(in, path) != 0;
    map.noise_floor = get_le<double>(in, path);
    map.codebook.tx_angles.resize(rows);
    map.codebook.rx_angles.resize(cols);
    for (auto& a : map.codebook.tx_angles) {
        a = get_le<double>(in, path);
    }
    for (auto& a : map.codebook.rx_angles) {
        a = get_le<double>(in, path);
    }
    map.values.resize(rows, cols);
    for (Eigen::Index i = 0; i < map.values.rows(); ++i) {
        for (Eigen::Index j = 0; j < map.values.cols(); ++j) {
            map.values(i, j) = get_le<double>(in, path);
        }
    }
    return map;
}

void write_paths_csv(const fs::path& path, std::size_t position, const std::vector<PathTruth>& paths)
{
    std::ofstream out = open_out(path);
    out << "position_id,kind,landmark,delay_s,range_m,aod_rad,aoa_rad,gain_re,gain_im\n";
    for (const auto& p : paths) {
        out << position << ',' << (p.kind.is_los() ? "los" : "nlos") << ','
            << (p.kind.is_los() ? -1 : static_cast<long>(*p.kind.landmark)) << ',' << p.delay << ',' << p.range << ','
            << p.aod << ',' << p.aoa << ',' << p.gain.real() << ',' << p.gain.imag() << '\n';
    }
}

void write_measurements_csv(const fs::path& path, std::size_t position, const std::vector<Measurement>& z)
{
    std::ofstream out = open_out(path);
    out << "position_id,n,range_m,aod_rad,aoa_rad,power_linear,r00,r01,r02,r10,r11,r12,r20,r21,r22\n";
    for (std::size_t n = 0; n < z.size(); ++n) {
        out << position << ',' << n << ',' << z[n].range << ',' << z[n].aod << ',' << z[n].aoa << ','
            << z[n].power;
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 3; ++c) {
                out << ',' << z[n].covariance(r, c);
            }
        }
        out << '\n';
    }
}

std::vector<Measurement> read_measurements_csv(const fs::path& path)
{
    std::vector<Measurement> z;
    for (const auto& row : read_csv_rows(path, 15)) {
        Measurement m;
        m.range = std::stod(row[2]);
        m.aod = std::stod(row[3]);
        m.aoa = std::stod(row[4]);
        m.power = std::stod(row[5]);
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 3; ++c) {
                m.covariance(r, c) = std::stod(row[static_cast<std::size_t>(6 + 3 * r + c)]);
            }
        }
        z.push_back(m);
    }
    return z;
}

void write_estimates_csv(const fs::path& path, const PositionEstimates& estimates)
{
    std::ofstream out = open_out(path);
    out << "position_id,n,aod_rad,aoa_rad,power_linear,tx_index,rx_index,toa_s,range_m,candidates\n";
    for (std::size_t n = 0; n < estimates.paths.size(); ++n) {
        const auto& p = estimates.paths[n];
        out << estimates.position << ',' << n << ',' << p.aod << ',' << p.aoa << ',' << p.power << ','
            << p.tx_index << ',' << p.rx_index << ',' << p.toa << ',' << p.range << ',' << p.candidates << '\n';
    }
}

PositionEstimates read_estimates_csv(const fs::path& path)
{
    PositionEstimates e;
    for (const auto& row : read_csv_rows(path, 10)) {
        e.position = std::stoul(row[0]);
        PathEstimate p;
        p.aod = std::stod(row[2]);
        p.aoa = std::stod(row[3]);
        p.power = std::stod(row[4]);
        p.tx_index = std::stoi(row[5]);
        p.rx_index = std::stoi(row[6]);
        p.toa = std::stod(row[7]);
        p.range = std::stod(row[8]);
        p.candidates = std::stoi(row[9]);
        e.paths.push_back(p);
    }
    return e;
}

void write_solutions_json(const fs::path& path, const std::vector<TrajectoryStep>& steps)
{
    json arr = json::array();
    for (std::size_t i = 0; i < steps.size(); ++i) {
        json r;
        r["position"] = i;
        r["seconds"] = steps[i].seconds;
        if (!steps[i].solution) {
            r["error"] = steps[i].error;
            arr.push_back(r);
            continue;
        }
        const SlamSolution& s = *steps[i].solution;
        const Eigen::VectorXd x = s.estimate.to_vector();
        r["estimate"] = std::vector<double>(x.data(), x.data() + x.size());
        std::vector<double> cov;
        for (Eigen::Index a = 0; a < s.covariance.rows(); ++a) {
            for (Eigen::Index b = 0; b < s.covariance.cols(); ++b) {
                cov.push_back(s.covariance(a, b));
            }
        }
        r["covariance"] = cov;
        r["cost"] = s.cost;
        r["hypothesis"] = s.hypothesis.label();
        r["los_measurement"] = s.hypothesis.los_measurement ? json(*s.hypothesis.los_measurement) : json(nullptr);
        r["uses_prior"] = s.hypothesis.uses_prior;
        r["iterations"] = s.iterations;
        r["converged"] = s.converged;
        arr.push_back(r);
    }
    open_out(path) << arr.dump(2) << "\n";
}

std::vector<TrajectoryStep> read_solutions_json(const fs::path& path)
{
    std::ifstream in = open_in(path);
    const json arr = json::parse(in);
    std::vector<TrajectoryStep> steps;
    for (const auto& r : arr) {
        TrajectoryStep st;
        st.seconds = r.value("seconds", 0.0);
        if (r.contains("error")) {
            st.error = r["error"].get<std::string>();
            steps.push_back(st);
            continue;
        }
        const auto x = r.at("estimate").get<std::vector<double>>();
        SlamSolution s;
        s.estimate = JointState::from_vector(Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size())));
        const auto cov = r.at("covariance").get<std::vector<double>>();
        const auto n = static_cast<Eigen::Index>(x.size());
        s.covariance.resize(n, n);
        for (Eigen::Index a = 0; a < n; ++a) {
            for (Eigen::Index b = 0; b < n; ++b) {
                s.covariance(a, b) = cov.at(static_cast<std::size_t>(a * n + b));
            }
        }
        s.cost = r.at("cost").get<double>();
        if (!r.at("los_measurement").is_null()) {
            s.hypothesis.los_measurement = r["los_measurement"].get<std::size_t>();
        }
        s.hypothesis.uses_prior = r.at("uses_prior").get<bool>();
        s.iterations = r.at("iterations").get<int>();
        s.converged = r.value("converged", false);
        st.solution = std::move(s);
        steps.push_back(std::move(st));
    }
    return steps;
}

namespace {

json stats_json(const ErrorStats& s) { return {{"rmse", s.rmse}, {"std", s.std}}; }

} // namespace

void write_report_json(const fs::path& path, const EvalReport& report)
{
    json j;
    const TrajectoryReport& t = report.trajectory;
    j["trajectory"] = {{"position_m", stats_json(t.position)},
                       {"heading_deg", stats_json(t.heading)},
                       {"bias_m", stats_json(t.bias)},
                       {"time_s", t.mean_seconds},
                       {"failures", t.failures}};
    json per = json::array();
    for (std::size_t i = 0; i < report.positions.size(); ++i) {
        const auto& p = report.positions[i];
        json assignment = json::array();
        for (const auto& [e, g] : p.gospa.assignment) {
            assignment.push_back({e, g});
        }
        per.push_back({{"position", i},
                       {"gospa", p.gospa.gospa},
                       {"false_detections", p.gospa.false_detections},
                       {"missed_detections", p.gospa.missed_detections},
                       {"assignment", assignment},
                       {"slfd_count", p.slfd.count},
                       {"slfd_gamma", p.slfd.gamma}});
    }
    j["positions"] = per;
    open_out(path) << j.dump(2) << "\n";
}

void write_report_csv(const fs::path& path, const EvalReport& report)
{
    std::ofstream out = open_out(path);
    out << "position,gospa,false_detections,missed_detections,slfd_count,slfd_gamma\n";
    for (std::size_t i = 0; i < report.positions.size(); ++i) {
        const auto& p = report.positions[i];
        out << i << ',' << p.gospa.gospa << ',' << p.gospa.false_detections << ',' << p.gospa.missed_detections
            << ',' << p.slfd.count << ',' << p.slfd.gamma << '\n';
    }
}

std::uint64_t fnv1a(const std::string& text)
{
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string position_stem(std::size_t position)
{
    std::ostringstream s;
    s << "pos_" << std::setw(3) << std::setfill('0') << position;
    return s.str();
}

} // namespace mmslam::io
