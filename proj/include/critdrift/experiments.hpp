#pragma once

// Config-driven pipelines writing CSV/JSON artifacts plus a manifest.

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include <json.hpp>

#include "bbm_mc.hpp"
#include "common.hpp"
#include "drift_schedule.hpp"
#include "oscillator.hpp"
#include "pde_physical.hpp"
#include "rate_fit.hpp"
#include "specfun.hpp"
#include "theorem.hpp"
#include "version.hpp"

namespace critdrift::experiments {

using json = nlohmann::ordered_json;

// Invalid configuration; the CLI maps it to exit code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;

struct Config {
    double cbar = kThreeSqrtPi;
    double x_max = 60.0;
    double dx = 0.01;
    double dt = 0.01;  // upper bound; the physical solver uses min(dt, dx)
    double t_end = 10.0;
    double tau_end = 10.0;
    double tau_alpha = 20.0;
    double y_max = 25.0;
    double dy = 0.01;
    double dtau = 1e-3;
    double sample_dtau = 0.025;
    std::size_t n_modes = 40;
    pde::InitialData v0{};
    double fit_lo = 6.0;  // fit.window, in tau
    double fit_hi = 10.0;
    std::uint64_t seed = 1;
    double mc_drift = 2.0;
    double mc_x0 = 1.5;
    double mc_t_end = 3.0;
    std::size_t mc_replicas = 100000;
    double mc_dt = 1e-3;
    bool mc_bridge = true;
    unsigned mc_threads = 0;
    std::vector<std::string> pipeline;
    std::map<std::string, std::string> echo;  // raw key=value pairs as given

    mc::McConfig mc_config() const {
        mc::McConfig c;
        c.drift = mc_drift;
        c.dt = mc_dt;
        c.n_replicas = mc_replicas;
        c.seed = seed;
        c.bridge_correction = mc_bridge;
        c.threads = mc_threads;
        return c;
    }

    SelfSimilarRunConfig selfsim_config(double c) const {
        SelfSimilarRunConfig s;
        s.cbar = c;
        s.v0 = v0;
        s.y_max = y_max;
        s.dy = dy;
        s.dtau = dtau;
        s.sample_dtau = sample_dtau;
        s.tau_end = tau_end;
        s.tau_alpha = tau_alpha;
        s.fit_tau_lo = fit_lo;
        s.fit_tau_hi = fit_hi;
        s.n_modes = n_modes;
        return s;
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

inline double parse_double(const std::string& key, const std::string& v) {
    if (v == "3sqrtpi") return kThreeSqrtPi;
    double x = 0;
    const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
    if (r.ec != std::errc() || r.ptr != v.data() + v.size() || !std::isfinite(x))
        throw ConfigError("config key '" + key + "': not a number: '" + v + "'");
    return x;
}

inline std::uint64_t parse_uint(const std::string& key, const std::string& v) {
    std::uint64_t x = 0;
    const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
    if (r.ec != std::errc() || r.ptr != v.data() + v.size())
        throw ConfigError("config key '" + key + "': not a non-negative integer: '" + v + "'");
    return x;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "on") return true;
    if (v == "false" || v == "0" || v == "off") return false;
    throw ConfigError("config key '" + key + "': not a boolean: '" + v + "'");
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

}  // namespace detail

inline const std::vector<std::string>& known_tasks() {
    static const std::vector<std::string> t = {"solve", "selfsim", "specfun", "mc", "fit", "reproduce-theorem"};
    return t;
}

inline void set_key(Config& c, const std::string& key, const std::string& v) {
    using namespace detail;
    auto pos = [&](double x) {
        if (!(x > 0)) throw ConfigError("config key '" + key + "': must be positive");
        return x;
    };
    if (key == "cbar") c.cbar = parse_double(key, v);
    else if (key == "x_max") c.x_max = pos(parse_double(key, v));
    else if (key == "dx") c.dx = pos(parse_double(key, v));
    else if (key == "dt") c.dt = pos(parse_double(key, v));
    else if (key == "t_end") c.t_end = pos(parse_double(key, v));
    else if (key == "tau_end") c.tau_end = pos(parse_double(key, v));
    else if (key == "tau_alpha") c.tau_alpha = pos(parse_double(key, v));
    else if (key == "y_max") c.y_max = pos(parse_double(key, v));
    else if (key == "dy") c.dy = pos(parse_double(key, v));
    else if (key == "dtau") c.dtau = pos(parse_double(key, v));
    else if (key == "sample_dtau") c.sample_dtau = pos(parse_double(key, v));
    else if (key == "n_modes") c.n_modes = parse_uint(key, v);
    else if (key == "seed") c.seed = parse_uint(key, v);
    else if (key == "v0.kind") {
        if (v == "indicator") c.v0.kind = pde::InitialKind::indicator;
        else if (v == "smooth_bump") c.v0.kind = pde::InitialKind::smooth_bump;
        else throw ConfigError("config key 'v0.kind': expected indicator or smooth_bump, got '" + v + "'");
    } else if (key == "v0.a") c.v0.a = parse_double(key, v);
    else if (key == "v0.b") c.v0.b = parse_double(key, v);
    else if (key == "fit.window") {
        const auto p = split(v, ',');
        if (p.size() != 2) throw ConfigError("config key 'fit.window': expected 'lo,hi'");
        c.fit_lo = parse_double(key, p[0]);
        c.fit_hi = parse_double(key, p[1]);
        if (!(c.fit_hi > c.fit_lo)) throw ConfigError("config key 'fit.window': need lo < hi");
    } else if (key == "mc.drift") c.mc_drift = parse_double(key, v);
    else if (key == "mc.x0") c.mc_x0 = pos(parse_double(key, v));
    else if (key == "mc.t_end") c.mc_t_end = parse_double(key, v);
    else if (key == "mc.replicas") c.mc_replicas = parse_uint(key, v);
    else if (key == "mc.dt") c.mc_dt = pos(parse_double(key, v));
    else if (key == "mc.seed") c.seed = parse_uint(key, v);
    else if (key == "mc.bridge") c.mc_bridge = parse_bool(key, v);
    else if (key == "mc.threads") c.mc_threads = unsigned(parse_uint(key, v));
    else if (key == "pipeline") {
        c.pipeline = split(v, ',');
        for (const auto& t : c.pipeline)
            if (std::find(known_tasks().begin(), known_tasks().end(), t) == known_tasks().end())
                throw ConfigError("config key 'pipeline': unknown task '" + t + "'");
    } else {
        throw ConfigError("unknown config key '" + key + "'");
    }
    c.echo[key] = v;
}

// Flat key=value lines; '#' starts a comment.
inline Config parse_config(std::istream& in) {
    Config c;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
        set_key(c, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
    }
    return c;
}

inline Config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    return parse_config(in);
}

inline std::string sha256_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("cannot hash " + p.string());
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof buf);
        if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf, std::size_t(in.gcount()));
    }
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, md, &len);
    EVP_MD_CTX_free(ctx);
    std::ostringstream os;
    for (unsigned i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
    return os.str();
}

inline std::string cbar_tag(double c) {
    if (is_critical(c)) return "3sqrtpi";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%g", c);
    return buf;
}

inline json fit_json(double cbar, const std::string& quantity, const RateFit& f) {
    return {{"cbar", cbar},       {"quantity", quantity},      {"model", to_string(f.model)},
            {"exponent", f.exponent}, {"prefactor", f.prefactor}, {"r2", f.r_squared},
            {"t_min", f.t_min},   {"t_max", f.t_max},          {"samples", f.samples}};
}

inline void write_json(const std::filesystem::path& p, const json& j) {
    std::ofstream out(p);
    out << std::setprecision(17) << j.dump(2) << "\n";
}

inline void write_observables_csv(const std::filesystem::path& p, const RunSeries& s) {
    std::FILE* fp = std::fopen(p.string().c_str(), "w");
    if (!fp) throw std::runtime_error("cannot open " + p.string());
    std::fprintf(fp, "tau,t,mass,slope0\n");
    for (std::size_t i = 0; i < s.tau.size(); ++i)
        std::fprintf(fp, "%.17g,%.17g,%.17g,%.17g\n", s.tau[i], s.t[i], s.mass[i], s.slope0[i]);
    std::fclose(fp);
}

inline json summary_json(const std::vector<SelfSimilarRun>& runs) {
    json j;
    json by = json::array(), fits = json::array(), pref = json::array();
    double headline = runs.empty() ? 0.0 : runs.front().alpha0();
    for (const auto& r : runs) {
        if (is_critical(r.cfg.cbar)) headline = r.alpha0();
        by.push_back({{"cbar", r.cfg.cbar},
                      {"slope_extrapolation", r.alpha_slope.value},
                      {"slope_uncertainty", r.alpha_slope.uncertainty},
                      {"spectral_projection", r.alpha_spectral.value},
                      {"spectral_uncertainty", r.alpha_spectral.uncertainty}});
        for (const auto& f : r.mass_fits) fits.push_back(fit_json(r.cfg.cbar, "mass", f));
        for (const auto& f : r.slope_fits) fits.push_back(fit_json(r.cfg.cbar, "slope0", f));
        pref.push_back({{"cbar", r.cfg.cbar},
                        {"t", r.prefactor.t},
                        {"estimate", r.prefactor.estimate},
                        {"expected", r.prefactor.expected},
                        {"rel_error", r.prefactor.rel_error}});
    }
    j["alpha0"] = headline;
    j["alpha0_by_cbar"] = by;
    j["fits"] = fits;
    j["prefactor_check"] = pref;
    if (!runs.empty()) {
        const auto m = osc::initial_moments(runs.front().cfg.v0);
        j["initial_moments"] = {{"int_y_exp_y_v0", m.weighted}, {"int_xi_v0", m.plain}};
    }
    return j;
}

struct TaskRecord {
    std::string name;
    double seconds;
};

struct ArtifactDir {
    std::filesystem::path root;
    std::vector<std::filesystem::path> files;
    std::vector<TaskRecord> tasks;

    std::filesystem::path add(const std::string& name) {
        files.push_back(root / name);
        return files.back();
    }
};

inline void task_solve(const Config& c, ArtifactDir& out) {
    const auto grid = pde::SpatialGrid::make(c.x_max, c.dx);
    pde::SolverConfig sc;
    sc.dt = std::min(c.dt, grid.dx);
    const auto f0 = pde::initial_condition(c.v0, grid);
    const auto r = pde::evolve(f0, c.t_end, sc, drift::DriftExpansion{c.cbar});
    pde::write_series_csv(out.add("physical_cbar" + cbar_tag(c.cbar) + ".csv").string(), r.series);
}

inline std::vector<SelfSimilarRun> task_selfsim(const Config& c, ArtifactDir& out, const std::vector<double>& cbars) {
    auto runs = run_sweep(c.selfsim_config(c.cbar), cbars);
    for (const auto& r : runs) {
        const auto tag = cbar_tag(r.cfg.cbar);
        const osc::SpectralBasis basis(r.trajectory.front().grid, 8);
        osc::write_trajectory_csv(out.add("selfsim_cbar" + tag + ".csv").string(), r.trajectory, basis,
                                  r.alpha0(), r.g_unit.values);
        write_observables_csv(out.add("observables_cbar" + tag + ".csv"), r.series);
    }
    return runs;
}

inline void task_specfun(const Config& c, ArtifactDir& out) {
    {
        std::FILE* fp = std::fopen(out.add("specfun_table.csv").string().c_str(), "w");
        std::fprintf(fp, "z,F2_scaled,H_scaled,scale_exp,G,g\n");
        for (double z : {0.01, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 30.0, 40.0, 50.0, 100.0}) {
            const auto f = specfun::F2(z), h = specfun::H(z);
            const double G = specfun::G_explicit(z, 1.0, c.cbar);
            std::fprintf(fp, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", z, f.value, h.value, f.scale_exp, G,
                         std::exp(-0.5 * z) * G);
        }
        std::fclose(fp);
    }
    const auto grid = osc::YGrid::make(c.y_max, c.dy);
    const osc::SpectralBasis basis(grid, std::max<std::size_t>(c.n_modes, 40));
    const auto gp = specfun::g_profile(1.0, c.cbar, grid);
    const auto gs = specfun::solve_g_spectral(1.0, c.cbar, basis);
    std::FILE* fp = std::fopen(out.add("g_profile_cbar" + cbar_tag(c.cbar) + ".csv").string().c_str(), "w");
    std::fprintf(fp, "y,g_series,g_spectral\n");
    for (std::size_t j = 0; j < grid.size(); ++j)
        std::fprintf(fp, "%.17g,%.17g,%.17g\n", grid.y(j), gp.values[j], gs[j]);
    std::fclose(fp);
}

inline json mc_config_echo(const Config& c) {
    return {{"drift", c.mc_drift},     {"x0", c.mc_x0},     {"t_end", c.mc_t_end}, {"replicas", c.mc_replicas},
            {"dt", c.mc_dt},           {"seed", c.seed},    {"bridge", c.mc_bridge},
            {"v0", {{"kind", c.v0.kind == pde::InitialKind::indicator ? "indicator" : "smooth_bump"},
                    {"a", c.v0.a}, {"b", c.v0.b}}}};
}

// MC estimate plus the PDE value of v(t_end, x0) under the same constant drift.
inline json run_mc(const Config& c) {
    const auto v0 = c.v0;
    const auto e = mc::estimate(c.mc_x0, c.mc_t_end, v0, c.mc_config());
    json j{{"mean", e.mean}, {"stderr", e.std_error}, {"replicas", e.replicas}, {"config", mc_config_echo(c)}};
    if (c.mc_drift >= 0.0 && c.mc_x0 < c.x_max && c.mc_t_end > 0.0) {
        const auto grid = pde::SpatialGrid::make(c.x_max, c.dx);
        pde::SolverConfig sc;
        sc.dt = std::min(c.dt, grid.dx);
        sc.sample_every = std::size_t(-1);
        const auto r = pde::evolve(pde::initial_condition(v0, grid), c.mc_t_end, sc, drift::ConstantDrift{c.mc_drift});
        const double pde_value = num::cubic_interp(r.field.values, grid.dx, c.mc_x0);
        j["pde_value"] = pde_value;
        j["z_score"] = e.std_error > 0 ? (e.mean - pde_value) / e.std_error : 0.0;
    }
    return j;
}

inline void write_manifest(const Config& c, ArtifactDir& out, double total_seconds) {
    json m;
    m["code_version"] = {{"version", kVersion}, {"git_revision", kGitRevision}};
    json cfg = json::object();
    for (const auto& [k, v] : c.echo) cfg[k] = v;
    m["config"] = cfg;
    m["pipeline"] = c.pipeline;
    json tasks = json::array();
    for (const auto& t : out.tasks) tasks.push_back({{"task", t.name}, {"wall_seconds", t.seconds}});
    m["tasks"] = tasks;
    m["total_wall_seconds"] = total_seconds;
    json files = json::array();
    for (const auto& f : out.files)
        files.push_back({{"path", std::filesystem::relative(f, out.root).string()},
                         {"bytes", std::filesystem::file_size(f)},
                         {"sha256", sha256_file(f)}});
    m["files"] = files;
    write_json(out.root / "manifest.json", m);
}

inline std::vector<double> theorem_cbars() { return {0.0, kThreeSqrtPi, 10.0}; }

// Runs every task named in c.pipeline into out_dir; returns the manifest path.
inline std::filesystem::path run_experiment(const Config& c, const std::filesystem::path& out_dir) {
    const auto t0 = std::chrono::steady_clock::now();
    std::filesystem::create_directories(out_dir);
    ArtifactDir out{out_dir, {}, {}};
    std::vector<SelfSimilarRun> runs;
    for (const auto& task : c.pipeline) {
        const auto s = std::chrono::steady_clock::now();
        if (task == "solve") {
            task_solve(c, out);
        } else if (task == "selfsim") {
            runs = task_selfsim(c, out, {c.cbar});
        } else if (task == "reproduce-theorem") {
            runs = task_selfsim(c, out, theorem_cbars());
            std::FILE* fp = std::fopen(out.add("rate_table.csv").string().c_str(), "w");
            std::fprintf(fp, "cbar,quantity,model,exponent,prefactor,r2,alpha0\n");
            for (const auto& r : runs)
                for (const auto* fits : {&r.mass_fits, &r.slope_fits})
                    for (const auto& f : *fits)
                        std::fprintf(fp, "%.17g,%s,%s,%.17g,%.17g,%.17g,%.17g\n", r.cfg.cbar,
                                     fits == &r.mass_fits ? "mass" : "slope0", to_string(f.model).c_str(),
                                     f.exponent, f.prefactor, f.r_squared, r.alpha0());
            std::fclose(fp);
            write_json(out.add("summary.json"), summary_json(runs));
        } else if (task == "specfun") {
            task_specfun(c, out);
        } else if (task == "mc") {
            write_json(out.add("mc.json"), run_mc(c));
        } else if (task == "fit") {
            if (runs.empty()) runs = task_selfsim(c, out, {c.cbar});
            write_json(out.add("summary.json"), summary_json(runs));
        }
        out.tasks.push_back({task, std::chrono::duration<double>(std::chrono::steady_clock::now() - s).count()});
    }
    write_manifest(c, out, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    return out_dir / "manifest.json";
}

}  // namespace critdrift::experiments
