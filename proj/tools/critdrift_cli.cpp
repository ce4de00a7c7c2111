// critdrift: command-line front end for the solvers and pipelines.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include <critdrift/experiments.hpp>

using namespace critdrift;
using experiments::Config;
using experiments::ConfigError;
using experiments::json;

namespace {

struct Overrides {
    std::vector<std::pair<std::string, std::string>> kv;
    void add(const std::string& k, const std::optional<std::string>& v) {
        if (v) kv.emplace_back(k, *v);
    }
};

// "t,mass,slope0,..." style CSV with a header row
std::map<std::string, std::vector<double>> read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read '" + path + "'");
    std::string line;
    std::getline(in, line);
    std::vector<std::string> names;
    {
        std::stringstream ss(line);
        std::string n;
        while (std::getline(ss, n, ',')) names.push_back(n);
    }
    std::map<std::string, std::vector<double>> cols;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        for (std::size_t k = 0; k < names.size() && std::getline(ss, cell, ','); ++k)
            cols[names[k]].push_back(std::strtod(cell.c_str(), nullptr));
    }
    return cols;
}

void print(const json& j) { std::cout << j.dump(2) << std::endl; }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"critdrift: moving-frame KPP linearization, self-similar spectra, BBM Monte Carlo"};
    app.require_subcommand(1);
    std::string config_path, out_dir = "out";
    std::optional<std::uint64_t> seed;
    app.add_option("--config", config_path, "flat key=value config file");
    app.add_option("--out", out_dir, "artifact directory");
    app.add_option("--seed", seed, "random seed");

    std::optional<std::string> cbar, t_end, tau_end, dx, dt, x_max;
    auto* solve = app.add_subcommand("solve", "physical-frame solve, writes t,mass,slope0,flux_residual");
    solve->add_option("--cbar", cbar, "drift correction coefficient (number or 3sqrtpi)");
    solve->add_option("--t-end", t_end);
    solve->add_option("--dx", dx);
    solve->add_option("--dt", dt);
    solve->add_option("--x-max", x_max);

    auto* selfsim = app.add_subcommand("selfsim", "self-similar solve with alpha0 estimate and rate fits");
    selfsim->add_option("--cbar", cbar);
    selfsim->add_option("--tau-end", tau_end);

    double z = -1, y = -1, alpha = 1.0;
    std::string sf_cbar = "0";
    auto* sf = app.add_subcommand("specfun", "evaluate F2, H, G, g and g_slope0 at one point");
    auto* zopt = sf->add_option("--z", z, "z = y^2/4");
    auto* yopt = sf->add_option("--y", y);
    zopt->excludes(yopt);
    sf->add_option("--alpha", alpha);
    sf->add_option("--cbar", sf_cbar);

    std::optional<std::string> mdrift, mx0, mt, mrep, mdt, mseed;
    auto* mcc = app.add_subcommand("mc", "branching Brownian motion estimate of sum v0(Y_t)");
    mcc->add_option("--drift", mdrift);
    mcc->add_option("--x0", mx0);
    mcc->add_option("--t-end", mt);
    mcc->add_option("--replicas", mrep);
    mcc->add_option("--dt", mdt);
    mcc->add_option("--seed", mseed);

    std::string fit_input, fit_model = "power", fit_column = "mass";
    double fit_alpha0 = 0, fit_tmin = 0, fit_tmax = std::numeric_limits<double>::infinity();
    auto* fit = app.add_subcommand("fit", "fit |column - alpha0| over t from a CSV series");
    fit->add_option("--input", fit_input)->required();
    fit->add_option("--alpha0", fit_alpha0)->required();
    fit->add_option("--model", fit_model)->check(CLI::IsMember({"power", "log_over_t"}));
    fit->add_option("--column", fit_column);
    fit->add_option("--t-min", fit_tmin);
    fit->add_option("--t-max", fit_tmax);

    auto* repro = app.add_subcommand("reproduce-theorem", "rate table for cbar in {0, 3sqrtpi, 10}");

    CLI11_PARSE(app, argc, argv);

    try {
        Config cfg = config_path.empty() ? Config{} : experiments::load_config(config_path);
        if (seed) experiments::set_key(cfg, "seed", std::to_string(*seed));

        if (sf->parsed()) {
            const double c = experiments::detail::parse_double("cbar", sf_cbar);
            if (z < 0 && y < 0) throw ConfigError("specfun: give --z or --y");
            if (z < 0) z = 0.25 * y * y;
            if (y < 0) y = 2.0 * std::sqrt(z);
            const auto f = specfun::F2(z), h = specfun::H(z);
            const double G = specfun::G_explicit(z, alpha, c);
            print({{"z", z}, {"y", y}, {"alpha", alpha}, {"cbar", c},
                   {"F2", f.value}, {"F2_scale_exp", f.scale_exp},
                   {"H", h.value}, {"H_scale_exp", h.scale_exp},
                   {"G", G}, {"g", std::exp(-0.5 * z) * G}, {"g_slope0", specfun::g_slope0(alpha, c)}});
            return 0;
        }
        if (fit->parsed()) {
            auto cols = read_csv(fit_input);
            if (!cols.count("t") || !cols.count(fit_column))
                throw ConfigError("fit: input needs columns 't' and '" + fit_column + "'");
            const auto model = fit_model == "power" ? experiments::RateModel::power
                                                    : experiments::RateModel::log_over_t;
            const auto f = experiments::fit_rate(cols["t"], cols[fit_column], fit_alpha0, model, fit_tmin, fit_tmax);
            print({{"model", fit_model}, {"column", fit_column}, {"exponent", f.exponent},
                   {"prefactor", f.prefactor}, {"r2", f.r_squared}, {"t_min", f.t_min},
                   {"t_max", f.t_max}, {"samples", f.samples}});
            return 0;
        }

        Overrides o;
        if (solve->parsed()) {
            o.add("cbar", cbar);
            o.add("t_end", t_end);
            o.add("dx", dx);
            o.add("dt", dt);
            o.add("x_max", x_max);
            o.kv.emplace_back("pipeline", "solve");
        } else if (selfsim->parsed()) {
            o.add("cbar", cbar);
            o.add("tau_end", tau_end);
            o.kv.emplace_back("pipeline", "selfsim,fit");
        } else if (mcc->parsed()) {
            o.add("mc.drift", mdrift);
            o.add("mc.x0", mx0);
            o.add("mc.t_end", mt);
            o.add("mc.replicas", mrep);
            o.add("mc.dt", mdt);
            o.add("mc.seed", mseed);
            o.kv.emplace_back("pipeline", "mc");
        } else if (repro->parsed()) {
            o.kv.emplace_back("pipeline", "reproduce-theorem");
        }
        for (const auto& [k, v] : o.kv) experiments::set_key(cfg, k, v);

        const auto manifest = experiments::run_experiment(cfg, out_dir);
        if (mcc->parsed()) {
            std::ifstream in(std::filesystem::path(out_dir) / "mc.json");
            std::cout << in.rdbuf();
        } else if (selfsim->parsed() || repro->parsed()) {
            std::ifstream in(std::filesystem::path(out_dir) / "summary.json");
            std::cout << in.rdbuf();
        } else {
            std::cout << manifest.string() << std::endl;
        }
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << std::endl;
        return experiments::kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << std::endl;
        return experiments::kExitConfig;
    } catch (const NumericalFailure& e) {
        std::cerr << "numerical failure: " << e.what() << std::endl;
        return experiments::kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 1;
    }
}
