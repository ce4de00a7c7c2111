#pragma once

// End-to-end self-similar runs: evolve W, read mass and boundary slope, estimate
// alpha0 two ways, fit decay laws and decompose the remainder.

#include <cmath>
#include <cstddef>
#include <chrono>
#include <future>
#include <span>
#include <string>
#include <vector>

#include "common.hpp"
#include "drift_schedule.hpp"
#include "oscillator.hpp"
#include "pde_physical.hpp"
#include "rate_fit.hpp"
#include "specfun.hpp"

namespace critdrift::experiments {

struct SelfSimilarRunConfig {
    double cbar = kThreeSqrtPi;
    pde::InitialData v0{};
    double y_max = 25.0;
    double dy = 0.01;
    double dtau = 1e-3;
    double sample_dtau = 0.025;
    double tau_end = 10.0;     // end of the data used for rate fits
    double tau_alpha = 20.0;   // the run continues to here for the alpha0 limit
    double fit_tau_lo = 6.0;
    double fit_tau_hi = 10.0;
    double prefactor_t = 1e4;
    std::size_t n_modes = 40;
};

inline bool is_critical(double cbar) { return std::abs(cbar - kThreeSqrtPi) < 1e-9; }

struct RunSeries {
    std::vector<double> tau, t, mass, slope0;
};

struct SelfSimilarRun {
    SelfSimilarRunConfig cfg;
    std::vector<osc::SelfSimilarField> trajectory;
    RunSeries series;
    specfun::GProfile g_unit;  // alpha = 1
    Alpha0Estimate alpha_slope;
    Alpha0Estimate alpha_spectral;
    std::vector<RateFit> mass_fits;   // power, log_over_t
    std::vector<RateFit> slope_fits;  // power, log_over_t
    PrefactorCheck prefactor;
    double wall_seconds = 0.0;

    double alpha0() const { return alpha_slope.value; }

    // samples with tau in [lo, hi]
    std::vector<std::size_t> window(double lo, double hi) const {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < series.tau.size(); ++i)
            if (series.tau[i] >= lo - 1e-9 && series.tau[i] <= hi + 1e-9) idx.push_back(i);
        return idx;
    }
};

inline Alpha0Estimate alpha0_spectral(const std::vector<osc::SelfSimilarField>& traj,
                                      const osc::SpectralBasis& basis, std::span<const double> g_unit) {
    if (traj.empty() || traj.back().tau < 6.0)
        throw std::invalid_argument("estimate_alpha0: spectral route needs tau >= 6");
    const auto& last = traj.back();
    Alpha0Estimate e;
    e.method = Alpha0Method::spectral_projection;
    e.value = osc::alpha_from_projection(last, basis, g_unit);
    // shift against the snapshot one unit of tau earlier, as a convergence proxy
    for (auto it = traj.rbegin(); it != traj.rend(); ++it)
        if (it->tau <= last.tau - 1.0) {
            e.uncertainty = std::abs(e.value - osc::alpha_from_projection(*it, basis, g_unit));
            break;
        }
    return e;
}

inline SelfSimilarRun run_selfsimilar(const SelfSimilarRunConfig& cfg) {
    const auto start = std::chrono::steady_clock::now();
    SelfSimilarRun run;
    run.cfg = cfg;
    const auto grid = osc::YGrid::make(cfg.y_max, cfg.dy);
    const auto W0 = osc::initial_W(cfg.v0, grid);
    osc::SelfSimilarConfig sc;
    sc.dtau = cfg.dtau;
    sc.sample_dtau = cfg.sample_dtau;
    const double tau_stop = std::max(cfg.tau_end, cfg.tau_alpha);
    run.trajectory = osc::evolve_W(W0, tau_stop, drift::DriftExpansion{cfg.cbar}, sc);

    auto& s = run.series;
    for (const auto& W : run.trajectory) {
        s.tau.push_back(W.tau);
        s.t.push_back(std::expm1(W.tau));
        s.mass.push_back(osc::selfsimilar_mass(W));
        s.slope0.push_back(osc::slope_correspondence(W));
    }

    run.g_unit = specfun::g_profile(1.0, cfg.cbar, grid);
    const osc::SpectralBasis basis(grid, std::max<std::size_t>(cfg.n_modes, 1));
    const bool lt = is_critical(cfg.cbar);
    run.alpha_slope = estimate_alpha0(s.t, s.slope0, lt);
    run.alpha_spectral = alpha0_spectral(run.trajectory, basis, run.g_unit.values);

    const double a0 = run.alpha0();
    const double t_lo = std::expm1(cfg.fit_tau_lo) * (1 - 1e-12);
    const double t_hi = std::expm1(cfg.fit_tau_hi) * (1 + 1e-12);
    for (auto m : {RateModel::power, RateModel::log_over_t}) {
        run.mass_fits.push_back(fit_rate(s.t, s.mass, a0, m, t_lo, t_hi));
        run.slope_fits.push_back(fit_rate(s.t, s.slope0, a0, m, t_lo, t_hi));
    }
    run.prefactor = prefactor_check(s.t, s.slope0, a0, cfg.cbar, cfg.prefactor_t);
    run.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return run;
}

// Remainder of the three-part split at every sample in [tau_lo, tau_hi].
struct RemainderSeries {
    std::vector<double> tau, norm, slope0;
};

inline RemainderSeries remainder_series(const SelfSimilarRun& run, double tau_lo, double tau_hi) {
    RemainderSeries r;
    std::vector<double> g = run.g_unit.values;
    for (auto& v : g) v *= run.alpha0();
    for (const auto& W : run.trajectory) {
        if (W.tau < tau_lo - 1e-9 || W.tau > tau_hi + 1e-9) continue;
        const auto D = osc::decompose(W, run.alpha0(), g);
        r.tau.push_back(W.tau);
        r.norm.push_back(D.R_norm);
        r.slope0.push_back(D.R_slope0);
    }
    return r;
}

// sup over x in [0, x_hi] of |v(t,x)/alpha0 - x e^{-x}|, v rebuilt from W.
inline double profile_deviation(const osc::SelfSimilarField& W, double alpha0, double x_hi = 20.0,
                                double hx = 0.01) {
    const double s = std::exp(0.5 * W.tau);
    double worst = 0.0;
    for (double x = 0.0; x <= x_hi + 1e-12; x += hx) {
        const double y = x / s;
        if (y > W.grid.y_max) break;
        const double v = std::exp(0.5 * W.tau - y * y / 8.0 - x) * num::cubic_interp(W.values, W.grid.dy, y);
        worst = std::max(worst, std::abs(v / alpha0 - x * std::exp(-x)));
    }
    return worst;
}

// Independent runs for several cbar values, concurrently.
inline std::vector<SelfSimilarRun> run_sweep(const SelfSimilarRunConfig& base, const std::vector<double>& cbars) {
    std::vector<std::future<SelfSimilarRun>> jobs;
    for (double c : cbars) {
        auto cfg = base;
        cfg.cbar = c;
        jobs.push_back(std::async(std::launch::async, [cfg] { return run_selfsimilar(cfg); }));
    }
    std::vector<SelfSimilarRun> out;
    for (auto& j : jobs) out.push_back(j.get());
    return out;
}

}  // namespace critdrift::experiments
