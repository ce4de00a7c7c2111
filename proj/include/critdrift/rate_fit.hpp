#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "common.hpp"

namespace critdrift::experiments {

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    double slope_se = 0.0;
    double intercept_se = 0.0;
};

inline LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    if (n != y.size() || n < 3) throw std::invalid_argument("linear_fit: need >= 3 paired samples");
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= double(n);
    my /= double(n);
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0) throw std::invalid_argument("linear_fit: degenerate abscissae");
    LinearFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double sse = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - f.intercept - f.slope * x[i];
        sse += r * r;
    }
    f.r_squared = syy > 0 ? std::clamp(1.0 - sse / syy, 0.0, 1.0) : 1.0;
    const double s2 = sse / double(n - 2);
    f.slope_se = std::sqrt(s2 / sxx);
    f.intercept_se = std::sqrt(s2 * (1.0 / double(n) + mx * mx / sxx));
    return f;
}

enum class RateModel { power, log_over_t };

inline std::string to_string(RateModel m) { return m == RateModel::power ? "power" : "log_over_t"; }

struct RateFit {
    RateModel model = RateModel::power;
    double exponent = 0.0;
    double prefactor = 0.0;
    double r_squared = 0.0;
    double t_min = 0.0;
    double t_max = 0.0;
    std::size_t samples = 0;
};

inline constexpr std::size_t kMinFitSamples = 20;

// power: log|r| = log A + p log t.
// log_over_t: |r| = b log(t)/t; b from the mean log offset, r^2 of that one-parameter
// model in log space; exponent is the free slope of log|r| against log(log t/t).
inline RateFit fit_rate(std::span<const double> t, std::span<const double> value, double alpha0,
                        RateModel model, double t_min = 0.0,
                        double t_max = std::numeric_limits<double>::infinity()) {
    if (t.size() != value.size()) throw std::invalid_argument("fit_rate: length mismatch");
    std::vector<double> xs, ys;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] < t_min || t[i] > t_max) continue;
        const double r = std::abs(value[i] - alpha0);
        if (!(r > 1e-300) || !(t[i] > 1.0)) continue;
        const double u = model == RateModel::power ? std::log(t[i]) : std::log(std::log(t[i]) / t[i]);
        xs.push_back(u);
        ys.push_back(std::log(r));
        lo = std::min(lo, t[i]);
        hi = std::max(hi, t[i]);
    }
    if (xs.size() < kMinFitSamples)
        throw std::invalid_argument("fit_rate: only " + std::to_string(xs.size()) +
                                    " usable samples in window [" + std::to_string(lo) + ", " +
                                    std::to_string(hi) + "]");
    const auto lf = linear_fit(xs, ys);
    RateFit f{model, lf.slope, std::exp(lf.intercept), lf.r_squared, lo, hi, xs.size()};
    if (model == RateModel::log_over_t) {
        double off = 0, my = 0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            off += ys[i] - xs[i];
            my += ys[i];
        }
        off /= double(xs.size());
        my /= double(xs.size());
        double sse = 0, syy = 0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            sse += (ys[i] - xs[i] - off) * (ys[i] - xs[i] - off);
            syy += (ys[i] - my) * (ys[i] - my);
        }
        f.prefactor = std::exp(off);
        f.r_squared = syy > 0 ? std::clamp(1.0 - sse / syy, 0.0, 1.0) : 1.0;
    }
    return f;
}

enum class Alpha0Method { slope_extrapolation, spectral_projection };

inline std::string to_string(Alpha0Method m) {
    return m == Alpha0Method::slope_extrapolation ? "slope_extrapolation" : "spectral_projection";
}

struct Alpha0Estimate {
    double value = 0.0;
    Alpha0Method method = Alpha0Method::slope_extrapolation;
    double uncertainty = 0.0;
    double correction = 0.0;  // fitted b
};

inline double correction_basis(double t, bool log_over_t) {
    return log_over_t ? std::log(t) / t : 1.0 / std::sqrt(t);
}

// Least squares v = alpha0 + b phi(t) on samples with t in [t_min, t_max].
inline Alpha0Estimate fit_alpha0(std::span<const double> t, std::span<const double> v, bool log_over_t,
                                 double t_min, double t_max) {
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < t.size(); ++i)
        if (t[i] >= t_min && t[i] <= t_max && t[i] > 1.0) {
            xs.push_back(correction_basis(t[i], log_over_t));
            ys.push_back(v[i]);
        }
    if (xs.size() < kMinFitSamples)
        throw std::invalid_argument("estimate_alpha0: fewer than 20 samples in the window");
    const auto lf = linear_fit(xs, ys);
    return {lf.intercept, Alpha0Method::slope_extrapolation, lf.intercept_se, lf.slope};
}

// Slope extrapolation over the last decade of t. The uncertainty adds the shift
// against the earlier half-window as a truncation proxy.
inline Alpha0Estimate estimate_alpha0(std::span<const double> t, std::span<const double> slope0,
                                      bool log_over_t) {
    if (t.size() < kMinFitSamples) throw std::invalid_argument("estimate_alpha0: series too short");
    const double T = t.back();
    if (!(t.front() <= T / 10.0 && T > 10.0))
        throw std::invalid_argument("estimate_alpha0: series must cover at least one decade of t");
    auto full = fit_alpha0(t, slope0, log_over_t, T / 10.0, T);
    const auto early = fit_alpha0(t, slope0, log_over_t, T / 10.0, T / std::sqrt(10.0));
    full.uncertainty += std::abs(full.value - early.value);
    return full;
}

struct PrefactorCheck {
    double t = 0.0;
    double estimate = 0.0;  // sqrt(1+t) (v_x(0,t) - alpha0)
    double expected = 0.0;  // alpha0 (cbar - 3 sqrt(pi))
    double rel_error = 0.0;
};

// Reads the scaled slope residual at the sample closest to t_eval.
inline PrefactorCheck prefactor_check(std::span<const double> t, std::span<const double> slope0,
                                      double alpha0, double cbar, double t_eval) {
    if (t.empty()) throw std::invalid_argument("prefactor_check: empty series");
    std::size_t best = 0;
    for (std::size_t i = 1; i < t.size(); ++i)
        if (std::abs(t[i] - t_eval) < std::abs(t[best] - t_eval)) best = i;
    PrefactorCheck p;
    p.t = t[best];
    p.estimate = std::sqrt(1.0 + t[best]) * (slope0[best] - alpha0);
    p.expected = alpha0 * (cbar - kThreeSqrtPi);
    p.rel_error = p.expected != 0.0 ? std::abs(p.estimate - p.expected) / std::abs(p.expected)
                                    : std::abs(p.estimate);
    return p;
}

// values ~ (A + B tau) e^{k tau}: for each k the affine prefactor is a weighted
// linear least-squares problem in relative error; k minimizes the relative residual.
struct AffineExpFit {
    double k = 0.0;
    double A = 0.0;
    double B = 0.0;
    double rel_rms = 0.0;
};

inline AffineExpFit fit_affine_exponential(std::span<const double> tau, std::span<const double> values,
                                           double k_lo = -4.0, double k_hi = 2.0) {
    const std::size_t n = tau.size();
    if (n != values.size() || n < kMinFitSamples)
        throw std::invalid_argument("fit_affine_exponential: need >= 20 paired samples");
    for (double v : values)
        if (!(v > 0.0)) throw std::invalid_argument("fit_affine_exponential: values must be positive");
    auto solve = [&](double k) {
        // minimize sum (A w_i + B tau_i w_i - 1)^2 with w_i = e^{k tau_i}/v_i
        double s11 = 0, s12 = 0, s22 = 0, b1 = 0, b2 = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double w = std::exp(k * tau[i]) / values[i];
            s11 += w * w;
            s12 += w * w * tau[i];
            s22 += w * w * tau[i] * tau[i];
            b1 += w;
            b2 += w * tau[i];
        }
        const double det = s11 * s22 - s12 * s12;
        AffineExpFit f;
        f.k = k;
        f.A = (b1 * s22 - b2 * s12) / det;
        f.B = (s11 * b2 - s12 * b1) / det;
        double sse = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double pred = (f.A + f.B * tau[i]) * std::exp(k * tau[i]);
            const double r = pred / values[i] - 1.0;
            sse += r * r;
        }
        f.rel_rms = std::sqrt(sse / double(n));
        return f;
    };
    // coarse scan, then golden-section refinement around the best bracket
    const int m = 600;
    double best_k = k_lo, best = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= m; ++i) {
        const double k = k_lo + (k_hi - k_lo) * i / m;
        const double r = solve(k).rel_rms;
        if (r < best) {
            best = r;
            best_k = k;
        }
    }
    const double h = (k_hi - k_lo) / m;
    double a = best_k - h, b = best_k + h;
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - gr * (b - a), d = a + gr * (b - a);
    for (int it = 0; it < 100; ++it) {
        if (solve(c).rel_rms < solve(d).rel_rms)
            b = d;
        else
            a = c;
        c = b - gr * (b - a);
        d = a + gr * (b - a);
    }
    return solve(0.5 * (a + b));
}

}  // namespace critdrift::experiments
