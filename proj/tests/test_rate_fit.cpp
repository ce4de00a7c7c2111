#include <gtest/gtest.h>

#include <cmath>

#include <critdrift/rate_fit.hpp>
#include <critdrift/theorem.hpp>

using namespace critdrift;
using namespace critdrift::experiments;

namespace {
std::vector<double> log_times(double lo, double hi, std::size_t n) {
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = lo * std::pow(hi / lo, double(i) / double(n - 1));
    return t;
}
}  // namespace

TEST(LinearFit, ExactLine) {
    const std::vector<double> x{0, 1, 2, 3}, y{1, 3, 5, 7};
    const auto f = linear_fit(x, y);
    EXPECT_NEAR(f.slope, 2.0, 1e-14);
    EXPECT_NEAR(f.intercept, 1.0, 1e-14);
    EXPECT_NEAR(f.r_squared, 1.0, 1e-14);
}

TEST(FitRate, RecoversPowerLaws) {
    const auto t = log_times(10.0, 1e4, 200);
    for (double p : {-0.4, -0.5, -0.6, -1.0}) {
        std::vector<double> m(t.size());
        for (std::size_t i = 0; i < t.size(); ++i) m[i] = 3.0 + 2.0 * std::pow(t[i], p);
        const auto f = fit_rate(t, m, 3.0, RateModel::power);
        EXPECT_NEAR(f.exponent, p, 0.01);
        EXPECT_NEAR(f.prefactor, 2.0, 0.04);
        EXPECT_GE(f.r_squared, 0.0);
        EXPECT_LE(f.r_squared, 1.0);
        EXPECT_EQ(f.samples, t.size());
    }
}

TEST(FitRate, LogOverTModel) {
    const auto t = log_times(10.0, 1e4, 200);
    std::vector<double> m(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) m[i] = 1.0 - 0.8 * std::log(t[i]) / t[i];
    const auto f = fit_rate(t, m, 1.0, RateModel::log_over_t);
    EXPECT_NEAR(f.exponent, 1.0, 1e-10);
    EXPECT_NEAR(f.prefactor, 0.8, 1e-10);
    EXPECT_NEAR(f.r_squared, 1.0, 1e-12);
    const auto pw = fit_rate(t, m, 1.0, RateModel::power);
    EXPECT_LT(pw.exponent, -0.8);
}

TEST(FitRate, ReportsShortWindow) {
    const auto t = log_times(10.0, 100.0, 50);
    std::vector<double> m(t.size(), 1.0);
    try {
        fit_rate(t, m, 1.0, RateModel::power);
        FAIL() << "expected a degenerate-window error";
    } catch (const std::invalid_argument& e) {
        EXPECT_NE(std::string(e.what()).find("usable samples"), std::string::npos);
    }
    EXPECT_THROW(fit_rate(t, m, 0.0, RateModel::power, 50.0, 60.0), std::invalid_argument);
}

TEST(Alpha0, SyntheticSlopeSeries) {
    const auto t = log_times(1.0, 2e4, 400);
    std::vector<double> v(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) v[i] = 0.7 + 0.3 / std::sqrt(t[i]);
    const auto e = estimate_alpha0(t, v, false);
    EXPECT_NEAR(e.value, 0.7, 1e-6);
    EXPECT_NEAR(e.correction, 0.3, 1e-6);
    EXPECT_EQ(e.method, Alpha0Method::slope_extrapolation);
    EXPECT_THROW(estimate_alpha0(std::vector<double>(t.begin(), t.begin() + 10),
                                 std::vector<double>(v.begin(), v.begin() + 10), false),
                 std::invalid_argument);
}

TEST(Alpha0, WindowStability) {
    const auto t = log_times(1.0, 2e4, 800);
    std::vector<double> v(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) v[i] = 0.7 + 0.3 / std::sqrt(t[i]) + 0.5 / t[i];
    const double T = t.back();
    const auto late = fit_alpha0(t, v, false, T / 2, T);
    const auto early = fit_alpha0(t, v, false, T / 4, T / 2);
    EXPECT_LT(std::abs(late.value - early.value), std::abs(late.correction) / std::sqrt(T / 2));
}

TEST(Prefactor, SignAndMagnitude) {
    const auto t = log_times(10.0, 2e4, 100);
    const double a0 = 0.5;
    for (double cbar : {0.0, 10.0}) {
        std::vector<double> s(t.size());
        for (std::size_t i = 0; i < t.size(); ++i) s[i] = a0 + a0 * (cbar - kThreeSqrtPi) / std::sqrt(1 + t[i]);
        const auto p = prefactor_check(t, s, a0, cbar, 1e4);
        EXPECT_LT(p.rel_error, 1e-12);
        EXPECT_EQ(std::signbit(p.estimate), std::signbit(cbar - kThreeSqrtPi));
    }
}

TEST(AffineExp, RecoversTauExponential) {
    std::vector<double> tau, r;
    for (int i = 0; i <= 200; ++i) {
        tau.push_back(4.0 + 5.0 * i / 200.0);
        r.push_back((0.3 + 2.0 * tau.back()) * std::exp(-tau.back()));
    }
    const auto f = fit_affine_exponential(tau, r);
    EXPECT_NEAR(f.k, -1.0, 1e-6);
    EXPECT_NEAR(f.A, 0.3, 1e-4);
    EXPECT_NEAR(f.B, 2.0, 1e-4);
    r[3] = -1.0;
    EXPECT_THROW(fit_affine_exponential(tau, r), std::invalid_argument);
}

TEST(Theorem, CriticalRunHasPositiveConsistentAlpha) {
    SelfSimilarRunConfig c;
    c.cbar = kThreeSqrtPi;
    const auto run = run_selfsimilar(c);
    EXPECT_GT(run.alpha0(), 0.0);
    EXPECT_NEAR(run.alpha_spectral.value / run.alpha_slope.value, 1.0, 0.01);
    // no t^{-1/2} term: the scaled residual decays (like log t / sqrt t) toward 0
    double prev = 1e300;
    for (double te : {1e2, 1e3, 1e4, 1e5, 1e8}) {
        const double p = std::abs(prefactor_check(run.series.t, run.series.slope0, run.alpha0(), c.cbar, te).estimate);
        EXPECT_LT(p, prev) << te;
        prev = p;
    }
    EXPECT_LT(prev, 0.01 * run.alpha0());
    const auto& t = run.series.t;
    const double T = t.back();
    const auto late = fit_alpha0(t, run.series.slope0, true, T / 2, T);
    const auto early = fit_alpha0(t, run.series.slope0, true, T / 4, T / 2);
    EXPECT_LT(std::abs(late.value - early.value), std::abs(late.correction) * std::log(T / 2) / (T / 2));
}

TEST(Theorem, SubcriticalPrefactorSign) {
    SelfSimilarRunConfig c;
    c.cbar = 10.0;
    const auto run = run_selfsimilar(c);
    EXPECT_GT(run.prefactor.estimate, 0.0);
    EXPECT_LT(std::abs(run.alpha_spectral.value / run.alpha_slope.value - 1.0), 0.01);
}
