#pragma once

// Explicit correction profile g solving (M - 1/2) g = F with
//   F(y) = alpha e^{-y^2/8} [ (3/4) y^2 - (cbar/2) y - 3/2 ].
// In z = y^2/4 and G = e^{z/2} g:
//   G(z) = alpha [ 2 cbar sqrt(z) + 3 z - (3/2) F2(z) - 6 sqrt(pi) H(z) ].
// F2 and H both grow like z^{-3/2} e^z and cancel; the combination is summed in
// extended precision past z = 20.

#include <algorithm>
#include <array>
#include <limits>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include <boost/math/constants/constants.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include "common.hpp"
#include "oscillator.hpp"

namespace critdrift::specfun {

struct SeriesAccuracy {
    double rel_tol = 1e-14;
    std::size_t max_terms = 500;

    void validate() const {
        if (!(rel_tol > 0.0 && rel_tol <= 1e-6))
            throw std::invalid_argument("SeriesAccuracy: rel_tol must lie in (0, 1e-6]");
        if (max_terms < 4) throw std::invalid_argument("SeriesAccuracy: max_terms too small");
    }
};

// value * e^{scale_exp}; scale_exp is 0 unless the evaluation had to be scaled.
struct SeriesValue {
    double value = 0.0;
    double scale_exp = 0.0;

    double unscaled() const { return value * std::exp(scale_exp); }
};

inline constexpr double kScaleThreshold = 30.0;

// Lanczos approximation (g = 7, 9 terms) with reflection below 1/2.
inline double lanczos_gamma(double x) {
    static constexpr std::array<double, 9> c = {
        0.99999999999980993,  676.5203681218851,     -1259.1392167224028,
        771.32342877765313,   -176.61502916214059,   12.507343278686905,
        -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};
    if (x < 0.5) return std::numbers::pi / (std::sin(std::numbers::pi * x) * lanczos_gamma(1.0 - x));
    x -= 1.0;
    double a = c[0];
    const double t = x + 7.5;
    for (std::size_t i = 1; i < c.size(); ++i) a += c[i] / (x + double(i));
    return std::sqrt(2.0 * std::numbers::pi) * std::pow(t, x + 0.5) * std::exp(-t) * a;
}

namespace detail {

inline bool converged(double term, double sum, std::size_t n, double z, double tol) {
    return double(n) > z && std::abs(term) <= tol * std::abs(sum);
}

// F2(z) e^{-s}: sqrt(pi) sum_{n>=2} t_n with t_2 = z^2/(2 Gamma(5/2)),
// t_{n+1} = t_n z (n-1) / ((n+1)(n+1/2)). Terms carried in log space.
inline double f2_scaled(double z, double s, const SeriesAccuracy& acc) {
    if (z == 0.0) return 0.0;
    const double lz = std::log(z);
    double logt = 2.0 * lz - std::log(2.0 * lanczos_gamma(2.5)) - s;
    double sum = 0.0;
    for (std::size_t n = 2; n < acc.max_terms + 2; ++n) {
        const double t = std::exp(logt);
        sum += t;
        if (converged(t, sum, n, z, acc.rel_tol)) return kSqrtPi * sum;
        logt += lz + std::log(double(n - 1)) - std::log(double(n + 1)) - std::log(double(n) + 0.5);
    }
    throw NumericalFailure("F2: series hit max_terms");
}

// H(z) e^{-s}: -(sqrt(z)/4) sum_{n>=0} h_n with h_0 = Gamma(-1/2)/Gamma(3/2),
// h_{n+1} = h_n z (n-1/2) / ((n+1)(n+3/2)); h_n > 0 for n >= 1.
inline double h_scaled(double z, double s, const SeriesAccuracy& acc) {
    if (z == 0.0) return 0.0;
    const double h0 = lanczos_gamma(-0.5) / lanczos_gamma(1.5);
    double sum = h0 * std::exp(-s);
    const double lz = std::log(z);
    double logt = std::log(-h0) + lz + std::log(0.5) - std::log(1.5) - s;
    for (std::size_t n = 1; n < acc.max_terms + 1; ++n) {
        const double t = std::exp(logt);
        sum += t;
        if (converged(t, sum, n, z, acc.rel_tol)) return -0.25 * std::sqrt(z) * sum;
        logt += lz + std::log(double(n) - 0.5) - std::log(double(n + 1)) - std::log(double(n) + 1.5);
    }
    throw NumericalFailure("H: series hit max_terms");
}

// 3z - (3/2) F2(z) - 6 sqrt(pi) H(z) in arithmetic type Real, exact leading constants.
template <class Real>
Real cancelling_part(const Real& z, std::size_t max_terms) {
    using boost::math::constants::root_pi;
    const Real rp = root_pi<Real>();
    const Real eps = std::numeric_limits<Real>::epsilon();
    Real tf = z * z / (Real(3) * rp / Real(2));  // z^2 / (2 Gamma(5/2))
    Real f2 = 0;
    std::size_t n = 2;
    for (; n < max_terms + 2; ++n) {
        f2 += tf;
        if (Real(n) > z && abs(tf) <= eps * abs(f2)) break;
        tf *= z * Real(n - 1) / (Real(n + 1) * (Real(n) + Real(0.5)));
    }
    if (n == max_terms + 2) throw NumericalFailure("G: F2 series hit max_terms");
    f2 *= rp;
    Real th = -4;
    Real hs = 0;
    for (n = 0; n < max_terms + 1; ++n) {
        hs += th;
        if (n > 0 && Real(n) > z && abs(th) <= eps * abs(hs)) break;
        th *= z * (Real(n) - Real(0.5)) / (Real(n + 1) * (Real(n) + Real(1.5)));
    }
    if (n == max_terms + 1) throw NumericalFailure("G: H series hit max_terms");
    const Real h = -sqrt(z) / Real(4) * hs;
    return Real(3) * z - Real(1.5) * f2 - Real(6) * rp * h;
}

using Float50 = boost::multiprecision::cpp_bin_float_50;
using Float100 = boost::multiprecision::cpp_bin_float_100;
using Float200 = boost::multiprecision::number<boost::multiprecision::cpp_bin_float<200>>;

}  // namespace detail

inline SeriesValue F2(double z, const SeriesAccuracy& acc = {}) {
    acc.validate();
    if (!(z >= 0.0)) throw std::domain_error("F2: z must be non-negative");
    const double s = z > kScaleThreshold ? z : 0.0;
    return {detail::f2_scaled(z, s, acc), s};
}

inline SeriesValue H(double z, const SeriesAccuracy& acc = {}) {
    acc.validate();
    if (!(z >= 0.0)) throw std::domain_error("H: z must be non-negative");
    const double s = z > kScaleThreshold ? z : 0.0;
    return {detail::h_scaled(z, s, acc), s};
}

// F2(z) e^{-z} and H(z) e^{-z} at any z
inline double F2_scaled(double z, const SeriesAccuracy& acc = {}) {
    acc.validate();
    if (!(z >= 0.0)) throw std::domain_error("F2: z must be non-negative");
    return detail::f2_scaled(z, z, acc);
}
inline double H_scaled(double z, const SeriesAccuracy& acc = {}) {
    acc.validate();
    if (!(z >= 0.0)) throw std::domain_error("H: z must be non-negative");
    return detail::h_scaled(z, z, acc);
}

// Largest z handled; beyond it e^{-z/2} G is below 1e-120 for any moderate alpha, cbar.
inline constexpr double kMaxG = 600.0;

// The alpha- and cbar-free part P(z) = 3z - (3/2)F2 - 6 sqrt(pi) H.
inline double cancelling_part(double z, const SeriesAccuracy& acc = {}) {
    acc.validate();
    if (!(z >= 0.0)) throw std::domain_error("G: z must be non-negative");
    if (z == 0.0) return 0.0;
    if (z <= 20.0) {
        return 3.0 * z - 1.5 * detail::f2_scaled(z, 0.0, acc) - 6.0 * kSqrtPi * detail::h_scaled(z, 0.0, acc);
    }
    const std::size_t terms = std::max<std::size_t>(acc.max_terms, std::size_t(2.0 * z + 200.0));
    // digits needed grow like z/(2 ln 10); each tier leaves e^{z/2} * eps below 1e-20
    if (z <= 120.0) return detail::cancelling_part(detail::Float50(z), terms).convert_to<double>();
    if (z <= 300.0) return detail::cancelling_part(detail::Float100(z), terms).convert_to<double>();
    if (z <= kMaxG) return detail::cancelling_part(detail::Float200(z), terms).convert_to<double>();
    throw std::domain_error("G: z beyond the supported range");
}

inline double G_explicit(double z, double alpha, double cbar, const SeriesAccuracy& acc = {}) {
    if (!(z >= 0.0)) throw std::domain_error("G: z must be non-negative");
    return alpha * (2.0 * cbar * std::sqrt(z) + cancelling_part(z, acc));
}

// g_y(0) from the sqrt(z) coefficient: 2 cbar + 6 sqrt(pi) * (1/4) Gamma(-1/2)/Gamma(3/2).
inline double g_slope0(double alpha, double cbar) {
    const double h0 = lanczos_gamma(-0.5) / lanczos_gamma(1.5);
    return alpha * (cbar + 0.75 * kSqrtPi * h0);
}

struct GProfile {
    double alpha = 0.0;
    double cbar = 0.0;
    osc::YGrid grid;
    std::vector<double> values;
    double g_slope0 = 0.0;
};

inline double g_value(double y, double alpha, double cbar, const SeriesAccuracy& acc = {}) {
    const double z = 0.25 * y * y;
    if (z > kMaxG) return 0.0;
    return std::exp(-0.5 * z) * G_explicit(z, alpha, cbar, acc);
}

inline GProfile g_profile(double alpha, double cbar, const osc::YGrid& grid, const SeriesAccuracy& acc = {}) {
    GProfile p{alpha, cbar, grid, std::vector<double>(grid.size(), 0.0), g_slope0(alpha, cbar)};
    if (alpha == 0.0) return p;
    for (std::size_t j = 1; j < grid.size(); ++j) {
        const double y = grid.y(j);
        const double z = 0.25 * y * y;
        if (z > kMaxG) break;
        // P is shared by all cbar; G = alpha (2 cbar sqrt z + P)
        p.values[j] = std::exp(-0.5 * z) * alpha * (2.0 * cbar * std::sqrt(z) + cancelling_part(z, acc));
    }
    return p;
}

// Right side of (M - 1/2) g = F on the grid.
inline std::vector<double> g_forcing(double alpha, double cbar, const osc::YGrid& grid) {
    std::vector<double> F(grid.size());
    for (std::size_t j = 0; j < F.size(); ++j) {
        const double y = grid.y(j);
        F[j] = alpha * std::exp(-y * y / 8.0) * (0.75 * y * y - 0.5 * cbar * y - 1.5);
    }
    return F;
}

// Coefficient of e_0 in g, from projecting the g equation on the kernel.
inline double g1_projection(double alpha, double cbar, const osc::SpectralBasis& basis) {
    const auto F = g_forcing(alpha, cbar, basis.grid());
    // F e_0 is not odd-extendable, so the plain trapezoid rule is only O(dy^2) here
    return -2.0 * num::gregory_product(F, basis.mode(0), basis.grid().dy);
}

namespace detail {

// Even Taylor coefficients of g at 0 (g(0) = 0), from the ODE
//   -g'' + (y^2/16 - 5/4) g = F_even,  F_even = alpha e^{-y^2/8} ((3/4) y^2 - 3/2).
// Returns c[k] multiplying y^{2k}, k = 0..K, of the polynomial p with
// e^{-y^2/8} p(y) matching g's even part through y^{2K}.
inline std::vector<double> lift_polynomial(double alpha, std::size_t K) {
    const std::size_t deg = 2 * K + 4;
    std::vector<double> f(deg + 1, 0.0);  // Taylor coefficients of F_even
    double em = 1.0;                       // (-1/8)^m / m!
    for (std::size_t m = 0; 2 * m <= deg; ++m) {
        if (m > 0) em *= -0.125 / double(m);
        if (2 * m <= deg) f[2 * m] += -1.5 * alpha * em;
        if (2 * m + 2 <= deg) f[2 * m + 2] += 0.75 * alpha * em;
    }
    std::vector<double> a(deg + 3, 0.0);  // even Taylor coefficients of g
    for (std::size_t k = 0; k + 2 <= deg; k += 2) {
        const double prev = k >= 2 ? a[k - 2] : 0.0;
        a[k + 2] = (prev / 16.0 - 1.25 * a[k] - f[k]) / (double(k + 2) * double(k + 1));
    }
    // p = e^{y^2/8} * sum a_{2j} y^{2j}, truncated at y^{2K}
    std::vector<double> c(K + 1, 0.0);
    double ep = 1.0;  // (1/8)^m / m!
    for (std::size_t m = 0; m <= K; ++m) {
        if (m > 0) ep *= 0.125 / double(m);
        for (std::size_t j = 0; j + m <= K; ++j) c[j + m] += ep * a[2 * j];
    }
    return c;
}

}  // namespace detail

// Spectral construction independent of the F2/H series. The boundary lifting
// e^{-y^2/8} p(y) absorbs g's even Taylor part at 0 (g''(0) = 3 alpha/2 != 0 would
// otherwise limit the eigen-expansion to algebraic convergence); the smooth rest
// is inverted mode by mode with eigenvalue n - 1/2.
inline std::vector<double> solve_g_spectral(double alpha, double cbar, const osc::SpectralBasis& basis,
                                            std::size_t lift_order = 4) {
    if (basis.n_modes() < 40) throw std::invalid_argument("solve_g_spectral: need n_modes >= 40");
    const auto& grid = basis.grid();
    std::vector<double> g(grid.size(), 0.0);
    if (alpha == 0.0) return g;
    const auto c = detail::lift_polynomial(alpha, lift_order);
    std::vector<double> rest = g_forcing(alpha, cbar, grid);
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const double y = grid.y(j), y2 = y * y;
        double p = c[0], dp = 0.0, d2p = 0.0, ykm2 = 1.0;  // ykm2 = y^{2k-2}
        for (std::size_t k = 1; k < c.size(); ++k) {
            const double n = double(2 * k);
            d2p += c[k] * n * (n - 1.0) * ykm2;
            dp += c[k] * n * ykm2 * y;
            p += c[k] * ykm2 * y2;
            ykm2 *= y2;
        }
        const double w = std::exp(-y2 / 8.0);
        g[j] = w * p;
        rest[j] -= w * (-d2p + 0.5 * y * dp - p);
    }
    for (std::size_t n = 0; n < basis.n_modes(); ++n) {
        const double lam = osc::eigenvalue(n) - 0.5;
        if (std::abs(lam) < 1e-6) throw NumericalFailure("solve_g_spectral: ill-conditioned mode");
        const double coef = basis.inner(rest, basis.mode(n)) / lam;
        const auto& e = basis.mode(n);
        for (std::size_t j = 0; j < g.size(); ++j) g[j] += coef * e[j];
    }
    g.front() = 0.0;
    return g;
}

}  // namespace critdrift::specfun
