#pragma once

// Self-similar frame. With tau = log(1+t), y = x/sqrt(1+t) and
//   W(tau, y) = e^{-tau/2} e^{y^2/8} e^{x} v(t, x)
// the moving-frame equation becomes
//   W_tau + M W = a(tau) (W_y - (y/4) W) + b(tau) W,   M = -d_yy + y^2/16 - 3/4,
// with W = 0 at y = 0 and W_y(tau, 0) = v_x(t, 0).
// Derivation sketch: vbar = e^x v solves vbar_t + beta vbar_x = vbar_xx + beta vbar with
// beta = Xdot - 2; rescaling to (tau, y) and conjugating by e^{y^2/8} gives the
// harmonic potential y^2/16 plus the constant -1/4 - 1/2 = -3/4 from the e^{-tau/2}
// prefactor (a + sign there would leave -7/4).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "banded.hpp"
#include "common.hpp"
#include "drift_schedule.hpp"
#include "numerics.hpp"
#include "pde_physical.hpp"
#include "stencils.hpp"

namespace critdrift::osc {

struct YGrid {
    double y_max = 25.0;
    std::size_t ny = 2500;
    double dy = 0.01;

    static YGrid make(double y_max, double dy) {
        if (!(y_max > 0.0) || !(dy > 0.0)) throw std::invalid_argument("YGrid: need y_max, dy > 0");
        const auto n = static_cast<std::size_t>(std::llround(y_max / dy));
        if (n < 8) throw std::invalid_argument("YGrid: fewer than 8 cells");
        return {y_max, n, y_max / double(n)};
    }
    double y(std::size_t j) const { return double(j) * dy; }
    std::size_t size() const { return ny + 1; }
};

struct SelfSimilarField {
    double tau = 0.0;
    YGrid grid;
    std::vector<double> values;
};

enum class FdOrder { second = 2, fourth = 4, sixth = 6 };

inline double potential(double y) { return y * y / 16.0 - 0.75; }

// e_n(y) = psi_{2n+1}(y/2) with psi_k the normalized Hermite functions on the line;
// unit L^2 norm on the half-line.
inline double eigenfunction_value(std::size_t n, double y) {
    const double u = 0.5 * y;
    double p0 = std::pow(std::numbers::pi, -0.25) * std::exp(-0.5 * u * u);
    double p1 = std::sqrt(2.0) * u * p0;
    const std::size_t k_target = 2 * n + 1;
    for (std::size_t k = 2; k <= k_target; ++k) {
        const double pk = std::sqrt(2.0 / double(k)) * u * p1 - std::sqrt(double(k - 1) / double(k)) * p0;
        p0 = p1;
        p1 = pk;
    }
    return p1;
}

inline std::vector<double> eigenfunction(std::size_t n, const YGrid& g) {
    std::vector<double> e(g.size());
    for (std::size_t j = 0; j < e.size(); ++j) e[j] = eigenfunction_value(n, g.y(j));
    e.front() = 0.0;
    return e;
}

inline double eigenvalue(std::size_t n) { return double(n); }

// the unnormalized kernel direction y e^{-y^2/8} = sqrt(2 sqrt(pi)) e_0
inline std::vector<double> kernel_mode(const YGrid& g) {
    std::vector<double> m(g.size());
    for (std::size_t j = 0; j < m.size(); ++j) {
        const double y = g.y(j);
        m[j] = y * std::exp(-y * y / 8.0);
    }
    return m;
}
inline const double kKernelNorm = std::sqrt(2.0 * kSqrtPi);

class SpectralBasis {
public:
    SpectralBasis(const YGrid& g, std::size_t n_modes) : grid_(g) {
        if (n_modes == 0) throw std::invalid_argument("SpectralBasis: n_modes must be positive");
        modes_.reserve(n_modes);
        for (std::size_t n = 0; n < n_modes; ++n) modes_.push_back(eigenfunction(n, g));
    }

    const YGrid& grid() const { return grid_; }
    std::size_t n_modes() const { return modes_.size(); }
    const std::vector<double>& mode(std::size_t n) const {
        if (n >= modes_.size()) throw std::out_of_range("SpectralBasis: mode index beyond n_modes");
        return modes_[n];
    }

    double inner(std::span<const double> f, std::span<const double> h) const {
        return num::trapezoid_product(f, h, grid_.dy);
    }

    std::vector<double> project(std::span<const double> f, std::size_t count) const {
        count = std::min(count, modes_.size());
        std::vector<double> c(count);
        for (std::size_t n = 0; n < count; ++n) c[n] = inner(f, modes_[n]);
        return c;
    }

    std::vector<double> synthesize(std::span<const double> c) const {
        std::vector<double> f(grid_.size(), 0.0);
        for (std::size_t n = 0; n < c.size() && n < modes_.size(); ++n)
            for (std::size_t j = 0; j < f.size(); ++j) f[j] += c[n] * modes_[n][j];
        return f;
    }

    std::vector<std::vector<double>> gram(std::size_t count) const {
        count = std::min(count, modes_.size());
        std::vector<std::vector<double>> G(count, std::vector<double>(count));
        for (std::size_t i = 0; i < count; ++i)
            for (std::size_t j = 0; j < count; ++j) G[i][j] = inner(modes_[i], modes_[j]);
        return G;
    }

private:
    YGrid grid_;
    std::vector<std::vector<double>> modes_;
};

// M phi at interior nodes, zero at both ends.
inline std::vector<double> apply_M(std::span<const double> phi, const YGrid& g,
                                   FdOrder order = FdOrder::fourth) {
    if (phi.size() != g.size()) throw std::invalid_argument("apply_M: size mismatch");
    const auto D2 = num::make_diff_rows(g.ny, g.dy, 2, int(order));
    std::vector<double> f(phi.begin(), phi.end());
    std::vector<double> out(g.size(), 0.0);
    for (std::size_t j = 1; j < g.ny; ++j) out[j] = -D2.apply(f, j) + potential(g.y(j)) * f[j];
    return out;
}

inline std::vector<double> derivative(std::span<const double> phi, const YGrid& g, int accuracy = 6) {
    const auto D1 = num::make_diff_rows(g.ny, g.dy, 1, accuracy);
    std::vector<double> f(phi.begin(), phi.end());
    std::vector<double> out(g.size());
    for (std::size_t j = 0; j <= g.ny; ++j) out[j] = D1.apply(f, j);
    return out;
}

// Q(phi) = int (phi')^2 + (y^2/16 - 3/4) phi^2 dy
inline double quadratic_form_Q(std::span<const double> phi, const YGrid& g) {
    const auto dphi = derivative(phi, g, 6);
    std::vector<double> integrand(g.size());
    for (std::size_t j = 0; j < integrand.size(); ++j)
        integrand[j] = dphi[j] * dphi[j] + potential(g.y(j)) * phi[j] * phi[j];
    return num::trapezoid(integrand, g.dy);
}

inline double l2(std::span<const double> phi, const YGrid& g) { return num::l2_norm(phi, g.dy); }

// W_y(tau, 0), fourth-order one-sided.
inline double slope_correspondence(const SelfSimilarField& W) {
    const auto& w = W.values;
    if (w.size() < 5) throw std::invalid_argument("slope_correspondence: need >= 5 nodes");
    return (-25.0 * w[0] + 48.0 * w[1] - 36.0 * w[2] + 16.0 * w[3] - 3.0 * w[4]) / (12.0 * W.grid.dy);
}

inline SelfSimilarField to_selfsimilar(const pde::Field& f, const YGrid& g) {
    const double s = std::sqrt(1.0 + f.time);
    const double tau = std::log1p(f.time);
    if (g.y_max * s > f.grid.x_max * (1.0 + 1e-12))
        throw std::out_of_range("to_selfsimilar: loss of support, y grid reaches x = " +
                                std::to_string(g.y_max * s) + " beyond x_max = " +
                                std::to_string(f.grid.x_max));
    SelfSimilarField W{tau, g, std::vector<double>(g.size(), 0.0)};
    const double pre = std::exp(-0.5 * tau);
    for (std::size_t j = 1; j < g.size(); ++j) {
        const double y = g.y(j);
        const double x = std::min(y * s, f.grid.x_max);
        const double v = num::cubic_interp(f.values, f.grid.dx, x);
        W.values[j] = pre * std::exp(y * y / 8.0 + x) * v;
    }
    W.values.back() = 0.0;
    return W;
}

// Inverse map onto a physical grid; nodes beyond the y grid's reach are set to 0.
inline pde::Field to_physical(const SelfSimilarField& W, const pde::SpatialGrid& grid) {
    const double t = std::expm1(W.tau);
    const double s = std::sqrt(1.0 + t);
    pde::Field f{grid, std::vector<double>(grid.nx + 1, 0.0), t};
    for (std::size_t i = 1; i < grid.nx; ++i) {
        const double x = grid.x(i);
        const double y = x / s;
        if (y >= W.grid.y_max) break;
        const double w = num::cubic_interp(W.values, W.grid.dy, y);
        f.values[i] = std::exp(0.5 * W.tau - y * y / 8.0 - x) * w;
    }
    return f;
}

// Physical mass int_0^inf v dx evaluated from W by Simpson in x.
inline double selfsimilar_mass(const SelfSimilarField& W, double x_cap = 60.0, double hx = 0.005) {
    const double s = std::exp(0.5 * W.tau);
    const double x_end = std::min(x_cap, W.grid.y_max * s);
    auto n = static_cast<std::size_t>(std::ceil(x_end / hx));
    if (n % 2) ++n;
    const double h = x_end / double(n);
    auto v_at = [&](double x) {
        const double y = std::min(x / s, W.grid.y_max);
        return std::exp(-x - y * y / 8.0) * s * num::cubic_interp(W.values, W.grid.dy, y);
    };
    double acc = v_at(0.0) + v_at(x_end);
    for (std::size_t i = 1; i < n; ++i) acc += (i % 2 ? 4.0 : 2.0) * v_at(double(i) * h);
    return acc * h / 3.0;
}

struct SelfSimilarConfig {
    double dtau = 1e-3;
    double sample_dtau = 0.025;
    std::size_t startup_steps = 2;
    FdOrder order = FdOrder::fourth;
    double forcing_scale = 1.0;  // 0 switches the drift forcing off
};

namespace detail {

// Discrete generator pieces: W_tau = -(M - a (D1 - y/4) - b) W on interior nodes.
struct Generator {
    YGrid g;
    num::DiffRows D2, D1;
    std::vector<double> V, y4;

    Generator(const YGrid& grid, FdOrder order)
        : g(grid),
          D2(num::make_diff_rows(grid.ny, grid.dy, 2, int(order))),
          D1(num::make_diff_rows(grid.ny, grid.dy, 1, int(order))) {
        V.resize(g.size());
        y4.resize(g.size());
        for (std::size_t j = 0; j < g.size(); ++j) {
            V[j] = potential(g.y(j));
            y4[j] = 0.25 * g.y(j);
        }
    }

    int bandwidth() const {
        std::size_t bw = 0;
        for (std::size_t j = 1; j < g.ny; ++j) {
            bw = std::max(bw, j - std::min(j, std::min(D2.start[j], D1.start[j])));
            bw = std::max(bw, D2.start[j] + D2.w[j].size() - 1 - j);
            bw = std::max(bw, D1.start[j] + D1.w[j].size() - 1 - j);
        }
        return int(bw);
    }

    // out = A W
    void apply(const std::vector<double>& w, double a, double b, std::vector<double>& out) const {
        out.assign(g.size(), 0.0);
        for (std::size_t j = 1; j < g.ny; ++j)
            out[j] = -D2.apply(w, j) + (V[j] + a * y4[j] - b) * w[j] - a * D1.apply(w, j);
    }

    // I + h A with identity boundary rows
    BandedMatrix implicit(double h, double a, double b, int bw) const {
        BandedMatrix A(g.size(), bw, bw);
        A(0, 0) = 1.0;
        A(g.ny, g.ny) = 1.0;
        for (std::size_t j = 1; j < g.ny; ++j) {
            for (std::size_t k = 0; k < D2.w[j].size(); ++k) A(j, D2.start[j] + k) -= h * D2.w[j][k];
            for (std::size_t k = 0; k < D1.w[j].size(); ++k) A(j, D1.start[j] + k) -= h * a * D1.w[j][k];
            A(j, j) += 1.0 + h * (V[j] + a * y4[j] - b);
        }
        return A;
    }
};

inline void check_finite(const std::vector<double>& w, double tau) {
    for (double v : w)
        if (!std::isfinite(v)) throw NumericalFailure("non-finite value in self-similar field", tau);
}

}  // namespace detail

// Crank-Nicolson in tau with forcing coefficients at the half step. The returned
// trajectory starts with W0 and holds one snapshot per sample_dtau, ending at tau_end.
inline std::vector<SelfSimilarField> evolve_W(const SelfSimilarField& W0, double tau_end,
                                              const drift::DriftExpansion& d,
                                              const SelfSimilarConfig& cfg = {}) {
    if (!(tau_end > W0.tau)) throw std::invalid_argument("evolve_W: tau_end must exceed W0.tau");
    if (!(cfg.dtau > 0.0)) throw std::invalid_argument("evolve_W: dtau must be positive");
    const detail::Generator gen(W0.grid, cfg.order);
    const int bw = gen.bandwidth();
    const auto n = static_cast<std::size_t>(std::ceil((tau_end - W0.tau) / cfg.dtau - 1e-9));
    const double h = (tau_end - W0.tau) / double(n);
    const auto every = std::max<std::size_t>(1, std::size_t(std::llround(cfg.sample_dtau / h)));

    auto coeffs = [&](double tau) {
        const auto f = drift::selfsimilar_forcing(tau, d);
        return std::pair{cfg.forcing_scale * f.a, cfg.forcing_scale * f.b};
    };

    std::vector<SelfSimilarField> traj;
    traj.reserve(n / every + 2);
    traj.push_back(W0);
    std::vector<double> w = W0.values, Aw, rhs;
    w.front() = 0.0;
    w.back() = 0.0;
    double tau = W0.tau;
    for (std::size_t k = 1; k <= n; ++k) {
        if (k <= cfg.startup_steps) {
            for (int half = 1; half <= 2; ++half) {
                const auto [a, b] = coeffs(tau + 0.5 * h * half);
                BandedMatrix A = gen.implicit(0.5 * h, a, b, bw);
                rhs = w;
                rhs.front() = rhs.back() = 0.0;
                A.solve(rhs);
                w.swap(rhs);
            }
        } else {
            const auto [a, b] = coeffs(tau + 0.5 * h);
            gen.apply(w, a, b, Aw);
            rhs.resize(w.size());
            for (std::size_t j = 0; j < w.size(); ++j) rhs[j] = w[j] - 0.5 * h * Aw[j];
            rhs.front() = rhs.back() = 0.0;
            BandedMatrix A = gen.implicit(0.5 * h, a, b, bw);
            A.solve(rhs);
            w.swap(rhs);
        }
        tau = k == n ? tau_end : W0.tau + double(k) * h;
        detail::check_finite(w, tau);
        if (k % every == 0 || k == n) traj.push_back({tau, W0.grid, w});
    }
    return traj;
}

// W(0, y) for initial data v0: e^{y^2/8} e^{y} v0(y), half weight at indicator jumps.
inline SelfSimilarField initial_W(const pde::InitialData& v0, const YGrid& g) {
    SelfSimilarField W{0.0, g, std::vector<double>(g.size(), 0.0)};
    const double tol = 1e-9 * g.dy;
    for (std::size_t j = 1; j < g.ny; ++j) {
        const double y = g.y(j);
        double v = v0(y);
        if (v0.kind == pde::InitialKind::indicator &&
            (std::abs(y - v0.a) < tol || std::abs(y - v0.b) < tol))
            v = 0.5;
        W.values[j] = std::exp(y * y / 8.0 + y) * v;
    }
    return W;
}

struct Decomposition {
    double alpha = 0.0;
    std::vector<double> g_part;     // e^{-tau/2} g
    std::vector<double> remainder;  // R
    double R_norm = 0.0;
    double R_slope0 = 0.0;
};

// R = W - alpha y e^{-y^2/8} - e^{-tau/2} g
inline Decomposition decompose(const SelfSimilarField& W, double alpha, std::span<const double> g) {
    if (g.size() != W.values.size()) throw std::invalid_argument("decompose: g size mismatch");
    Decomposition D;
    D.alpha = alpha;
    const double e = std::exp(-0.5 * W.tau);
    const auto mode = kernel_mode(W.grid);
    D.g_part.resize(g.size());
    D.remainder.resize(g.size());
    for (std::size_t j = 0; j < g.size(); ++j) {
        D.g_part[j] = e * g[j];
        D.remainder[j] = W.values[j] - alpha * mode[j] - D.g_part[j];
    }
    D.R_norm = l2(D.remainder, W.grid);
    D.R_slope0 = std::abs(slope_correspondence({W.tau, W.grid, D.remainder}));
    return D;
}

// alpha from the e_0 projection, removing the e^{-tau/2} <g, e_0> contribution;
// g_unit is the correction profile for alpha = 1 (g is linear in alpha).
inline double alpha_from_projection(const SelfSimilarField& W, const SpectralBasis& basis,
                                    std::span<const double> g_unit) {
    const double p = basis.inner(W.values, basis.mode(0));
    const double gp = basis.inner(g_unit, basis.mode(0));
    return p / (kKernelNorm + std::exp(-0.5 * W.tau) * gp);
}

// int y e^{y} v0 dy and int xi v0 dxi; the first is <W(0), y e^{-y^2/8}>.
struct InitialMoments {
    double weighted;
    double plain;
};
inline InitialMoments initial_moments(const pde::InitialData& v0, double hx = 1e-4) {
    const double lo = v0.a, hi = v0.b;
    auto n = static_cast<std::size_t>(std::ceil((hi - lo) / hx));
    if (n % 2) ++n;
    const double h = (hi - lo) / double(n);
    double s1 = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i <= n; ++i) {
        const double x = lo + double(i) * h;
        const double c = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        const double v = v0.kind == pde::InitialKind::indicator ? 1.0 : v0(x);
        s1 += c * x * std::exp(x) * v;
        s2 += c * x * v;
    }
    return {s1 * h / 3.0, s2 * h / 3.0};
}

inline void write_trajectory_csv(const std::string& path, const std::vector<SelfSimilarField>& traj,
                                 const SpectralBasis& basis, double alpha,
                                 std::span<const double> g_unit) {
    std::FILE* fp = std::fopen(path.c_str(), "w");
    if (!fp) throw std::runtime_error("cannot open " + path);
    std::fprintf(fp, "tau");
    for (int n = 0; n < 8; ++n) std::fprintf(fp, ",coef_e%d", n);
    std::fprintf(fp, ",W_slope0,R_norm,R_slope0\n");
    std::vector<double> g(g_unit.begin(), g_unit.end());
    for (auto& v : g) v *= alpha;
    for (const auto& W : traj) {
        const auto c = basis.project(W.values, 8);
        const auto D = decompose(W, alpha, g);
        std::fprintf(fp, "%.17g", W.tau);
        for (int n = 0; n < 8; ++n) std::fprintf(fp, ",%.17g", n < int(c.size()) ? c[n] : 0.0);
        std::fprintf(fp, ",%.17g,%.17g,%.17g\n", slope_correspondence(W), D.R_norm, D.R_slope0);
    }
    std::fclose(fp);
}

}  // namespace critdrift::osc
