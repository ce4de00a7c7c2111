#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "banded.hpp"
#include "common.hpp"
#include "drift_schedule.hpp"
#include "numerics.hpp"

// Moving-frame equation v_t = v_xx + Xdot(t) v_x + v on [0, x_max], v = 0 at both ends.
namespace critdrift::pde {

struct SpatialGrid {
    double x_max = 60.0;
    std::size_t nx = 6000;
    double dx = 0.01;

    static SpatialGrid make(double x_max, double dx) {
        if (!(x_max > 0.0) || !(dx > 0.0) || dx > x_max)
            throw std::invalid_argument("SpatialGrid: need 0 < dx <= x_max");
        const auto nx = static_cast<std::size_t>(std::llround(x_max / dx));
        if (nx < 3) throw std::invalid_argument("SpatialGrid: fewer than 3 cells");
        return {x_max, nx, x_max / double(nx)};
    }
    double x(std::size_t i) const { return double(i) * dx; }
};

struct Field {
    SpatialGrid grid;
    std::vector<double> values;
    double time = 0.0;
};

enum class InitialKind { indicator, smooth_bump };

struct InitialData {
    InitialKind kind = InitialKind::indicator;
    double a = 1.0;
    double b = 2.0;

    // Pointwise value; the indicator takes 1/2 exactly at a and b.
    double operator()(double x) const {
        if (kind == InitialKind::indicator) {
            if (x == a || x == b) return 0.5;
            return (x > a && x < b) ? 1.0 : 0.0;
        }
        const double m = 0.5 * (a + b), h = 0.5 * (b - a);
        const double r = (x - m) / h;
        if (std::abs(r) >= 1.0) return 0.0;
        return std::exp(1.0 - 1.0 / (1.0 - r * r));
    }
};

// Scheme knobs. The coefficient scales exist so tests can switch individual terms off.
struct SolverConfig {
    double dt = 0.01;
    std::size_t sample_every = 1;
    std::size_t startup_steps = 2;  // CN steps replaced by two backward-Euler half steps
    double diffusion = 1.0;
    double advection = 1.0;
    double growth = 1.0;
};

struct ObservableSeries {
    std::vector<double> times;
    std::vector<double> mass;
    std::vector<double> slope0;

    std::size_t size() const { return times.size(); }
    void push(double t, double m, double s) {
        times.push_back(t);
        mass.push_back(m);
        slope0.push_back(s);
    }
};

inline Field initial_condition(const InitialData& v0, const SpatialGrid& grid) {
    if (!(v0.a > 0.0 && v0.a < v0.b && v0.b < grid.x_max))
        throw std::invalid_argument("initial_condition: support must satisfy 0 < a < b < x_max");
    Field f{grid, std::vector<double>(grid.nx + 1, 0.0), 0.0};
    const double tol = 1e-9 * grid.dx;
    for (std::size_t i = 1; i < grid.nx; ++i) {
        const double x = grid.x(i);
        if (v0.kind == InitialKind::indicator &&
            (std::abs(x - v0.a) < tol || std::abs(x - v0.b) < tol))
            f.values[i] = 0.5;
        else
            f.values[i] = v0(x);
    }
    return f;
}

inline double mass(const Field& f) { return num::trapezoid(f.values, f.grid.dx); }

inline double boundary_slope(const Field& f) {
    if (f.grid.nx < 3) throw std::invalid_argument("boundary_slope: nx < 3");
    const auto& v = f.values;
    return (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * f.grid.dx);
}

namespace detail {

// Row i of the spatial operator as (offset, weight) contributions, offsets in [-2, 2].
struct Stencil {
    double w[5] = {0, 0, 0, 0, 0};  // index k <-> offset k-2
};

inline Stencil operator_row(std::size_t i, std::size_t nx, double dx, double speed,
                            const SolverConfig& cfg) {
    Stencil s;
    const double d2 = cfg.diffusion / (dx * dx);
    s.w[1] += d2;
    s.w[2] += -2.0 * d2 + cfg.growth;
    s.w[3] += d2;
    const double c = cfg.advection * speed;
    if (c > 0.0) {
        if (i + 2 <= nx) {
            s.w[2] += -3.0 * c / (2.0 * dx);
            s.w[3] += 4.0 * c / (2.0 * dx);
            s.w[4] += -c / (2.0 * dx);
        } else {
            s.w[2] -= c / dx;
            s.w[3] += c / dx;
        }
    } else if (c < 0.0) {
        if (i >= 2) {
            s.w[2] += 3.0 * c / (2.0 * dx);
            s.w[1] += -4.0 * c / (2.0 * dx);
            s.w[0] += c / (2.0 * dx);
        } else {
            s.w[2] += c / dx;
            s.w[1] -= c / dx;
        }
    }
    return s;
}

template <drift::DriftSchedule D>
void apply_operator(const std::vector<double>& v, std::vector<double>& out, double dx,
                    double t, const SolverConfig& cfg, const D& d) {
    const std::size_t nx = v.size() - 1;
    const double speed = front_speed(t, d);
    out.assign(nx + 1, 0.0);
    for (std::size_t i = 1; i < nx; ++i) {
        const Stencil s = operator_row(i, nx, dx, speed, cfg);
        double acc = 0.0;
        for (int k = 0; k < 5; ++k) {
            const long j = long(i) + k - 2;
            if (s.w[k] != 0.0 && j >= 0 && j <= long(nx)) acc += s.w[k] * v[std::size_t(j)];
        }
        out[i] = acc;
    }
}

// (I - h L(t)) with identity boundary rows.
template <drift::DriftSchedule D>
BandedMatrix implicit_matrix(std::size_t nx, double dx, double t, double h,
                             const SolverConfig& cfg, const D& d) {
    BandedMatrix A(nx + 1, 2, 2);
    const double speed = front_speed(t, d);
    A(0, 0) = 1.0;
    A(nx, nx) = 1.0;
    for (std::size_t i = 1; i < nx; ++i) {
        const Stencil s = operator_row(i, nx, dx, speed, cfg);
        for (int k = 0; k < 5; ++k) {
            const long j = long(i) + k - 2;
            if (j < 0 || j > long(nx)) continue;
            A(i, std::size_t(j)) += (std::size_t(j) == i ? 1.0 : 0.0) - h * s.w[k];
        }
    }
    return A;
}

inline void check_finite(const std::vector<double>& v, double t) {
    for (double x : v)
        if (!std::isfinite(x)) throw NumericalFailure("non-finite value in physical field", t);
}

template <drift::DriftSchedule D>
void backward_euler(Field& f, double h, const SolverConfig& cfg, const D& d) {
    const double t1 = f.time + h;
    BandedMatrix A = implicit_matrix(f.grid.nx, f.grid.dx, t1, h, cfg, d);
    std::vector<double> rhs = f.values;
    rhs.front() = 0.0;
    rhs.back() = 0.0;
    A.solve(rhs);
    f.values = std::move(rhs);
    f.time = t1;
    check_finite(f.values, f.time);
}

template <drift::DriftSchedule D>
void crank_nicolson(Field& f, double h, const SolverConfig& cfg, const D& d) {
    std::vector<double> Lv;
    apply_operator(f.values, Lv, f.grid.dx, f.time, cfg, d);
    std::vector<double> rhs(f.values.size());
    for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] = f.values[i] + 0.5 * h * Lv[i];
    rhs.front() = 0.0;
    rhs.back() = 0.0;
    const double t1 = f.time + h;
    BandedMatrix A = implicit_matrix(f.grid.nx, f.grid.dx, t1, 0.5 * h, cfg, d);
    A.solve(rhs);
    f.values = std::move(rhs);
    f.time = t1;
    check_finite(f.values, f.time);
}

}  // namespace detail

// One trapezoidal step of size cfg.dt.
template <drift::DriftSchedule D>
Field step(const Field& f, const SolverConfig& cfg, const D& d) {
    if (!(cfg.dt > 0.0)) throw std::invalid_argument("step: dt must be positive");
    if (f.values.size() != f.grid.nx + 1) throw std::invalid_argument("step: field size mismatch");
    Field g = f;
    detail::crank_nicolson(g, cfg.dt, cfg, d);
    return g;
}

struct EvolveResult {
    Field field;
    ObservableSeries series;
};

// Uniform steps of size <= min(cfg.dt, dx) landing exactly on t_end.
template <drift::DriftSchedule D>
EvolveResult evolve(const Field& f0, double t_end, const SolverConfig& cfg, const D& d) {
    if (!(cfg.dt > 0.0)) throw std::invalid_argument("evolve: dt must be positive");
    if (t_end < f0.time) throw std::invalid_argument("evolve: t_end before initial time");
    EvolveResult r{f0, {}};
    r.series.push(f0.time, mass(f0), boundary_slope(f0));
    if (t_end == f0.time) return r;
    const double dt_max = std::min(cfg.dt, f0.grid.dx);
    const auto n = static_cast<std::size_t>(std::ceil((t_end - f0.time) / dt_max - 1e-9));
    const double h = (t_end - f0.time) / double(n);
    const std::size_t every = std::max<std::size_t>(1, cfg.sample_every);
    for (std::size_t k = 1; k <= n; ++k) {
        if (k <= cfg.startup_steps) {
            detail::backward_euler(r.field, 0.5 * h, cfg, d);
            detail::backward_euler(r.field, 0.5 * h, cfg, d);
        } else {
            detail::crank_nicolson(r.field, h, cfg, d);
        }
        if (k == n) r.field.time = t_end;
        if (k % every == 0 || k == n)
            r.series.push(r.field.time, mass(r.field), boundary_slope(r.field));
    }
    return r;
}

// Pointwise d(mass)/dt - (mass - slope0); central differences inside, one-sided
// second-order differences at the two ends.
inline std::vector<double> flux_residuals(const ObservableSeries& s) {
    const std::size_t n = s.size();
    std::vector<double> r(n, std::nan(""));
    if (n < 3) return r;
    const auto& t = s.times;
    const auto& m = s.mass;
    for (std::size_t k = 0; k < n; ++k) {
        double dm;
        if (k == 0 || k == n - 1) {
            const std::size_t a = k == 0 ? 0 : n - 3;
            // derivative of the quadratic through three samples, evaluated at t[k]
            const double t0 = t[a], t1 = t[a + 1], t2 = t[a + 2], x = t[k];
            dm = m[a] * ((x - t1) + (x - t2)) / ((t0 - t1) * (t0 - t2)) +
                 m[a + 1] * ((x - t0) + (x - t2)) / ((t1 - t0) * (t1 - t2)) +
                 m[a + 2] * ((x - t0) + (x - t1)) / ((t2 - t0) * (t2 - t1));
        } else {
            const double t0 = t[k - 1], t1 = t[k], t2 = t[k + 1];
            dm = m[k - 1] * (t1 - t2) / ((t0 - t1) * (t0 - t2)) +
                 m[k] * ((t1 - t0) + (t1 - t2)) / ((t1 - t0) * (t1 - t2)) +
                 m[k + 1] * (t1 - t0) / ((t2 - t0) * (t2 - t1));
        }
        r[k] = dm - (m[k] - s.slope0[k]);
    }
    return r;
}

inline double flux_identity_residual(const ObservableSeries& s) {
    if (s.size() < 3) throw std::invalid_argument("flux_identity_residual: need >= 3 samples");
    const auto r = flux_residuals(s);
    double worst = 0.0;
    for (std::size_t k = 1; k + 1 < r.size(); ++k) worst = std::max(worst, std::abs(r[k]));
    return worst;
}

inline void write_series_csv(const std::string& path, const ObservableSeries& s) {
    std::FILE* fp = std::fopen(path.c_str(), "w");
    if (!fp) throw std::runtime_error("cannot open " + path);
    const auto r = flux_residuals(s);
    std::fprintf(fp, "t,mass,slope0,flux_residual\n");
    for (std::size_t k = 0; k < s.size(); ++k)
        std::fprintf(fp, "%.17g,%.17g,%.17g,%.17g\n", s.times[k], s.mass[k], s.slope0[k], r[k]);
    std::fclose(fp);
}

}  // namespace critdrift::pde
