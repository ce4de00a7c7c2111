#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace critdrift::num {

inline double trapezoid(std::span<const double> f, double h) {
    if (f.size() < 2) return 0.0;
    double s = 0.5 * (f.front() + f.back());
    for (std::size_t i = 1; i + 1 < f.size(); ++i) s += f[i];
    return s * h;
}

inline double trapezoid_product(std::span<const double> f, std::span<const double> g, double h) {
    const std::size_t n = f.size();
    if (n < 2) return 0.0;
    double s = 0.5 * (f[0] * g[0] + f[n - 1] * g[n - 1]);
    for (std::size_t i = 1; i + 1 < n; ++i) s += f[i] * g[i];
    return s * h;
}

// Trapezoid with Gregory end corrections through third differences; fourth order
// for integrands that are smooth but not even about the end points.
inline double gregory(std::span<const double> f, double h) {
    const std::size_t n = f.size();
    if (n < 8) return trapezoid(f, h);
    double s = trapezoid(f, h) / h;
    static constexpr double c[3] = {1.0 / 12.0, -1.0 / 24.0, 19.0 / 720.0};
    // forward differences at the left end, backward at the right
    const double d1l = f[1] - f[0], d2l = f[2] - 2 * f[1] + f[0], d3l = f[3] - 3 * f[2] + 3 * f[1] - f[0];
    const double d1r = f[n - 1] - f[n - 2], d2r = f[n - 1] - 2 * f[n - 2] + f[n - 3],
                 d3r = f[n - 1] - 3 * f[n - 2] + 3 * f[n - 3] - f[n - 4];
    s += c[0] * (d1l - d1r) + c[1] * (d2l + d2r) + c[2] * (d3l - d3r);
    return s * h;
}

inline double gregory_product(std::span<const double> f, std::span<const double> g, double h) {
    std::vector<double> p(f.size());
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = f[i] * g[i];
    return gregory(p, h);
}

// Four-point Lagrange interpolation on a uniform grid starting at 0.
// Points at or beyond the last node are rejected; the caller decides the policy.
inline double cubic_interp(std::span<const double> f, double h, double x) {
    const std::size_t n = f.size();
    if (n < 4) throw std::invalid_argument("cubic_interp: need at least 4 nodes");
    const double s = x / h;
    if (s < 0.0 || s > double(n - 1)) throw std::out_of_range("cubic_interp: point outside grid");
    std::size_t i = static_cast<std::size_t>(s);
    if (i >= n - 1) return f[n - 1];
    const std::size_t i0 = std::min(i == 0 ? std::size_t(0) : i - 1, n - 4);
    const double u = s - double(i0);
    const double l0 = -(u - 1) * (u - 2) * (u - 3) / 6.0;
    const double l1 = u * (u - 2) * (u - 3) / 2.0;
    const double l2 = -u * (u - 1) * (u - 3) / 2.0;
    const double l3 = u * (u - 1) * (u - 2) / 6.0;
    return l0 * f[i0] + l1 * f[i0 + 1] + l2 * f[i0 + 2] + l3 * f[i0 + 3];
}

inline double l2_norm(std::span<const double> f, double h) {
    return std::sqrt(trapezoid_product(f, f, h));
}

inline double sup_norm(std::span<const double> f) {
    double m = 0.0;
    for (double v : f) m = std::max(m, std::abs(v));
    return m;
}

}  // namespace critdrift::num
