#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace critdrift::num {

// Fornberg's recursion: weights of the m-th derivative at x0 from nodes x[0..n-1].
inline std::vector<double> fd_weights(double x0, const std::vector<double>& x, int m) {
    const int n = static_cast<int>(x.size());
    if (m >= n) throw std::invalid_argument("fd_weights: not enough nodes");
    std::vector<std::vector<double>> c(n, std::vector<double>(m + 1, 0.0));
    double c1 = 1.0, c4 = x[0] - x0;
    c[0][0] = 1.0;
    for (int i = 1; i < n; ++i) {
        const int mn = std::min(i, m);
        double c2 = 1.0;
        const double c5 = c4;
        c4 = x[i] - x0;
        for (int j = 0; j < i; ++j) {
            const double c3 = x[i] - x[j];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k)
                    c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for (int k = mn; k >= 1; --k) c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    std::vector<double> w(n);
    for (int i = 0; i < n; ++i) w[i] = c[i][m];
    return w;
}

// A derivative operator on a uniform grid of N+1 nodes, one stencil per row.
struct DiffRows {
    std::vector<std::size_t> start;
    std::vector<std::vector<double>> w;

    double apply(const std::vector<double>& f, std::size_t j) const {
        double s = 0.0;
        const auto& wj = w[j];
        for (std::size_t k = 0; k < wj.size(); ++k) s += wj[k] * f[start[j] + k];
        return s;
    }
};

// Derivative of order m with formal accuracy p (even). Rows whose centered stencil
// would leave the grid use a shifted window; second derivatives get one extra
// point there to keep the order.
inline DiffRows make_diff_rows(std::size_t N, double h, int m, int p) {
    const int half = (m + p - 1) / 2;
    const int centered = 2 * half + 1;
    DiffRows D;
    D.start.resize(N + 1);
    D.w.resize(N + 1);
    for (std::size_t j = 0; j <= N; ++j) {
        int width = centered;
        long s = long(j) - half;
        if (s < 0 || s + width - 1 > long(N)) {
            if (m >= 2) ++width;
            if (s < 0) s = 0;
            if (s + width - 1 > long(N)) s = long(N) - width + 1;
        }
        std::vector<double> xs(width);
        for (int k = 0; k < width; ++k) xs[k] = double(s + k - long(j));
        auto w = fd_weights(0.0, xs, m);
        double scale = 1.0;
        for (int q = 0; q < m; ++q) scale *= h;
        for (auto& v : w) v /= scale;
        D.start[j] = std::size_t(s);
        D.w[j] = std::move(w);
    }
    return D;
}

}  // namespace critdrift::num
