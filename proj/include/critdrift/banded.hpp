#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "common.hpp"

namespace critdrift {

// Square band matrix with kl sub- and ku super-diagonals, row-major band storage.
// LU is done in place without pivoting; the systems assembled here are
// diagonally dominant up to O(dt) terms.
class BandedMatrix {
public:
    BandedMatrix(std::size_t n, int kl, int ku)
        : n_(n), kl_(kl), ku_(ku), w_(kl + ku + 1), a_(n * w_, 0.0) {}

    std::size_t size() const { return n_; }
    int kl() const { return kl_; }
    int ku() const { return ku_; }

    double& operator()(std::size_t i, std::size_t j) { return a_[i * w_ + (j + kl_ - i)]; }
    double operator()(std::size_t i, std::size_t j) const { return a_[i * w_ + (j + kl_ - i)]; }

    bool in_band(std::size_t i, std::size_t j) const {
        return j + kl_ >= i && j <= i + ku_;
    }

    void set_zero() { std::fill(a_.begin(), a_.end(), 0.0); }

    std::vector<double> multiply(const std::vector<double>& x) const {
        std::vector<double> y(n_, 0.0);
        for (std::size_t i = 0; i < n_; ++i) {
            const std::size_t j0 = i >= std::size_t(kl_) ? i - kl_ : 0;
            const std::size_t j1 = std::min(n_ - 1, i + ku_);
            double s = 0.0;
            for (std::size_t j = j0; j <= j1; ++j) s += (*this)(i, j) * x[j];
            y[i] = s;
        }
        return y;
    }

    void factorize() {
        for (std::size_t k = 0; k < n_; ++k) {
            const double p = (*this)(k, k);
            if (!std::isfinite(p) || std::abs(p) < 1e-300)
                throw NumericalFailure("banded LU breakdown at row " + std::to_string(k));
            const std::size_t i1 = std::min(n_ - 1, k + kl_);
            const std::size_t j1 = std::min(n_ - 1, k + ku_);
            for (std::size_t i = k + 1; i <= i1; ++i) {
                const double l = (*this)(i, k) / p;
                (*this)(i, k) = l;
                if (l == 0.0) continue;
                for (std::size_t j = k + 1; j <= j1; ++j) (*this)(i, j) -= l * (*this)(k, j);
            }
        }
        factored_ = true;
    }

    // Solves in place; factorizes on first use.
    void solve(std::vector<double>& b) {
        if (!factored_) factorize();
        for (std::size_t i = 1; i < n_; ++i) {
            const std::size_t j0 = i >= std::size_t(kl_) ? i - kl_ : 0;
            double s = b[i];
            for (std::size_t j = j0; j < i; ++j) s -= (*this)(i, j) * b[j];
            b[i] = s;
        }
        for (std::size_t ii = n_; ii-- > 0;) {
            const std::size_t j1 = std::min(n_ - 1, ii + ku_);
            double s = b[ii];
            for (std::size_t j = ii + 1; j <= j1; ++j) s -= (*this)(ii, j) * b[j];
            b[ii] = s / (*this)(ii, ii);
        }
    }

private:
    std::size_t n_;
    int kl_, ku_;
    std::size_t w_;
    std::vector<double> a_;
    bool factored_ = false;
};

}  // namespace critdrift
