#pragma once

// Branching Brownian motion with constant drift, killed at the origin:
// particles move by dY = c dt + sqrt(2) dW and split in two at rate 1, so
// E sum_i v0(Y_t^i) solves v_t = v_xx + c v_x + v, v(t, 0) = 0.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <limits>
#include <random>
#include <stdexcept>
#include <thread>
#include <vector>

#include "common.hpp"

namespace critdrift::mc {

struct McConfig {
    double drift = 2.0;
    double branch_rate = 1.0;
    double dt = 1e-3;
    std::size_t n_replicas = 10000;
    std::uint64_t seed = 1;
    bool bridge_correction = true;
    bool absorption = true;
    std::size_t population_cap = 10'000'000;
    unsigned threads = 0;  // 0: hardware concurrency

    void validate() const {
        if (!(dt > 0.0)) throw std::invalid_argument("McConfig: dt must be positive");
        if (!(branch_rate >= 0.0)) throw std::invalid_argument("McConfig: negative branch rate");
        if (n_replicas == 0) throw std::invalid_argument("McConfig: n_replicas must be positive");
        if (!std::isfinite(drift)) throw std::invalid_argument("McConfig: drift must be finite");
    }
};

struct PopulationState {
    std::vector<double> positions;
    double time = 0.0;
};

using Stream = std::mt19937_64;

// Independent stream for replica r; depends only on (seed, r).
inline Stream replica_stream(std::uint64_t seed, std::uint64_t r) {
    std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32), std::uint32_t(r),
                      std::uint32_t(r >> 32), 0x6d63u};
    return Stream(seq);
}

// Optional per-replica diagnostics.
struct ReplicaStats {
    std::vector<double> waiting_times;  // every drawn gap between branchings, recorded when drawn
    std::size_t max_population = 0;
};

namespace detail {

constexpr std::int64_t kNever = std::numeric_limits<std::int64_t>::max();

// Steps until the next branching: P(K > k) = exp(-rate k h).
inline std::int64_t draw_wait(Stream& rng, double rate, double h) {
    if (rate <= 0.0) return kNever;
    std::exponential_distribution<double> e(rate);
    const double k = std::ceil(e(rng) / h);
    return k < 9e18 ? std::max<std::int64_t>(1, std::int64_t(k)) : kNever;
}

}  // namespace detail

inline PopulationState simulate_replica(double x0, double t_end, const McConfig& cfg, Stream& rng,
                                        ReplicaStats* stats = nullptr) {
    cfg.validate();
    if (!(x0 > 0.0)) throw std::invalid_argument("simulate_replica: x0 must be positive");
    if (!(t_end >= 0.0)) throw std::invalid_argument("simulate_replica: negative t_end");
    PopulationState st{{x0}, 0.0};
    if (t_end == 0.0) return st;
    const auto n = static_cast<std::int64_t>(std::ceil(t_end / cfg.dt - 1e-9));
    const double h = t_end / double(n);
    const double sd = std::sqrt(2.0 * h);
    const double shift = cfg.drift * h;
    // crossing probability exp(-x_a x_b / h) is below e^{-40} past this product
    const double bridge_cut = 40.0 * h;
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    // recording at draw time keeps waits that outlast t_end in the sample
    auto draw = [&] {
        const auto k = detail::draw_wait(rng, cfg.branch_rate, h);
        if (stats && k != detail::kNever) stats->waiting_times.push_back(double(k) * h);
        return k;
    };
    auto& pos = st.positions;
    std::vector<std::int64_t> wait{draw()};
    for (std::int64_t k = 1; k <= n; ++k) {
        for (std::size_t i = 0; i < pos.size();) {
            const double xa = pos[i];
            const double xb = xa + shift + sd * normal(rng);
            bool dead = false;
            if (cfg.absorption) {
                if (xb <= 0.0) {
                    dead = true;
                } else if (cfg.bridge_correction) {
                    const double prod = xa * xb;
                    if (prod < bridge_cut && unif(rng) < std::exp(-prod / h)) dead = true;
                }
            }
            if (!dead) {
                pos[i++] = xb;
                continue;
            }
            pos[i] = pos.back();
            wait[i] = wait.back();
            pos.pop_back();
            wait.pop_back();
        }
        // branching at the end of the step; children start moving next step
        const std::size_t alive = pos.size();
        for (std::size_t i = 0; i < alive; ++i) {
            if (--wait[i] != 0) continue;
            wait[i] = draw();
            pos.push_back(pos[i]);
            wait.push_back(draw());
        }
        if (pos.size() > cfg.population_cap)
            throw std::runtime_error("simulate_replica: population cap exceeded");
        if (stats) stats->max_population = std::max(stats->max_population, pos.size());
        if (pos.empty()) break;
    }
    st.time = t_end;
    return st;
}

struct McEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t replicas = 0;
};

namespace detail {

// Runs f(r) for every replica and merges per-replica values in index order, so the
// result does not depend on the thread count.
template <class F>
McEstimate run_replicas(const McConfig& cfg, F&& f) {
    std::vector<double> vals(cfg.n_replicas);
    unsigned nt = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
    nt = unsigned(std::min<std::size_t>(nt, cfg.n_replicas));
    std::atomic<std::size_t> next{0};
    std::exception_ptr err;
    std::atomic<bool> failed{false};
    auto worker = [&] {
        try {
            for (std::size_t r; !failed && (r = next.fetch_add(1)) < cfg.n_replicas;) vals[r] = f(r);
        } catch (...) {
            if (!failed.exchange(true)) err = std::current_exception();
        }
    };
    if (nt <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned k = 0; k < nt; ++k) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (err) std::rethrow_exception(err);
    double s = 0.0, s2 = 0.0;
    for (double v : vals) {
        s += v;
        s2 += v * v;
    }
    const double n = double(cfg.n_replicas);
    McEstimate e;
    e.mean = s / n;
    const double var = n > 1 ? std::max(0.0, (s2 - n * e.mean * e.mean) / (n - 1.0)) : 0.0;
    e.std_error = std::sqrt(var / n);
    e.replicas = cfg.n_replicas;
    return e;
}

}  // namespace detail

// Mean over replicas of sum_i v0(Y_t^i).
template <class Payoff>
McEstimate estimate(double x0, double t_end, Payoff&& v0, const McConfig& cfg) {
    cfg.validate();
    return detail::run_replicas(cfg, [&](std::size_t r) {
        auto rng = replica_stream(cfg.seed, r);
        const auto st = simulate_replica(x0, t_end, cfg, rng);
        double s = 0.0;
        for (double x : st.positions) s += v0(x);
        return s;
    });
}

// Fraction of replicas with at least one particle alive at t_end.
inline McEstimate survival_probability(double x0, double t_end, const McConfig& cfg) {
    cfg.validate();
    return detail::run_replicas(cfg, [&](std::size_t r) {
        auto rng = replica_stream(cfg.seed, r);
        return simulate_replica(x0, t_end, cfg, rng).positions.empty() ? 0.0 : 1.0;
    });
}

// Kolmogorov-Smirnov distance between a sample and Exponential(rate).
inline double ks_exponential(std::vector<double> xs, double rate = 1.0) {
    if (xs.empty()) throw std::invalid_argument("ks_exponential: empty sample");
    std::sort(xs.begin(), xs.end());
    const double n = double(xs.size());
    double d = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double F = 1.0 - std::exp(-rate * xs[i]);
        d = std::max({d, F - double(i) / n, double(i + 1) / n - F});
    }
    return d;
}

// Asymptotic KS critical value at significance 0.01.
inline double ks_critical_001(std::size_t n) { return 1.6276 / std::sqrt(double(n)); }

}  // namespace critdrift::mc
