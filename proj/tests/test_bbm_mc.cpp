#include <gtest/gtest.h>

#include <cmath>

#include <critdrift/bbm_mc.hpp>

using namespace critdrift::mc;

namespace {
McConfig base(std::size_t n, std::uint64_t seed = 5) {
    McConfig c;
    c.n_replicas = n;
    c.seed = seed;
    return c;
}
double one(double) { return 1.0; }
double indicator12(double x) { return x > 1.0 && x < 2.0 ? 1.0 : 0.0; }
}  // namespace

TEST(Replica, ZeroHorizon) {
    auto rng = replica_stream(1, 0);
    const auto st = simulate_replica(0.7, 0.0, McConfig{}, rng);
    ASSERT_EQ(st.positions.size(), 1u);
    EXPECT_EQ(st.positions[0], 0.7);
    const auto e = estimate(1.5, 0.0, indicator12, base(100));
    EXPECT_EQ(e.mean, 1.0);
    EXPECT_EQ(e.std_error, 0.0);
    EXPECT_EQ(survival_probability(1.0, 0.0, base(50)).mean, 1.0);
}

TEST(Replica, RejectsBadInput) {
    auto rng = replica_stream(1, 0);
    EXPECT_THROW(simulate_replica(-1.0, 1.0, McConfig{}, rng), std::invalid_argument);
    McConfig c;
    c.dt = 0.0;
    EXPECT_THROW(simulate_replica(1.0, 1.0, c, rng), std::invalid_argument);
    c = McConfig{};
    c.population_cap = 5;
    c.absorption = false;
    EXPECT_THROW(simulate_replica(1.0, 8.0, c, rng), std::runtime_error);
}

TEST(Branching, YuleMeanCount) {
    for (double t : {1.0, 2.0, 3.0}) {
        auto c = base(10000, 17);
        c.absorption = false;
        const auto e = estimate(1.0, t, one, c);
        EXPECT_LT(std::abs(e.mean - std::exp(t)), 3.0 * e.std_error) << "t=" << t;
    }
}

TEST(Branching, WaitingTimesAreExponential) {
    auto c = base(1);
    c.absorption = false;
    ReplicaStats stats;
    for (std::uint64_t r = 0; r < 40 && stats.waiting_times.size() < 20000; ++r) {
        auto rng = replica_stream(3, r);
        simulate_replica(1.0, 4.0, c, rng, &stats);
    }
    ASSERT_GT(stats.waiting_times.size(), 1000u);
    EXPECT_LT(ks_exponential(stats.waiting_times), ks_critical_001(stats.waiting_times.size()));
    EXPECT_GT(stats.max_population, 1u);
}

TEST(Absorption, SurvivalMatchesReflectionPrinciple) {
    auto c = base(40000, 23);
    c.drift = 0.0;
    c.branch_rate = 0.0;
    for (double x0 : {0.5, 1.0}) {
        const double t = 1.0;
        const auto e = survival_probability(x0, t, c);
        EXPECT_LT(std::abs(e.mean - std::erf(x0 / std::sqrt(4.0 * t))), 3.0 * e.std_error) << x0;
    }
}

TEST(Absorption, StrongerPullKillsMore) {
    auto c3 = base(4000, 29), c2 = base(4000, 29);
    c3.drift = -3.0;
    c2.drift = -2.0;
    EXPECT_LT(survival_probability(1.0, 5.0, c3).mean, survival_probability(1.0, 5.0, c2).mean);
}

TEST(Absorption, KestenCriticalSurvivalDecays) {
    auto c = base(4000, 31);
    c.drift = -2.0;
    double prev = 1.0;
    for (double t : {1.0, 2.0, 4.0, 8.0}) {
        const double p = survival_probability(1.0, t, c).mean;
        EXPECT_LT(p, prev) << t;
        prev = p;
    }
}

TEST(Estimate, LinearInPayoff) {
    const auto c = base(2000, 41);
    const auto a = estimate(1.5, 1.0, indicator12, c);
    const auto b = estimate(1.5, 1.0, [](double x) { return 2.0 * indicator12(x); }, c);
    EXPECT_DOUBLE_EQ(b.mean, 2.0 * a.mean);
    EXPECT_DOUBLE_EQ(b.std_error, 2.0 * a.std_error);
}

TEST(Estimate, DeterministicAcrossThreadCounts) {
    auto c1 = base(3000, 99), c4 = base(3000, 99);
    c1.threads = 1;
    c4.threads = 4;
    const auto a = estimate(1.5, 1.0, indicator12, c1);
    const auto b = estimate(1.5, 1.0, indicator12, c4);
    EXPECT_EQ(a.mean, b.mean);
    EXPECT_EQ(a.std_error, b.std_error);
    EXPECT_EQ(a.replicas, 3000u);
}

TEST(Estimate, DtRefinementMovesLessThanOneStdError) {
    // acceptance configuration; the two estimates are independent, so the move is
    // measured against the standard error of their difference
    auto c = base(100000, 20240601);
    const auto coarse = estimate(1.5, 3.0, indicator12, c);
    c.dt = 5e-4;
    const auto fine = estimate(1.5, 3.0, indicator12, c);
    const double se = std::hypot(coarse.std_error, fine.std_error);
    EXPECT_LT(std::abs(fine.mean - coarse.mean), se) << coarse.mean << " vs " << fine.mean;
}

TEST(Streams, DependOnlyOnSeedAndIndex) {
    auto a = replica_stream(5, 3), b = replica_stream(5, 3), c = replica_stream(5, 4);
    const auto x = a();
    EXPECT_EQ(x, b());
    EXPECT_NE(x, c());
}
