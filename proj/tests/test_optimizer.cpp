#include <cmath>

#include <gtest/gtest.h>

#include "qds/optimizer.hpp"
#include "support/generators.hpp"

using namespace qds;
using qds::testing::for_all;
using qds::testing::Gen;

namespace {

constexpr double kFieldPulses = 2e12;

ChannelParams at_distance(double km) {
    ChannelParams ch;
    ch.distance_km = km;
    return ch;
}

Evaluation concave(const SearchPoint& p) {
    Evaluation e;
    e.point = p;
    e.feasible = true;
    e.rate_bits_per_s = 10.0 - std::pow(p.mu - 0.437, 2) - std::pow(p.nu - 0.123, 2) - std::pow(p.p_mu - 0.71, 2) -
                        std::pow(p.p_z_tx - 0.83, 2);
    return e;
}

}  // namespace

TEST(ParamRange, Grid) {
    const ParamRange r{0.2, 0.8, 0.1};
    EXPECT_EQ(r.grid_size(), 7u);
    EXPECT_DOUBLE_EQ(r.grid_point(6), 0.8);
    EXPECT_EQ(ParamRange::fixed(0.3).grid_size(), 1u);
}

TEST(SearchSpace, GridKeepsDecoyBelowSignal) {
    const SearchSpace space;
    const auto grid = space.grid();
    EXPECT_FALSE(grid.empty());
    for (const auto& p : grid) {
        EXPECT_LT(p.nu, p.mu);
        EXPECT_TRUE(space.contains(p));
        EXPECT_EQ(p.p_z_tx, p.p_z_rx);
    }
}

TEST(SearchSpace, Validation) {
    SearchSpace space;
    space.p_mu = {0.5, 1.0, 0.1};
    EXPECT_THROW(space.validate(), std::invalid_argument);
    space = SearchSpace{};
    space.mu = ParamRange::fixed(0.1);
    space.nu = ParamRange::fixed(0.2);
    EXPECT_THROW(space.validate(), std::invalid_argument);
}

TEST(Optimize, SinglePointSpace) {
    SearchSpace space;
    space.mu = ParamRange::fixed(0.4);
    space.nu = ParamRange::fixed(0.15);
    space.p_mu = ParamRange::fixed(0.5);
    space.p_z_tx = ParamRange::fixed(0.7);
    space.p_z_rx = ParamRange::fixed(0.7);
    const OptimizeResult r = optimize(space, kFieldPulses, at_distance(103), SecurityParams{});
    EXPECT_EQ(r.best.point.mu, 0.4);
    EXPECT_EQ(r.best.point.nu, 0.15);
    EXPECT_EQ(r.best.point.p_mu, 0.5);
    EXPECT_EQ(r.best.point.p_z_tx, 0.7);
    const Evaluation direct = evaluate(r.best.point, kFieldPulses, at_distance(103), SecurityParams{});
    EXPECT_EQ(r.best.rate_bits_per_s, direct.rate_bits_per_s);
}

TEST(Optimize, FindsInteriorOptimumWithinOneCell) {
    const SearchSpace space;
    const OptimizeResult r = optimize(space, concave);
    EXPECT_NEAR(r.best.point.mu, 0.437, space.mu.step);
    EXPECT_NEAR(r.best.point.nu, 0.123, space.nu.step);
    EXPECT_NEAR(r.best.point.p_mu, 0.71, space.p_mu.step);
    EXPECT_NEAR(r.best.point.p_z_tx, 0.83, space.p_z_tx.step);
    EXPECT_TRUE(space.contains(r.best.point));
}

TEST(Optimize, DescentNeverLosesToTheGrid) {
    const SearchSpace space;
    const OptimizeResult grid = optimize(space, concave, SearchStrategy::Grid);
    const OptimizeResult refined = optimize(space, concave, SearchStrategy::GridThenDescent);
    EXPECT_GE(refined.best.rate_bits_per_s, grid.best.rate_bits_per_s);
}

TEST(Optimize, TieBreakPrefersSmallIntensities) {
    const SearchSpace space;
    const OptimizeResult r = optimize(
        space,
        [](const SearchPoint& p) {
            Evaluation e;
            e.point = p;
            e.feasible = true;
            e.rate_bits_per_s = 1.0;
            return e;
        },
        SearchStrategy::Grid);
    EXPECT_DOUBLE_EQ(r.best.point.mu, 0.2);
    EXPECT_DOUBLE_EQ(r.best.point.nu, 0.05);
    EXPECT_DOUBLE_EQ(r.best.point.p_mu, 0.9);
    EXPECT_DOUBLE_EQ(r.best.point.p_z_tx, 0.5);
}

TEST(Optimize, EnlargingTheBoxNeverLowersTheRate) {
    for_all(6, 71, [](Gen& g) {
        const ChannelParams ch = at_distance(g.uniform(0, 150));
        SearchSpace small;
        small.mu = {0.3, 0.5, 0.1};
        small.nu = {0.1, 0.2, 0.05};
        small.p_mu = {0.5, 0.7, 0.1};
        small.p_z_tx = {0.6, 0.8, 0.1};
        small.p_z_rx = small.p_z_tx;
        const SearchSpace large;
        const SecurityParams sp;
        const OptimizeResult a = optimize(small, kFieldPulses, ch, sp, SearchStrategy::Grid);
        const OptimizeResult b = optimize(large, kFieldPulses, ch, sp, SearchStrategy::Grid);
        EXPECT_GE(b.best.rate_bits_per_s, a.best.rate_bits_per_s);
    });
}

TEST(Optimize, Deterministic) {
    const OptimizeResult a = optimize(SearchSpace{}, kFieldPulses, at_distance(150), SecurityParams{});
    const OptimizeResult b = optimize(SearchSpace{}, kFieldPulses, at_distance(150), SecurityParams{});
    EXPECT_EQ(a.best.rate_bits_per_s, b.best.rate_bits_per_s);
    EXPECT_EQ(a.best.point.mu, b.best.point.mu);
    EXPECT_EQ(a.evaluations, b.evaluations);
}

TEST(Optimize, RateAt103kmIsNearTheReportedValue) {
    const OptimizeResult r = optimize(SearchSpace{}, kFieldPulses, at_distance(103), SecurityParams{});
    ASSERT_TRUE(r.best.feasible);
    EXPECT_GE(r.best.rate_bits_per_s, 0.98 / 3);
    EXPECT_LE(r.best.rate_bits_per_s, 0.98 * 3);
    EXPECT_LT(r.best.point.nu, r.best.point.mu);
}

TEST(Optimize, RateIsNonIncreasingInDistance) {
    double previous = INFINITY;
    for (double d = 0; d <= 280; d += 20) {
        const OptimizeResult r = optimize(SearchSpace{}, kFieldPulses, at_distance(d), SecurityParams{});
        const double rate = r.best.feasible ? r.best.rate_bits_per_s : 0.0;
        EXPECT_LE(rate, previous) << d << " km";
        previous = rate;
    }
}

TEST(Optimize, BeyondCutoffIsInfeasibleWithADiagnosis) {
    const OptimizeResult r = optimize(SearchSpace{}, kFieldPulses, at_distance(400), SecurityParams{});
    EXPECT_FALSE(r.best.feasible);
    EXPECT_FALSE(r.diagnosis.empty());
}

TEST(Evaluate, DecoyNearlyEqualToSignalIsWorse) {
    const SecurityParams sp;
    const ChannelParams ch = at_distance(50);
    SearchPoint good{0.4, 0.15, 0.5, 0.7, 0.7, 0.05};
    SearchPoint close = good;
    close.nu = 0.3999;
    const Evaluation a = evaluate(good, kFieldPulses, ch, sp);
    const Evaluation b = evaluate(close, kFieldPulses, ch, sp);
    ASSERT_TRUE(a.feasible);
    EXPECT_TRUE(!b.feasible || b.rate_bits_per_s < a.rate_bits_per_s);
}

TEST(Conversions, RoundTrip) {
    const SearchPoint p{0.45, 0.12, 0.6, 0.75, 0.85, 0.05};
    const PulseConfig pc = to_pulse_config(p, 1e9);
    EXPECT_EQ(pc.n_pulses, 1e9);
    const SearchPoint back = to_search_point(pc);
    EXPECT_EQ(back.mu, p.mu);
    EXPECT_EQ(back.nu, p.nu);
    EXPECT_EQ(back.p_mu, p.p_mu);
    EXPECT_EQ(back.p_z_tx, p.p_z_tx);
    EXPECT_EQ(back.p_z_rx, p.p_z_rx);
}
