#include <array>
#include <cmath>

#include <gtest/gtest.h>

#include "qds/security.hpp"
#include "support/generators.hpp"

using namespace qds;
using qds::testing::for_all;
using qds::testing::Gen;

namespace {

ObservedCounts field_bob_103km() {
    ObservedCounts c;
    c.at(Basis::Z, Intensity::Signal) = {4.17e9, 7.35e6};
    c.at(Basis::Z, Intensity::Decoy) = {4.05e7, 77579};
    c.at(Basis::X, Intensity::Signal) = {1.84e6, 1956};
    c.at(Basis::X, Intensity::Decoy) = {19474, 68};
    return c;
}

std::array<LinkObservation, 2> twin_links(const ObservedCounts& c) {
    return {LinkObservation{c, std::nullopt}, LinkObservation{c, std::nullopt}};
}

PulseConfig field_source() {
    PulseConfig pc;
    pc.mu = 0.4;
    pc.nu = 0.15;
    pc.p_mu = 0.5;
    pc.p_z_tx = 0.7;
    pc.p_z_rx = 0.7;
    pc.n_pulses = 2e12;
    return pc;
}

}  // namespace

TEST(SolvePe, Values) {
    EXPECT_EQ(solve_p_e(1000, 1000, 0.0).p_e, 0.5);
    const PeSolution none = solve_p_e(0, 1000, 0.02);
    EXPECT_EQ(none.p_e, 0.0);
    EXPECT_TRUE(none.degenerate);
    EXPECT_NEAR(solve_p_e(17250, 51022, 0.0218).p_e, 0.13604417830192926, 1e-10);
    EXPECT_THROW(solve_p_e(1001, 1000, 0.0), std::invalid_argument);
}

TEST(Thresholds, ReportedRows) {
    const Thresholds near = thresholds(0.0523, 0.1360);
    EXPECT_NEAR(near.s_alpha, 0.0802, 1e-12);
    EXPECT_NEAR(near.s_upsilon, 0.1081, 1e-12);
    EXPECT_TRUE(near.feasible);
    const Thresholds far = thresholds(0.0390, 0.0621);
    EXPECT_NEAR(far.s_alpha, 0.0467, 1e-12);
    EXPECT_NEAR(far.s_upsilon, 0.0544, 1e-12);
}

TEST(Thresholds, EqualRatesAreInfeasible) {
    const Thresholds t = thresholds(0.05, 0.05);
    EXPECT_EQ(t.s_alpha, 0.05);
    EXPECT_EQ(t.s_upsilon, 0.05);
    EXPECT_FALSE(t.feasible);
}

TEST(Thresholds, IdentitiesAndOrdering) {
    for_all(1000, 41, [](Gen& g) {
        const double eu = g.uniform(0.0, 0.3);
        const double pe = eu + g.uniform(1e-6, 0.5 - eu);
        const Thresholds t = thresholds(eu, pe);
        EXPECT_NEAR(2 * t.s_alpha - t.s_upsilon, eu, 1e-14);
        EXPECT_NEAR(2 * t.s_upsilon - t.s_alpha, pe, 1e-14);
        EXPECT_LE(eu, t.s_alpha);
        EXPECT_LT(t.s_alpha, t.s_upsilon);
        EXPECT_LE(t.s_upsilon, pe);
    });
}

TEST(FailureBounds, Robustness) {
    EXPECT_DOUBLE_EQ(p_robust(FailureProb(1e-5)).clamped, 2e-5);
    EXPECT_DOUBLE_EQ(p_robust(FailureProb(1e-10)).clamped, 2e-10);
    EXPECT_EQ(p_robust(FailureProb(0.5)).clamped, 1.0);
    EXPECT_EQ(p_robust(FailureProb(0.5)).raw, 1.0);
    EXPECT_EQ(p_robust(FailureProb(0.9)).raw, 1.8);
}

TEST(FailureBounds, Repudiation) {
    const BoundValue flat = p_repudiation(Thresholds{0.08, 0.08, false}, 1000);
    EXPECT_EQ(flat.raw, 2.0);
    EXPECT_EQ(flat.clamped, 1.0);
    const BoundValue row = p_repudiation(Thresholds{0.0802, 0.1081, true}, 51022);
    EXPECT_NEAR(row.raw, 9.7480171054858095e-5, 1e-16);
}

TEST(FailureBounds, RepudiationExponentIsLinearInL) {
    for_all(300, 42, [](Gen& g) {
        const double sa = g.uniform(0.0, 0.3);
        const Thresholds t{sa, sa + g.uniform(0.001, 0.2), true};
        const double L = g.log_uniform(10, 1e5);
        const double once = p_repudiation(t, L).raw / 2;
        const double twice = p_repudiation(t, 2 * L).raw / 2;
        EXPECT_NEAR(twice, once * once, 1e-12 * once);
        if (p_repudiation(t, L).raw > 1e-250) EXPECT_LT(p_repudiation(t, L * 1.01).raw, p_repudiation(t, L).raw);
    });
}

TEST(FailureBounds, EpsilonF) {
    // exponent zero: (1 + eps) / alpha
    const double su = 0.1;
    const double L = 10000;
    const double s = L * binary_entropy(su) / 2;
    EXPECT_NEAR(epsilon_f(FailureProb(1e-3), L, s, 0.0, su, FailureProb(1e-10)), (1 + 1e-10) / 1e-3, 1e-6);
    const double row = epsilon_f(FailureProb(1e-5), 51022, 17250, 0.0218, 0.1081, FailureProb(1e-10));
    EXPECT_NEAR(row, 1e-5, 1e-7);
    EXPECT_LT(epsilon_f(FailureProb(1e-5), 1e9, 4e8, 0.01, 0.1, FailureProb(1e-300)), 1e-290);
}

TEST(FailureBounds, ForgeAndOverall) {
    EXPECT_NEAR(p_forge(1e-5, 1e-5, 1e-5).clamped, 1.2e-4, 1e-18);
    EXPECT_EQ(p_forge(0, 0, 0).clamped, 0.0);
    EXPECT_EQ(p_forge(0.5, 0.5, 0.1).clamped, 1.0);
    EXPECT_NEAR(p_forge(0.5, 0.5, 0.1).raw, 2.0, 1e-15);
    EXPECT_EQ(p_sec(2e-5, 9.75e-5, 1.2e-4), 1.2e-4);
    EXPECT_EQ(p_sec(3e-5, 3e-5, 3e-5), 3e-5);
    EXPECT_EQ(p_sec(1.0, 1e-9, 1e-9), 1.0);
}

TEST(SecurityParams, Floor) {
    const SecurityParams sp;
    EXPECT_NEAR(sp.psec_floor(), 1.2e-4, 1e-15);
    EXPECT_EQ(sp.test_size(50000), 2500);
    EXPECT_EQ(sp.test_size(10), 1);
}

TEST(SignatureTiming, UnitCase) {
    PulseConfig pc;
    pc.n_pulses = 1e6;
    ChannelParams ch;
    ch.clock_hz = 1e6;
    ObservedCounts c;
    c.at(Basis::Z, Intensity::Signal).n = 1500;
    c.at(Basis::Z, Intensity::Decoy).n = 500;  // y = 2e-3, clock y = 2000 = 2L
    const std::array<ObservedCounts, 1> links{c};
    const SignatureTiming t = signature_time_and_rate(1000, links, pc, ch);
    EXPECT_DOUBLE_EQ(t.time_per_bit_s, 1.0);
    EXPECT_DOUBLE_EQ(t.rate_bits_per_s * t.time_per_bit_s, 1.0);
}

TEST(SignatureTiming, FieldCountsAt103km) {
    PulseConfig pc;
    pc.n_pulses = 2e12;
    ChannelParams ch;
    ObservedCounts bob = field_bob_103km();
    const std::array<ObservedCounts, 1> links{bob};
    EXPECT_NEAR(signature_time_and_rate(51032.479848101291, links, pc, ch).time_per_bit_s, 0.96962317725878239, 1e-12);
}

TEST(SignatureTiming, SlowestLinkSetsTheTime) {
    PulseConfig pc;
    pc.n_pulses = 1e9;
    ChannelParams ch;
    ObservedCounts fast;
    fast.at(Basis::Z, Intensity::Signal).n = 2e6;
    ObservedCounts slow;
    slow.at(Basis::Z, Intensity::Signal).n = 1e6;
    const std::array<ObservedCounts, 2> links{fast, slow};
    const std::array<ObservedCounts, 1> only_slow{slow};
    EXPECT_EQ(signature_time_and_rate(5000, links, pc, ch).time_per_bit_s,
              signature_time_and_rate(5000, only_slow, pc, ch).time_per_bit_s);
    const std::array<ObservedCounts, 1> empty{ObservedCounts{}};
    EXPECT_THROW(signature_time_and_rate(5000, empty, pc, ch), std::invalid_argument);
}

TEST(AnalyzeBlock, FloorsAndClamping) {
    for_all(100, 43, [](Gen& g) {
        PulseConfig pc = g.pulse_config();
        ChannelParams ch = g.channel();
        SecurityParams sp;
        sp.eps_pe = FailureProb(g.log_uniform(1e-9, 1e-3));
        const ObservedCounts c = expected_statistics(pc, ch);
        const auto links = twin_links(c);
        const double L = 2 * std::floor(c.detections(Basis::Z) * g.uniform(0.0001, 0.45) / 2) + 2;
        const SecurityReport r = analyze_block(links, pc, sp, L);
        EXPECT_GE(r.p_sec, std::max(2 * sp.eps_pe.value(), 10 * sp.eps_pe.value()) * (1 - 1e-12));
        EXPECT_LE(r.p_sec, 1.0);
        if (r.link_estimates.front().usable()) {
            EXPECT_DOUBLE_EQ(r.p_sec, std::max({r.robust.clamped, r.repudiation.clamped, r.forge.clamped}));
        }
    });
}

TEST(AnalyzeBlock, DiagnosesUnusableEstimates) {
    const PulseConfig pc = field_source();
    ChannelParams ch;
    ch.distance_km = 103;
    const auto links = twin_links(expected_statistics(pc, ch));
    const SecurityReport r = analyze_block(links, pc, SecurityParams{}, 20);
    EXPECT_FALSE(r.feasible);
    EXPECT_FALSE(r.diagnosis.empty());
}

TEST(MinSignatureLength, TargetBelowFloor) {
    SecurityParams sp;
    sp.target_psec = 5e-5;
    const PulseConfig pc = field_source();
    ChannelParams ch;
    ch.distance_km = 50;
    const auto links = twin_links(expected_statistics(pc, ch));
    EXPECT_EQ(min_signature_length(links, pc, sp).status, LengthStatus::InfeasibleTarget);
}

TEST(MinSignatureLength, SmallestQualifyingLength) {
    const PulseConfig pc = field_source();
    ChannelParams ch;
    ch.distance_km = 103;
    const SecurityParams sp;
    const auto links = twin_links(expected_statistics(pc, ch));
    const LengthSearch found = min_signature_length(links, pc, sp);
    ASSERT_EQ(found.status, LengthStatus::Found);
    EXPECT_EQ(std::fmod(found.block_length, 2.0), 0.0);
    EXPECT_LE(found.report.p_sec, sp.target_psec);
    EXPECT_TRUE(found.report.feasible);
    const SecurityReport shorter = analyze_block(links, pc, sp, found.block_length - 2);
    EXPECT_FALSE(shorter.feasible && shorter.p_sec <= sp.target_psec);
}

TEST(MinSignatureLength, NoiseFreeLengthSetByRepudiation) {
    // ideal channel and a huge pool: every bound but p_repudiation is at its floor
    PulseConfig pc = field_source();
    pc.n_pulses = 1e14;
    ChannelParams ch;
    ch.misalignment = 0.0;
    ch.dark_count_rate_hz = 0.0;
    SecurityParams sp;
    const auto links = twin_links(expected_statistics(pc, ch));
    const LengthSearch found = min_signature_length(links, pc, sp);
    ASSERT_EQ(found.status, LengthStatus::Found);
    EXPECT_LE(found.report.repudiation.raw, sp.target_psec);
    EXPECT_LT(found.report.forge.raw, sp.target_psec);
    const SecurityReport shorter = analyze_block(links, pc, sp, found.block_length - 2);
    EXPECT_GT(shorter.repudiation.raw, sp.target_psec);
}

TEST(MinSignatureLength, LowerTargetNeverShortens) {
    for_all(40, 44, [](Gen& g) {
        PulseConfig pc = g.pulse_config();
        ChannelParams ch = g.channel();
        const auto links = twin_links(expected_statistics(pc, ch));
        SecurityParams loose;
        loose.target_psec = g.log_uniform(1.3e-4, 1e-2);
        SecurityParams tight = loose;
        tight.target_psec = loose.target_psec * g.uniform(0.5, 0.99);
        const LengthSearch a = min_signature_length(links, pc, loose);
        const LengthSearch b = min_signature_length(links, pc, tight);
        if (b.status == LengthStatus::Found) {
            ASSERT_EQ(a.status, LengthStatus::Found);
            EXPECT_LE(a.block_length, b.block_length);
        }
    });
}

TEST(Analyze, RateTimesTimeIsOne) {
    const PulseConfig pc = field_source();
    ChannelParams ch;
    ch.distance_km = 103;
    const auto links = twin_links(expected_statistics(pc, ch));
    const SecurityReport r = analyze(links, pc, ch, SecurityParams{});
    ASSERT_TRUE(r.feasible);
    EXPECT_NEAR(r.rate_bits_per_s * r.time_per_bit_s, 1.0, 1e-15);
    EXPECT_GE(r.rate_bits_per_s, 0.1);
    EXPECT_LE(r.rate_bits_per_s, 10.0);
}
