#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qds/channel_model.hpp"
#include "qds/finite_key.hpp"
#include "qds/stat_math.hpp"

namespace qds {

struct SecurityParams {
    FailureProb eps_pe{1e-5};
    FailureProb alpha{1e-5};
    FailureProb eps{1e-10};  ///< smooth min-entropy failure probability
    double target_psec = 2e-4;
    std::optional<double> k_test;  ///< fixed test-sample size; overrides k_fraction
    double k_fraction = 0.05;      ///< k = ceil(k_fraction L) when k_test is unset

    double test_size(double block_length) const;
    /// Smallest p_sec reachable at any L: p_robust and the L-independent part
    /// of p_forge, alpha + eps/alpha + 10 eps_pe.
    double psec_floor() const;
    EpsilonBudget budget() const { return EpsilonBudget{eps_pe}; }
};

struct Thresholds {
    double s_alpha = 0.0;
    double s_upsilon = 0.0;
    bool feasible = false;  ///< p_E > E^U
};

struct PeSolution {
    double p_e = 0.0;
    double rhs = 0.0;  ///< 2 (s_z1/L) (1 - h(phi)), unclamped
    bool degenerate = false;
};

/// Eve's minimum error rate: h(p_E) = min(1, 2 (s_z1/L)(1 - h(phi))).
PeSolution solve_p_e(double s_z1, double block_length, double phi);

/// s_alpha = E^U + (p_E - E^U)/3, s_upsilon = E^U + 2(p_E - E^U)/3.
Thresholds thresholds(double e_upper, double p_e);

/// Unclamped and clamped (to 1) value of a probability bound.
struct BoundValue {
    double raw = 0.0;
    double clamped = 0.0;

    static BoundValue of(double raw) { return {raw, raw > 1.0 ? 1.0 : raw}; }
};

BoundValue p_robust(FailureProb eps_pe);
BoundValue p_repudiation(const Thresholds& th, double block_length);
/// (1/alpha) (2^{-(L/2)(2 s_z1/L (1-h(phi)) - h(s_upsilon))} + eps)
double epsilon_f(FailureProb alpha, double block_length, double s_z1, double phi, double s_upsilon, FailureProb eps);
BoundValue p_forge(double alpha, double eps_f, double eps_pe);
double p_sec(double robust, double repudiation, double forge);

/// Statistics of one quantum link as seen by the security analysis.
struct LinkObservation {
    ObservedCounts counts;
    /// Error rate of the revealed test sample. When absent the Z-basis error
    /// rate of the counts is used.
    std::optional<double> test_error_rate;

    double pool_size() const noexcept { return counts.detections(Basis::Z); }
    double error_rate() const noexcept;
};

struct SecurityReport {
    double block_length = 0.0;
    double test_size = 0.0;
    double s_z1_lower = 0.0;
    double phi_z1_upper = 0.5;
    double e_upper = 1.0;
    double p_e = 0.0;
    Thresholds thresholds;
    BoundValue robust;
    BoundValue repudiation;
    double eps_f = 0.0;
    BoundValue forge;
    double p_sec = 1.0;
    double p_sec_raw = 1.0;
    double time_per_bit_s = 0.0;
    double rate_bits_per_s = 0.0;
    bool feasible = false;
    std::string diagnosis;
    std::vector<FiniteKeyEstimates> link_estimates;
};

/// Security bounds at one block length: block-scaled estimates per link, the
/// weakest link's s_z1 and phi, E^U over links, thresholds, the three
/// failure bounds and their maximum.
SecurityReport analyze_block(std::span<const LinkObservation> links, const PulseConfig& pc, const SecurityParams& sp,
                             double block_length);

enum class LengthStatus { Found, InfeasibleTarget, Infeasible };

struct LengthSearch {
    LengthStatus status = LengthStatus::Infeasible;
    double block_length = 0.0;
    SecurityReport report;
    std::string diagnosis;
};

/// Largest even L with 2L + k(L) <= pool size on every link.
double max_block_length(std::span<const LinkObservation> links, const SecurityParams& sp);

/// Smallest even L with p_sec <= target and feasible thresholds, by
/// bisection over L in [2, max_block_length].
LengthSearch min_signature_length(std::span<const LinkObservation> links, const PulseConfig& pc,
                                  const SecurityParams& sp);

struct SignatureTiming {
    double time_per_bit_s = 0.0;
    double rate_bits_per_s = 0.0;
};

/// Per link: y = Z detections / N_t, time = 2L/(clock y). Links run in
/// parallel, so the slowest one sets the time. Throws std::invalid_argument
/// when a link has no Z detections.
SignatureTiming signature_time_and_rate(double block_length, std::span<const ObservedCounts> links,
                                        const PulseConfig& pc, const ChannelParams& ch);

/// Full pipeline: solve L (or use the given one), analyze, attach timing.
SecurityReport analyze(std::span<const LinkObservation> links, const PulseConfig& pc, const ChannelParams& ch,
                       const SecurityParams& sp, std::optional<double> block_length = std::nullopt);

}  // namespace qds
