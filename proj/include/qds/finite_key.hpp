#pragma once

#include <array>
#include <string_view>
#include <vector>

#include "qds/channel_model.hpp"
#include "qds/stat_math.hpp"

namespace qds {

/// The ten concentration-bound applications that share the parameter
/// estimation failure budget (the 10 eps_PE term of the forging bound).
enum class BoundUse {
    ZSignalCount,
    ZDecoyCount,
    ZVacuum,
    XSignalCount,
    XDecoyCount,
    XVacuum,
    XSignalErrors,
    XDecoyErrors,
    PhaseTransfer,
    TestErrorRate,
};

inline constexpr std::array<BoundUse, 10> kAllBoundUses{
    BoundUse::ZSignalCount, BoundUse::ZDecoyCount,   BoundUse::ZVacuum,
    BoundUse::XSignalCount, BoundUse::XDecoyCount,   BoundUse::XVacuum,
    BoundUse::XSignalErrors, BoundUse::XDecoyErrors, BoundUse::PhaseTransfer,
    BoundUse::TestErrorRate,
};

std::string_view to_string(BoundUse use) noexcept;

/// Each named use is charged eps_pe.
struct EpsilonBudget {
    FailureProb eps_pe{1e-5};

    static constexpr const std::array<BoundUse, 10>& uses() noexcept { return kAllBoundUses; }
    FailureProb eps(BoundUse) const noexcept { return eps_pe; }
    double total() const noexcept { return static_cast<double>(kAllBoundUses.size()) * eps_pe.value(); }
};

/// Finite-size bounds of one link. Counts are at whatever scale the input
/// counts were (pool or block).
struct FiniteKeyEstimates {
    double s_z1_lower = 0.0;
    double phi_z1_upper = 0.5;
    double e_upper = 1.0;  ///< filled by the caller once the test sample is known
    double s_z0_upper = 0.0;
    double s_x1_lower = 0.0;
    double v_x1_upper = 0.0;

    bool s_z1_infeasible = false;  ///< decoy bracket was <= 0
    bool s_x1_infeasible = false;
    bool phi_saturated = false;    ///< phase error clamped at 0.5

    std::vector<BoundUse> consumed;  ///< bound applications, in order

    bool usable() const noexcept { return !s_z1_infeasible && !s_x1_infeasible && !phi_saturated; }
};

/// Thrown when an estimate has no statistics to work from.
class EstimationFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Photon-number weight of the intensity mixture.
double tau(int photons, const PulseConfig& pc);

struct CountBounds {
    double lower;
    double upper;
};

/// (e^lambda / p_lambda) (count -+ delta(basis_total, eps)), lower clamped at 0.
CountBounds scaled_count_bounds(double count, double basis_total, Intensity intensity, const PulseConfig& pc,
                                FailureProb eps);

/// Vacuum detections in a basis: vacuum clicks are wrong half the time, so
/// s_0 <= 2 (m + delta(m)).
double vacuum_upper(double basis_errors, FailureProb eps);

struct SinglePhotonBound {
    double value = 0.0;
    bool infeasible = false;
    double vacuum_upper = 0.0;
};

/// One-decoy lower bound on single-photon detections in a basis:
///
///   s1 >= tau1 mu / (nu (mu - nu)) * ( n_nu^- - (nu/mu)^2 n_mu^+ - (mu^2-nu^2)/mu^2 s0^+ / tau0 )
///
/// clamped to [0, detections]. A non-positive bracket returns 0 with the
/// infeasible flag set.
SinglePhotonBound single_photon_lower(const ObservedCounts& counts, Basis basis, const PulseConfig& pc,
                                      const EpsilonBudget& budget);

/// Upper bound on single-photon errors in X: tau1/(mu-nu) (m_mu^+ - m_nu^-),
/// clamped to [0, total X errors].
double single_photon_error_upper(const ObservedCounts& counts, const PulseConfig& pc, const EpsilonBudget& budget);

struct PhaseErrorBound {
    double value = 0.5;
    bool saturated = false;
};

/// X-basis single-photon error rate transferred to the Z single photons:
/// v/s_x1 + gamma(eps, b, s_x1, s_z1), capped at 0.5. When v = 0 the
/// variance argument b is floored at 1/s_x1.
/// Throws EstimationFailure if s_x1 or s_z1 is not positive.
PhaseErrorBound phase_error_upper(double s_x1, double v_x1, double s_z1, FailureProb eps);

/// Observed error rate and sample size of one link's test sample.
struct TestSample {
    double errors = 0.0;
    double size = 1.0;

    double rate() const noexcept { return size > 0.0 ? errors / size : 0.0; }
};

/// E^U = max over links of the Serfling bound with E_obs = errors/k.
double observed_error_upper(const TestSample& bob_alice, const TestSample& charlie_alice, double block_length,
                            FailureProb eps_pe);

/// All bounds except E^U, from counts at the scale given.
FiniteKeyEstimates estimate(const ObservedCounts& counts, const PulseConfig& pc, const EpsilonBudget& budget);

/// Rescale the counts of a key pool of pool_size Z detections to a block of
/// block_length and re-apply every bound at block scale. Throws
/// std::invalid_argument if block_length > pool_size.
FiniteKeyEstimates block_scale(const ObservedCounts& pool_counts, double block_length, double pool_size,
                               const PulseConfig& pc, const EpsilonBudget& budget);

}  // namespace qds
