#include "qds/finite_key.hpp"

#include <algorithm>
#include <cmath>

namespace qds {

std::string_view to_string(BoundUse use) noexcept {
    switch (use) {
        case BoundUse::ZSignalCount: return "n_Z,mu";
        case BoundUse::ZDecoyCount: return "n_Z,nu";
        case BoundUse::ZVacuum: return "vacuum_Z";
        case BoundUse::XSignalCount: return "n_X,mu";
        case BoundUse::XDecoyCount: return "n_X,nu";
        case BoundUse::XVacuum: return "vacuum_X";
        case BoundUse::XSignalErrors: return "m_X,mu";
        case BoundUse::XDecoyErrors: return "m_X,nu";
        case BoundUse::PhaseTransfer: return "phase_transfer";
        case BoundUse::TestErrorRate: return "test_error_rate";
    }
    return "?";
}

double tau(int photons, const PulseConfig& pc) {
    auto poisson = [photons](double mean) {
        return std::exp(photons * std::log(mean) - mean - std::lgamma(photons + 1.0));
    };
    return pc.p_mu * poisson(pc.mu) + (1.0 - pc.p_mu) * poisson(pc.nu);
}

CountBounds scaled_count_bounds(double count, double basis_total, Intensity intensity, const PulseConfig& pc,
                                FailureProb eps) {
    const double factor = std::exp(pc.intensity(intensity)) / pc.probability(intensity);
    const double dev = hoeffding_delta(basis_total, eps);
    return {std::max(0.0, factor * (count - dev)), factor * (count + dev)};
}

double vacuum_upper(double basis_errors, FailureProb eps) {
    return 2.0 * (basis_errors + hoeffding_delta(basis_errors, eps));
}

namespace {

struct BasisUses {
    BoundUse signal;
    BoundUse decoy;
    BoundUse vacuum;
};

BasisUses uses_for(Basis b) {
    if (b == Basis::Z) return {BoundUse::ZSignalCount, BoundUse::ZDecoyCount, BoundUse::ZVacuum};
    return {BoundUse::XSignalCount, BoundUse::XDecoyCount, BoundUse::XVacuum};
}

}  // namespace

SinglePhotonBound single_photon_lower(const ObservedCounts& counts, Basis basis, const PulseConfig& pc,
                                      const EpsilonBudget& budget) {
    const BasisUses uses = uses_for(basis);
    const double total = counts.detections(basis);
    const double mu = pc.mu;
    const double nu = pc.nu;

    const CountBounds signal =
        scaled_count_bounds(counts.at(basis, Intensity::Signal).n, total, Intensity::Signal, pc, budget.eps(uses.signal));
    const CountBounds decoy =
        scaled_count_bounds(counts.at(basis, Intensity::Decoy).n, total, Intensity::Decoy, pc, budget.eps(uses.decoy));
    const double s0 = vacuum_upper(counts.errors(basis), budget.eps(uses.vacuum));

    const double bracket = decoy.lower - (nu * nu) / (mu * mu) * signal.upper -
                           (mu * mu - nu * nu) / (mu * mu) * s0 / tau(0, pc);
    SinglePhotonBound out;
    out.vacuum_upper = s0;
    if (bracket <= 0.0) {
        out.infeasible = true;
        return out;
    }
    const double bound = tau(1, pc) * mu / (nu * (mu - nu)) * bracket;
    out.value = std::clamp(bound, 0.0, total);
    return out;
}

double single_photon_error_upper(const ObservedCounts& counts, const PulseConfig& pc, const EpsilonBudget& budget) {
    const double total = counts.errors(Basis::X);
    const CountBounds signal = scaled_count_bounds(counts.at(Basis::X, Intensity::Signal).m, total,
                                                   Intensity::Signal, pc, budget.eps(BoundUse::XSignalErrors));
    const CountBounds decoy = scaled_count_bounds(counts.at(Basis::X, Intensity::Decoy).m, total, Intensity::Decoy,
                                                  pc, budget.eps(BoundUse::XDecoyErrors));
    const double bound = tau(1, pc) / (pc.mu - pc.nu) * (signal.upper - decoy.lower);
    return std::clamp(bound, 0.0, total);
}

PhaseErrorBound phase_error_upper(double s_x1, double v_x1, double s_z1, FailureProb eps) {
    if (!(s_x1 > 0.0)) throw EstimationFailure("phase_error_upper: no single-photon X statistics");
    if (!(s_z1 > 0.0)) throw EstimationFailure("phase_error_upper: no single-photon Z statistics");
    const double rate = v_x1 / s_x1;
    if (rate >= 0.5) return {0.5, true};
    const double spread_arg = v_x1 > 0.0 ? rate : std::min(0.5, 1.0 / s_x1);
    const double phi = rate + gamma_correction(eps, spread_arg, s_x1, s_z1);
    if (phi >= 0.5) return {0.5, true};
    return {phi, false};
}

double observed_error_upper(const TestSample& bob_alice, const TestSample& charlie_alice, double block_length,
                            FailureProb eps_pe) {
    return std::max(serfling_error_upper(bob_alice.rate(), block_length, bob_alice.size, eps_pe),
                    serfling_error_upper(charlie_alice.rate(), block_length, charlie_alice.size, eps_pe));
}

FiniteKeyEstimates estimate(const ObservedCounts& counts, const PulseConfig& pc, const EpsilonBudget& budget) {
    FiniteKeyEstimates est;
    const SinglePhotonBound z1 = single_photon_lower(counts, Basis::Z, pc, budget);
    est.consumed.insert(est.consumed.end(), {BoundUse::ZSignalCount, BoundUse::ZDecoyCount, BoundUse::ZVacuum});
    const SinglePhotonBound x1 = single_photon_lower(counts, Basis::X, pc, budget);
    est.consumed.insert(est.consumed.end(), {BoundUse::XSignalCount, BoundUse::XDecoyCount, BoundUse::XVacuum});
    est.v_x1_upper = single_photon_error_upper(counts, pc, budget);
    est.consumed.insert(est.consumed.end(), {BoundUse::XSignalErrors, BoundUse::XDecoyErrors});

    est.s_z1_lower = z1.value;
    est.s_z0_upper = z1.vacuum_upper;
    est.s_x1_lower = x1.value;
    est.s_z1_infeasible = z1.infeasible || z1.value <= 0.0;
    est.s_x1_infeasible = x1.infeasible || x1.value <= 0.0;

    if (!est.s_z1_infeasible && !est.s_x1_infeasible) {
        const PhaseErrorBound phi =
            phase_error_upper(est.s_x1_lower, est.v_x1_upper, est.s_z1_lower, budget.eps(BoundUse::PhaseTransfer));
        est.consumed.push_back(BoundUse::PhaseTransfer);
        est.phi_z1_upper = phi.value;
        est.phi_saturated = phi.saturated;
    } else {
        est.phi_z1_upper = 0.5;
        est.phi_saturated = true;
    }
    return est;
}

FiniteKeyEstimates block_scale(const ObservedCounts& pool_counts, double block_length, double pool_size,
                               const PulseConfig& pc, const EpsilonBudget& budget) {
    if (!(pool_size > 0.0)) throw std::invalid_argument("block_scale: empty key pool");
    if (block_length > pool_size) throw std::invalid_argument("block_scale: block length exceeds key pool");
    if (block_length == pool_size) return estimate(pool_counts, pc, budget);
    return estimate(pool_counts.scaled(block_length / pool_size), pc, budget);
}

}  // namespace qds
