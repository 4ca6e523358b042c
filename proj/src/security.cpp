#include "qds/security.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace qds {

double SecurityParams::test_size(double block_length) const {
    if (k_test) return *k_test;
    return std::max(1.0, std::ceil(k_fraction * block_length));
}

double SecurityParams::psec_floor() const {
    const double forge_floor = alpha.value() + eps.value() / alpha.value() + 10.0 * eps_pe.value();
    return std::max(2.0 * eps_pe.value(), forge_floor);
}

PeSolution solve_p_e(double s_z1, double block_length, double phi) {
    if (!(block_length > 0.0)) throw std::invalid_argument("solve_p_e: block length must be positive");
    if (s_z1 < 0.0 || s_z1 > block_length) throw std::invalid_argument("solve_p_e: need 0 <= s_z1 <= L");
    PeSolution out;
    out.rhs = 2.0 * (s_z1 / block_length) * (1.0 - binary_entropy(phi));
    if (out.rhs <= 0.0) {
        out.degenerate = true;
        return out;
    }
    out.p_e = binary_entropy_inverse(std::min(1.0, out.rhs));
    return out;
}

Thresholds thresholds(double e_upper, double p_e) {
    const double gap = p_e - e_upper;
    return {e_upper + gap / 3.0, e_upper + 2.0 * gap / 3.0, gap > 0.0};
}

BoundValue p_robust(FailureProb eps_pe) { return BoundValue::of(2.0 * eps_pe.value()); }

BoundValue p_repudiation(const Thresholds& th, double block_length) {
    const double gap = th.s_upsilon - th.s_alpha;
    return BoundValue::of(2.0 * std::exp(-0.25 * gap * gap * block_length));
}

double epsilon_f(FailureProb alpha, double block_length, double s_z1, double phi, double s_upsilon, FailureProb eps) {
    if (!(block_length > 0.0)) throw std::invalid_argument("epsilon_f: block length must be positive");
    const double rhs = 2.0 * (s_z1 / block_length) * (1.0 - binary_entropy(phi));
    const double exponent = 0.5 * block_length * (rhs - binary_entropy(s_upsilon));
    return (std::exp2(-exponent) + eps.value()) / alpha.value();
}

BoundValue p_forge(double alpha, double eps_f, double eps_pe) {
    return BoundValue::of(alpha + eps_f + 10.0 * eps_pe);
}

double p_sec(double robust, double repudiation, double forge) { return std::max({robust, repudiation, forge}); }

double LinkObservation::error_rate() const noexcept {
    if (test_error_rate) return *test_error_rate;
    const double n = counts.detections(Basis::Z);
    return n > 0.0 ? counts.errors(Basis::Z) / n : 0.0;
}

SecurityReport analyze_block(std::span<const LinkObservation> links, const PulseConfig& pc, const SecurityParams& sp,
                             double block_length) {
    if (links.empty()) throw std::invalid_argument("analyze_block: no links");
    SecurityReport r;
    r.block_length = block_length;
    r.test_size = sp.test_size(block_length);
    const EpsilonBudget budget = sp.budget();

    double worst_rhs = std::numeric_limits<double>::infinity();
    bool usable = true;
    r.e_upper = 0.0;
    for (const LinkObservation& link : links) {
        FiniteKeyEstimates est = block_scale(link.counts, block_length, link.pool_size(), pc, budget);
        // the block holds exactly L detections; drop rounding excess from the rescale
        est.s_z1_lower = std::min(est.s_z1_lower, block_length);
        est.e_upper = serfling_error_upper(link.error_rate(), block_length, r.test_size, budget.eps(BoundUse::TestErrorRate));
        est.consumed.push_back(BoundUse::TestErrorRate);
        r.e_upper = std::max(r.e_upper, est.e_upper);
        if (!est.usable()) {
            usable = false;
        } else {
            const double rhs = 2.0 * (est.s_z1_lower / block_length) * (1.0 - binary_entropy(est.phi_z1_upper));
            if (rhs < worst_rhs) {
                worst_rhs = rhs;
                r.s_z1_lower = est.s_z1_lower;
                r.phi_z1_upper = est.phi_z1_upper;
            }
        }
        r.link_estimates.push_back(std::move(est));
    }

    r.robust = p_robust(sp.eps_pe);
    if (!usable) {
        r.diagnosis = "decoy estimates infeasible at this block length";
        r.repudiation = BoundValue::of(2.0);
        r.forge = BoundValue::of(std::numeric_limits<double>::infinity());
        r.p_sec_raw = std::numeric_limits<double>::infinity();
        r.p_sec = 1.0;
        return r;
    }

    const PeSolution pe = solve_p_e(r.s_z1_lower, block_length, r.phi_z1_upper);
    r.p_e = pe.p_e;
    r.thresholds = thresholds(r.e_upper, r.p_e);
    r.repudiation = p_repudiation(r.thresholds, block_length);
    r.eps_f = epsilon_f(sp.alpha, block_length, r.s_z1_lower, r.phi_z1_upper, clamp_probability(r.thresholds.s_upsilon),
                        sp.eps);
    r.forge = p_forge(sp.alpha.value(), r.eps_f, sp.eps_pe.value());
    r.p_sec_raw = p_sec(r.robust.raw, r.repudiation.raw, r.forge.raw);
    r.p_sec = p_sec(r.robust.clamped, r.repudiation.clamped, r.forge.clamped);

    if (pe.degenerate) {
        r.diagnosis = "p_E = 0: no single-photon key material";
    } else if (!r.thresholds.feasible) {
        r.diagnosis = "p_E <= E^U: an adversary can hide within the honest error rate";
    } else {
        r.feasible = true;
    }
    return r;
}

double max_block_length(std::span<const LinkObservation> links, const SecurityParams& sp) {
    double pool = std::numeric_limits<double>::infinity();
    for (const LinkObservation& link : links) pool = std::min(pool, link.pool_size());
    if (!std::isfinite(pool) || pool < 4.0) return 0.0;
    auto fits = [&](double L) { return 2.0 * L + sp.test_size(L) <= pool; };
    if (!fits(2.0)) return 0.0;
    // fits() is monotone in L: bisect on half-lengths
    double lo = 1.0;
    double hi = std::floor(pool / 4.0) + 1.0;
    while (hi - lo > 1.0) {
        const double mid = std::floor(0.5 * (lo + hi));
        (fits(2.0 * mid) ? lo : hi) = mid;
    }
    return 2.0 * lo;
}

LengthSearch min_signature_length(std::span<const LinkObservation> links, const PulseConfig& pc,
                                  const SecurityParams& sp) {
    LengthSearch out;
    if (sp.target_psec < 10.0 * sp.eps_pe.value() || sp.target_psec < sp.psec_floor()) {
        out.status = LengthStatus::InfeasibleTarget;
        out.diagnosis = "target p_sec below the L-independent floor " + std::to_string(sp.psec_floor());
        return out;
    }
    const double l_max = max_block_length(links, sp);
    if (l_max < 2.0) {
        out.diagnosis = "key pool too small for any signature block";
        return out;
    }
    auto good = [&](const SecurityReport& r) { return r.feasible && r.p_sec <= sp.target_psec; };

    SecurityReport top = analyze_block(links, pc, sp, l_max);
    if (!good(top)) {
        out.report = top;
        out.diagnosis = top.feasible ? "p_sec target not reached within the key pool"
                                     : "infeasible even at the largest block the pool allows: " + top.diagnosis;
        return out;
    }
    // Invariant: half-length hi is good, lo is not (or is zero).
    auto lo = 0.0;
    auto hi = l_max / 2.0;
    SecurityReport best = top;
    while (hi - lo > 1.0) {
        const double mid = std::floor(0.5 * (lo + hi));
        SecurityReport r = analyze_block(links, pc, sp, 2.0 * mid);
        if (good(r)) {
            hi = mid;
            best = std::move(r);
        } else {
            lo = mid;
        }
    }
    out.status = LengthStatus::Found;
    out.block_length = 2.0 * hi;
    out.report = std::move(best);
    return out;
}

SignatureTiming signature_time_and_rate(double block_length, std::span<const ObservedCounts> links,
                                        const PulseConfig& pc, const ChannelParams& ch) {
    if (!(block_length > 0.0)) throw std::invalid_argument("signature_time_and_rate: L must be positive");
    if (!(ch.clock_hz > 0.0)) throw std::invalid_argument("signature_time_and_rate: clock must be positive");
    double time = 0.0;
    for (const ObservedCounts& counts : links) {
        const double yield = counts.detections(Basis::Z) / pc.n_pulses;
        if (!(yield > 0.0)) throw std::invalid_argument("signature_time_and_rate: link has no Z detections");
        // both the m = 0 and m = 1 blocks are consumed per signed bit
        time = std::max(time, 2.0 * block_length / (ch.clock_hz * yield));
    }
    return {time, 1.0 / time};
}

SecurityReport analyze(std::span<const LinkObservation> links, const PulseConfig& pc, const ChannelParams& ch,
                       const SecurityParams& sp, std::optional<double> block_length) {
    SecurityReport report;
    if (block_length) {
        report = analyze_block(links, pc, sp, *block_length);
    } else {
        LengthSearch search = min_signature_length(links, pc, sp);
        report = std::move(search.report);
        if (search.status != LengthStatus::Found) {
            report.feasible = false;
            report.diagnosis = search.diagnosis;
            return report;
        }
    }
    if (report.block_length > 0.0) {
        std::vector<ObservedCounts> counts;
        for (const LinkObservation& link : links) counts.push_back(link.counts);
        bool any_empty = std::any_of(counts.begin(), counts.end(),
                                     [](const ObservedCounts& c) { return !(c.detections(Basis::Z) > 0.0); });
        if (!any_empty) {
            const SignatureTiming t = signature_time_and_rate(report.block_length, counts, pc, ch);
            report.time_per_bit_s = t.time_per_bit_s;
            report.rate_bits_per_s = t.rate_bits_per_s;
        }
    }
    return report;
}

}  // namespace qds
