#include "qds/optimizer.hpp"

#include <array>
#include <cmath>
#include <stdexcept>
#include <tuple>

namespace qds {

std::size_t ParamRange::grid_size() const {
    if (step <= 0.0 || hi <= lo) return 1;
    return static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
}

double ParamRange::grid_point(std::size_t i) const {
    const double v = lo + static_cast<double>(i) * step;
    return std::round(v * 1e12) / 1e12;
}

namespace {

void check_range(const ParamRange& r, const char* name, bool closed_top) {
    const bool top_ok = closed_top ? r.hi <= 1.0 : r.hi < 1.0;
    if (!(r.lo > 0.0 && top_ok && r.lo <= r.hi && r.step >= 0.0)) {
        throw std::invalid_argument(std::string("search space: bad range for ") + name);
    }
}

// Pointers to the coordinates a descent step may move.
using Coord = double SearchPoint::*;

}  // namespace

void SearchSpace::validate() const {
    check_range(mu, "mu", true);
    check_range(nu, "nu", true);
    check_range(p_mu, "p_mu", false);
    check_range(p_z_tx, "p_z_tx", false);
    check_range(p_z_rx, "p_z_rx", false);
    check_range(k_fraction, "k_fraction", false);
    if (!(nu.lo < mu.hi)) throw std::invalid_argument("search space: no point with nu < mu");
}

bool SearchSpace::contains(const SearchPoint& p) const {
    const bool rx_ok = tie_basis_choice ? p.p_z_rx == p.p_z_tx : p_z_rx.contains(p.p_z_rx);
    const bool k_ok = search_k ? k_fraction.contains(p.k_fraction) : p.k_fraction == k_fraction.lo;
    return mu.contains(p.mu) && nu.contains(p.nu) && p.nu < p.mu && p_mu.contains(p.p_mu) &&
           p_z_tx.contains(p.p_z_tx) && rx_ok && k_ok;
}

std::vector<SearchPoint> SearchSpace::grid() const {
    const ParamRange rx = tie_basis_choice ? ParamRange::fixed(0.0) : p_z_rx;
    const ParamRange k = search_k ? k_fraction : ParamRange::fixed(k_fraction.lo);
    std::vector<SearchPoint> out;
    for (std::size_t a = 0; a < mu.grid_size(); ++a)
        for (std::size_t b = 0; b < nu.grid_size(); ++b) {
            if (!(nu.grid_point(b) < mu.grid_point(a))) continue;
            for (std::size_t c = 0; c < p_mu.grid_size(); ++c)
                for (std::size_t d = 0; d < p_z_tx.grid_size(); ++d)
                    for (std::size_t e = 0; e < rx.grid_size(); ++e)
                        for (std::size_t f = 0; f < k.grid_size(); ++f) {
                            SearchPoint p{mu.grid_point(a), nu.grid_point(b), p_mu.grid_point(c),
                                          p_z_tx.grid_point(d), 0.0, k.grid_point(f)};
                            p.p_z_rx = tie_basis_choice ? p.p_z_tx : rx.grid_point(e);
                            out.push_back(p);
                        }
        }
    return out;
}

PulseConfig to_pulse_config(const SearchPoint& p, double n_pulses) {
    PulseConfig pc;
    pc.mu = p.mu;
    pc.nu = p.nu;
    pc.p_mu = p.p_mu;
    pc.p_z_tx = p.p_z_tx;
    pc.p_z_rx = p.p_z_rx;
    pc.n_pulses = n_pulses;
    return pc;
}

SearchPoint to_search_point(const PulseConfig& pc, double k_fraction) {
    return {pc.mu, pc.nu, pc.p_mu, pc.p_z_tx, pc.p_z_rx, k_fraction};
}

Evaluation evaluate(const SearchPoint& point, double n_pulses, const ChannelParams& ch, const SecurityParams& sp) {
    Evaluation ev;
    ev.point = point;
    const PulseConfig pc = to_pulse_config(point, n_pulses);
    pc.validate();
    SecurityParams params = sp;
    params.k_fraction = point.k_fraction;

    const ObservedCounts counts = expected_statistics(pc, ch);
    const std::array<LinkObservation, 2> links{LinkObservation{counts, std::nullopt},
                                               LinkObservation{counts, std::nullopt}};
    const LengthSearch search = min_signature_length(links, pc, params);
    if (search.status != LengthStatus::Found) {
        ev.diagnosis = search.diagnosis;
        return ev;
    }
    const std::array<ObservedCounts, 2> link_counts{counts, counts};
    const SignatureTiming timing = signature_time_and_rate(search.block_length, link_counts, pc, ch);
    ev.feasible = true;
    ev.rate_bits_per_s = timing.rate_bits_per_s;
    ev.block_length = search.block_length;
    ev.p_sec = search.report.p_sec;
    return ev;
}

bool better(const Evaluation& a, const Evaluation& b) {
    if (a.feasible != b.feasible) return a.feasible;
    if (a.rate_bits_per_s != b.rate_bits_per_s) return a.rate_bits_per_s > b.rate_bits_per_s;
    const SearchPoint& p = a.point;
    const SearchPoint& q = b.point;
    return std::tie(p.mu, p.nu, q.p_mu, p.p_z_tx, p.p_z_rx, p.k_fraction) <
           std::tie(q.mu, q.nu, p.p_mu, q.p_z_tx, q.p_z_rx, q.k_fraction);
}

OptimizeResult optimize(const SearchSpace& space, const Objective& objective, SearchStrategy strategy) {
    space.validate();
    OptimizeResult result;
    bool have = false;
    for (const SearchPoint& p : space.grid()) {
        Evaluation e = objective(p);
        ++result.evaluations;
        if (!have || better(e, result.best)) {
            result.best = std::move(e);
            have = true;
        }
    }
    if (!result.best.feasible) {
        result.diagnosis = result.best.diagnosis.empty() ? "no feasible point in the search space"
                                                         : "no feasible point in the search space: " +
                                                               result.best.diagnosis;
        return result;
    }
    if (strategy == SearchStrategy::Grid) return result;

    struct Axis {
        Coord coord;
        double step;
        double min_step;
    };
    std::vector<Axis> axes;
    auto add = [&axes](Coord c, const ParamRange& r) {
        if (r.step > 0.0 && r.hi > r.lo) axes.push_back({c, r.step / 2.0, r.step / 16.0});
    };
    add(&SearchPoint::mu, space.mu);
    add(&SearchPoint::nu, space.nu);
    add(&SearchPoint::p_mu, space.p_mu);
    add(&SearchPoint::p_z_tx, space.p_z_tx);
    if (!space.tie_basis_choice) add(&SearchPoint::p_z_rx, space.p_z_rx);
    if (space.search_k) add(&SearchPoint::k_fraction, space.k_fraction);

    auto active = [&axes] {
        for (const Axis& a : axes)
            if (a.step >= a.min_step) return true;
        return false;
    };
    while (active()) {
        bool improved = false;
        for (Axis& axis : axes) {
            if (axis.step < axis.min_step) continue;
            for (double dir : {-1.0, 1.0}) {
                SearchPoint cand = result.best.point;
                cand.*axis.coord = std::round((cand.*axis.coord + dir * axis.step) * 1e12) / 1e12;
                if (space.tie_basis_choice) cand.p_z_rx = cand.p_z_tx;
                if (!space.contains(cand)) continue;
                Evaluation e = objective(cand);
                ++result.evaluations;
                if (better(e, result.best)) {
                    result.best = std::move(e);
                    improved = true;
                    break;
                }
            }
        }
        if (!improved)
            for (Axis& a : axes) a.step /= 2.0;
    }
    return result;
}

OptimizeResult optimize(const SearchSpace& space, double n_pulses, const ChannelParams& ch, const SecurityParams& sp,
                        SearchStrategy strategy) {
    return optimize(
        space, [&](const SearchPoint& p) { return evaluate(p, n_pulses, ch, sp); }, strategy);
}

}  // namespace qds
