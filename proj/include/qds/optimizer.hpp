#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "qds/channel_model.hpp"
#include "qds/security.hpp"

namespace qds {

/// Closed interval scanned on a grid lo, lo + step, ... <= hi.
struct ParamRange {
    double lo = 0.0;
    double hi = 0.0;
    double step = 0.0;  ///< 0 means the single value lo

    static ParamRange fixed(double v) { return {v, v, 0.0}; }
    std::size_t grid_size() const;
    double grid_point(std::size_t i) const;
    bool contains(double v) const { return v >= lo - 1e-12 && v <= hi + 1e-12; }
};

struct SearchPoint {
    double mu = 0.5;
    double nu = 0.1;
    double p_mu = 0.7;
    double p_z_tx = 0.9;
    double p_z_rx = 0.9;
    double k_fraction = 0.05;
};

struct SearchSpace {
    ParamRange mu{0.2, 0.8, 0.1};
    ParamRange nu{0.05, 0.3, 0.05};
    ParamRange p_mu{0.5, 0.9, 0.1};
    ParamRange p_z_tx{0.5, 0.9, 0.1};
    ParamRange p_z_rx{0.5, 0.9, 0.1};
    /// Searched only when search_k is set; otherwise lo is used.
    ParamRange k_fraction = ParamRange::fixed(0.05);
    bool search_k = false;
    /// Use one basis probability for both ends (p_z_rx follows p_z_tx).
    bool tie_basis_choice = true;

    /// Throws std::invalid_argument when a probability range leaves (0,1),
    /// an intensity range leaves (0,1], or no point has nu < mu.
    void validate() const;
    bool contains(const SearchPoint& p) const;
    /// Every grid point with nu < mu.
    std::vector<SearchPoint> grid() const;
};

struct Evaluation {
    SearchPoint point;
    bool feasible = false;
    double rate_bits_per_s = 0.0;
    double block_length = 0.0;
    double p_sec = 1.0;
    std::string diagnosis;
};

/// Rate at one parameter point from expected statistics, with both links at
/// the channel distance: expected counts, minimum signature length for the
/// target p_sec, then signature time. Deterministic.
Evaluation evaluate(const SearchPoint& point, double n_pulses, const ChannelParams& ch, const SecurityParams& sp);

enum class SearchStrategy { Grid, GridThenDescent };

struct OptimizeResult {
    Evaluation best;
    std::size_t evaluations = 0;
    std::string diagnosis;  ///< set when every point was infeasible
};

/// Ordering used to pick the winner: higher rate, then smaller mu, smaller
/// nu, larger p_mu, smaller p_z_tx, smaller p_z_rx, smaller k_fraction.
bool better(const Evaluation& a, const Evaluation& b);

using Objective = std::function<Evaluation(const SearchPoint&)>;

/// Grid scan, then (optionally) coordinate descent from the best grid point
/// with the step halved until it drops below 1/16 of the grid step.
OptimizeResult optimize(const SearchSpace& space, const Objective& objective,
                        SearchStrategy strategy = SearchStrategy::GridThenDescent);

OptimizeResult optimize(const SearchSpace& space, double n_pulses, const ChannelParams& ch, const SecurityParams& sp,
                        SearchStrategy strategy = SearchStrategy::GridThenDescent);

PulseConfig to_pulse_config(const SearchPoint& p, double n_pulses);
SearchPoint to_search_point(const PulseConfig& pc, double k_fraction = 0.05);

}  // namespace qds
