#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace qds {

enum class Basis { Z = 0, X = 1 };
enum class Intensity { Signal = 0, Decoy = 1 };

inline constexpr std::array<Basis, 2> kBases{Basis::Z, Basis::X};
inline constexpr std::array<Intensity, 2> kIntensities{Intensity::Signal, Intensity::Decoy};

std::string_view to_string(Basis b) noexcept;
std::string_view to_string(Intensity i) noexcept;

/// Source-side settings of a one-decoy transmitter: two nonzero intensities,
/// no vacuum state.
struct PulseConfig {
    double mu = 0.5;       ///< signal mean photon number
    double nu = 0.1;       ///< decoy mean photon number
    double p_mu = 0.7;     ///< probability of sending the signal intensity
    double p_z_tx = 0.9;   ///< transmitter Z-basis probability
    double p_z_rx = 0.9;   ///< receiver Z-basis probability
    double n_pulses = 1e6; ///< total pulses N_t per link

    /// Throws std::invalid_argument naming the violated invariant.
    void validate() const;

    double intensity(Intensity i) const noexcept { return i == Intensity::Signal ? mu : nu; }
    double probability(Intensity i) const noexcept { return i == Intensity::Signal ? p_mu : 1.0 - p_mu; }
    /// Probability that transmitter and receiver both chose basis b.
    double sifted_fraction(Basis b) const noexcept {
        return b == Basis::Z ? p_z_tx * p_z_rx : (1.0 - p_z_tx) * (1.0 - p_z_rx);
    }
};

struct ChannelParams {
    double distance_km = 0.0;
    double fiber_loss_db_per_km = 0.175;
    double rx_loss_db = 1.53;
    double det_efficiency = 0.65;
    double dark_count_rate_hz = 20.0;
    double gate_window_s = 2e-9;
    double misalignment = 0.003;
    double clock_hz = 50e6;
    double duty_cycle = 0.86;

    void validate() const;
};

/// Detection count n and error count m for one (basis, intensity) cell.
struct CellCounts {
    double n = 0.0;
    double m = 0.0;

    friend bool operator==(const CellCounts&, const CellCounts&) = default;
};

/// Per-basis, per-intensity detection and error counts of one link. Holds
/// either integer observations or real-valued expectations.
struct ObservedCounts {
    std::array<std::array<CellCounts, 2>, 2> cells{};

    CellCounts& at(Basis b, Intensity i) noexcept {
        return cells[static_cast<int>(b)][static_cast<int>(i)];
    }
    const CellCounts& at(Basis b, Intensity i) const noexcept {
        return cells[static_cast<int>(b)][static_cast<int>(i)];
    }
    double detections(Basis b) const noexcept { return at(b, Intensity::Signal).n + at(b, Intensity::Decoy).n; }
    double errors(Basis b) const noexcept { return at(b, Intensity::Signal).m + at(b, Intensity::Decoy).m; }
    /// Every cell multiplied by factor.
    ObservedCounts scaled(double factor) const noexcept;
    /// Throws std::invalid_argument if any cell has m > n or negative entries.
    void validate() const;

    friend bool operator==(const ObservedCounts&, const ObservedCounts&) = default;
};

/// det_efficiency * 10^(-(loss*distance + rx_loss)/10)
double total_efficiency(const ChannelParams& ch);

/// Background yield Y0: dark-count probability per gate for two detectors.
double background_yield(const ChannelParams& ch);

/// Gain and error-gain of one intensity.
struct GainModel {
    double gain;       ///< Q = 1 - (1 - Y0) e^{-eta lambda}
    double error_gain; ///< E Q = Y0/2 e^{-eta lambda} + e_mis (1 - e^{-eta lambda})

    double error_rate() const noexcept { return gain > 0.0 ? error_gain / gain : 0.0; }
};

GainModel gain_model(double intensity, double efficiency, double background, double misalignment);

/// Per-photon-number yield Y_n = 1 - (1 - Y0)(1 - eta)^n and error-yield
/// e_n Y_n = Y0/2 (1 - eta)^n + e_mis (1 - (1 - eta)^n). Averaging over a
/// Poisson photon number reproduces gain_model.
GainModel photon_yield(int photons, double efficiency, double background, double misalignment);

/// Expected counts of one link. Counts include the duty cycle.
ObservedCounts expected_statistics(const PulseConfig& pc, const ChannelParams& ch);

/// Integer counts drawn cell-by-cell: pulses per (basis-pair, intensity)
/// cell from a sequential-binomial multinomial split, detections
/// Binomial(cell, Q), errors Binomial(detections, E). Deterministic in seed.
ObservedCounts sample_statistics(const PulseConfig& pc, const ChannelParams& ch, std::uint64_t seed);

}  // namespace qds
