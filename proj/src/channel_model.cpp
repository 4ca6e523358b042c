#include "qds/channel_model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "qds/rng.hpp"

namespace qds {

std::string_view to_string(Basis b) noexcept { return b == Basis::Z ? "Z" : "X"; }
std::string_view to_string(Intensity i) noexcept { return i == Intensity::Signal ? "mu" : "nu"; }

namespace {

void require(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
}

std::int64_t draw_binomial(Rng& rng, std::int64_t trials, double p) {
    if (trials <= 0 || p <= 0.0) return 0;
    if (p >= 1.0) return trials;
    std::binomial_distribution<std::int64_t> dist(trials, p);
    return dist(rng);
}

}  // namespace

void PulseConfig::validate() const {
    require(nu > 0.0 && nu < mu, "PulseConfig: need 0 < nu < mu");
    require(p_mu > 0.0 && p_mu < 1.0, "PulseConfig: p_mu must lie in (0,1)");
    require(p_z_tx > 0.0 && p_z_tx < 1.0, "PulseConfig: p_z_tx must lie in (0,1)");
    require(p_z_rx > 0.0 && p_z_rx < 1.0, "PulseConfig: p_z_rx must lie in (0,1)");
    require(n_pulses >= 1.0, "PulseConfig: n_pulses must be >= 1");
}

void ChannelParams::validate() const {
    require(distance_km >= 0.0, "ChannelParams: distance_km must be >= 0");
    require(fiber_loss_db_per_km >= 0.0, "ChannelParams: fiber_loss_db_per_km must be >= 0");
    require(rx_loss_db >= 0.0, "ChannelParams: rx_loss_db must be >= 0");
    require(det_efficiency >= 0.0 && det_efficiency <= 1.0, "ChannelParams: det_efficiency must lie in [0,1]");
    require(dark_count_rate_hz >= 0.0, "ChannelParams: dark_count_rate_hz must be >= 0");
    require(gate_window_s >= 0.0, "ChannelParams: gate_window_s must be >= 0");
    require(misalignment >= 0.0 && misalignment <= 1.0, "ChannelParams: misalignment must lie in [0,1]");
    require(clock_hz >= 0.0, "ChannelParams: clock_hz must be >= 0");
    require(duty_cycle > 0.0 && duty_cycle <= 1.0, "ChannelParams: duty_cycle must lie in (0,1]");
}

ObservedCounts ObservedCounts::scaled(double factor) const noexcept {
    ObservedCounts out = *this;
    for (auto& row : out.cells) {
        for (auto& c : row) {
            c.n *= factor;
            c.m *= factor;
        }
    }
    return out;
}

void ObservedCounts::validate() const {
    for (Basis b : kBases) {
        for (Intensity i : kIntensities) {
            const CellCounts& c = at(b, i);
            const std::string cell = std::string(to_string(b)) + "," + std::string(to_string(i));
            if (c.n < 0.0 || c.m < 0.0) throw std::invalid_argument("negative count in cell " + cell);
            if (c.m > c.n) throw std::invalid_argument("error count exceeds detections in cell " + cell);
        }
    }
}

double total_efficiency(const ChannelParams& ch) {
    const double loss_db = ch.fiber_loss_db_per_km * ch.distance_km + ch.rx_loss_db;
    return ch.det_efficiency * std::pow(10.0, -loss_db / 10.0);
}

double background_yield(const ChannelParams& ch) {
    return 2.0 * ch.dark_count_rate_hz * ch.gate_window_s;
}

GainModel gain_model(double intensity, double efficiency, double background, double misalignment) {
    const double survive = std::exp(-efficiency * intensity);
    const double click = -std::expm1(-efficiency * intensity);
    return {click + background * survive, 0.5 * background * survive + misalignment * click};
}

GainModel photon_yield(int photons, double efficiency, double background, double misalignment) {
    const double log_miss = photons == 0 ? 0.0 : photons * std::log1p(-efficiency);
    const double miss = std::exp(log_miss);
    const double click = -std::expm1(log_miss);
    return {click + background * miss, 0.5 * background * miss + misalignment * click};
}

ObservedCounts expected_statistics(const PulseConfig& pc, const ChannelParams& ch) {
    const double eta = total_efficiency(ch);
    const double y0 = background_yield(ch);
    ObservedCounts out;
    for (Intensity i : kIntensities) {
        const GainModel g = gain_model(pc.intensity(i), eta, y0, ch.misalignment);
        for (Basis b : kBases) {
            const double pulses = pc.n_pulses * pc.probability(i) * pc.sifted_fraction(b) * ch.duty_cycle;
            out.at(b, i) = {pulses * g.gain, pulses * g.error_gain};
        }
    }
    return out;
}

ObservedCounts sample_statistics(const PulseConfig& pc, const ChannelParams& ch, std::uint64_t seed) {
    Rng rng = make_stream(seed, 0, StreamPurpose::ChannelSampling);
    const double eta = total_efficiency(ch);
    const double y0 = background_yield(ch);

    // Multinomial split of N_t over the four sifted cells plus "discarded".
    auto remaining = static_cast<std::int64_t>(std::llround(pc.n_pulses));
    double remaining_prob = 1.0;
    ObservedCounts out;
    for (Intensity i : kIntensities) {
        const GainModel g = gain_model(pc.intensity(i), eta, y0, ch.misalignment);
        for (Basis b : kBases) {
            const double p_cell = pc.probability(i) * pc.sifted_fraction(b) * ch.duty_cycle;
            const double conditional = remaining_prob > 0.0 ? std::min(1.0, p_cell / remaining_prob) : 0.0;
            const std::int64_t pulses = draw_binomial(rng, remaining, conditional);
            remaining -= pulses;
            remaining_prob -= p_cell;

            const std::int64_t detections = draw_binomial(rng, pulses, g.gain);
            const std::int64_t errors = draw_binomial(rng, detections, g.error_rate());
            out.at(b, i) = {static_cast<double>(detections), static_cast<double>(errors)};
        }
    }
    return out;
}

}  // namespace qds
