#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

#include "qds/channel_model.hpp"
#include "qds/security.hpp"

namespace qds {

/// Malformed or out-of-range input. The message names the offending key,
/// cell or line.
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct RunConfig {
    PulseConfig pulse;
    ChannelParams channel;
    SecurityParams security;
    std::uint64_t seed = 1;
};

/// Flat `key = value` text; `#` starts a comment. Keys missing from the text
/// keep their defaults; unknown or repeated keys are rejected.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);
std::string format_config(const RunConfig& cfg);

/// Two-link count table:
///
///   # distance_km=103
///   # n_pulses=2e12
///   link,basis,intensity,n,m
///   bob_alice,Z,mu,4.17e9,1.3e7
///   ...
struct CountsFile {
    double distance_km = 0.0;
    double n_pulses = 0.0;
    ObservedCounts bob_alice;
    ObservedCounts charlie_alice;
};

CountsFile parse_counts(std::string_view text);
CountsFile load_counts(const std::filesystem::path& path);
/// Values are written in shortest round-trip form, so parse_counts gives
/// back identical counts.
std::string format_counts(const CountsFile& counts);

/// Plain-text security report: headline values in table order, the raw and
/// clamped failure bounds, and the eps_PE budget.
std::string format_report(const SecurityReport& report, const SecurityParams& sp);

struct RateRow {
    double distance_km = 0.0;
    double rate_bits_per_s = 0.0;
    double block_length = 0.0;
    double p_sec = 1.0;
    bool feasible = false;
};

/// CSV with header `distance_km,rate_bps,L,p_sec,feasible`.
std::string format_rate_csv(std::span<const RateRow> rows);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

/// Shortest decimal form that parses back to the same double.
std::string format_number(double v);
/// Whole-string decimal parse; throws InputError mentioning `what`.
double parse_number(std::string_view text, std::string_view what);

}  // namespace qds
