#include "qds/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

namespace qds {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = s.find(sep, start);
        out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

std::vector<std::string_view> lines_of(std::string_view text) {
    std::vector<std::string_view> out = split(text, '\n');
    for (auto& l : out)
        if (!l.empty() && l.back() == '\r') l.remove_suffix(1);
    return out;
}

}  // namespace

std::string format_number(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double parse_number(std::string_view text, std::string_view what) {
    text = trim(text);
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    double v = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size() || !std::isfinite(v)) {
        throw InputError(std::string(what) + ": not a number: '" + std::string(text) + "'");
    }
    return v;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    out << contents;
    if (!out) throw InputError("write failed: " + path.string());
}

// ---------------------------------------------------------------------------
// Config

namespace {

struct ConfigKey {
    const char* name;
    void (*apply)(RunConfig&, double);
};

FailureProb failure_prob(double v, const char* key) {
    try {
        return FailureProb(v);
    } catch (const std::domain_error&) {
        throw InputError(std::string(key) + ": must lie in (0,1], got " + format_number(v));
    }
}

const std::vector<ConfigKey>& config_keys() {
    static const std::vector<ConfigKey> keys = {
        {"mu", [](RunConfig& c, double v) { c.pulse.mu = v; }},
        {"nu", [](RunConfig& c, double v) { c.pulse.nu = v; }},
        {"p_mu", [](RunConfig& c, double v) { c.pulse.p_mu = v; }},
        {"p_z_tx", [](RunConfig& c, double v) { c.pulse.p_z_tx = v; }},
        {"p_z_rx", [](RunConfig& c, double v) { c.pulse.p_z_rx = v; }},
        {"n_pulses", [](RunConfig& c, double v) { c.pulse.n_pulses = v; }},
        {"clock_hz", [](RunConfig& c, double v) { c.channel.clock_hz = v; }},
        {"fiber_loss_db_per_km", [](RunConfig& c, double v) { c.channel.fiber_loss_db_per_km = v; }},
        {"rx_loss_db", [](RunConfig& c, double v) { c.channel.rx_loss_db = v; }},
        {"det_efficiency", [](RunConfig& c, double v) { c.channel.det_efficiency = v; }},
        {"dark_count_rate_hz", [](RunConfig& c, double v) { c.channel.dark_count_rate_hz = v; }},
        {"gate_window_s", [](RunConfig& c, double v) { c.channel.gate_window_s = v; }},
        {"misalignment", [](RunConfig& c, double v) { c.channel.misalignment = v; }},
        {"duty_cycle", [](RunConfig& c, double v) { c.channel.duty_cycle = v; }},
        {"eps_pe", [](RunConfig& c, double v) { c.security.eps_pe = failure_prob(v, "eps_pe"); }},
        {"alpha", [](RunConfig& c, double v) { c.security.alpha = failure_prob(v, "alpha"); }},
        {"eps", [](RunConfig& c, double v) { c.security.eps = failure_prob(v, "eps"); }},
        {"target_psec",
         [](RunConfig& c, double v) {
             if (!(v > 0.0 && v <= 1.0)) throw InputError("target_psec: must lie in (0,1]");
             c.security.target_psec = v;
         }},
        {"k_test",
         [](RunConfig& c, double v) {
             if (!(v >= 1.0) || v != std::floor(v)) throw InputError("k_test: must be a positive integer");
             c.security.k_test = v;
         }},
        {"seed", nullptr},  // integer-valued, parsed separately
    };
    return keys;
}

}  // namespace

RunConfig parse_config(std::string_view text) {
    RunConfig cfg;
    std::map<std::string, int, std::less<>> seen;
    int line_no = 0;
    for (std::string_view raw : lines_of(text)) {
        ++line_no;
        std::string_view line = raw.substr(0, raw.find('#'));
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        const std::string where = "config line " + std::to_string(line_no);
        if (eq == std::string_view::npos) throw InputError(where + ": expected key = value");
        const std::string key(trim(line.substr(0, eq)));
        const std::string_view value = trim(line.substr(eq + 1));
        const auto& keys = config_keys();
        const auto it = std::find_if(keys.begin(), keys.end(), [&](const ConfigKey& k) { return key == k.name; });
        if (it == keys.end()) throw InputError(where + ": unknown key '" + key + "'");
        if (seen.count(key)) throw InputError(where + ": key '" + key + "' repeated");
        seen[key] = line_no;
        if (!it->apply) {
            std::uint64_t s = 0;
            const auto res = std::from_chars(value.data(), value.data() + value.size(), s);
            if (value.empty() || res.ec != std::errc() || res.ptr != value.data() + value.size()) {
                throw InputError(where + ": seed must be a non-negative integer");
            }
            cfg.seed = s;
            continue;
        }
        it->apply(cfg, parse_number(value, key));
    }
    try {
        cfg.pulse.validate();
        cfg.channel.validate();
    } catch (const std::invalid_argument& e) {
        throw InputError(std::string("config: ") + e.what());
    }
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) { return parse_config(read_file(path)); }

std::string format_config(const RunConfig& c) {
    std::ostringstream out;
    auto kv = [&out](const char* k, double v) { out << k << " = " << format_number(v) << '\n'; };
    kv("mu", c.pulse.mu);
    kv("nu", c.pulse.nu);
    kv("p_mu", c.pulse.p_mu);
    kv("p_z_tx", c.pulse.p_z_tx);
    kv("p_z_rx", c.pulse.p_z_rx);
    kv("n_pulses", c.pulse.n_pulses);
    kv("clock_hz", c.channel.clock_hz);
    kv("fiber_loss_db_per_km", c.channel.fiber_loss_db_per_km);
    kv("rx_loss_db", c.channel.rx_loss_db);
    kv("det_efficiency", c.channel.det_efficiency);
    kv("dark_count_rate_hz", c.channel.dark_count_rate_hz);
    kv("gate_window_s", c.channel.gate_window_s);
    kv("misalignment", c.channel.misalignment);
    kv("duty_cycle", c.channel.duty_cycle);
    kv("eps_pe", c.security.eps_pe.value());
    kv("alpha", c.security.alpha.value());
    kv("eps", c.security.eps.value());
    kv("target_psec", c.security.target_psec);
    if (c.security.k_test) kv("k_test", *c.security.k_test);
    out << "seed = " << c.seed << '\n';
    return out.str();
}

// ---------------------------------------------------------------------------
// Counts

namespace {

constexpr std::string_view kCountsHeader = "link,basis,intensity,n,m";
constexpr std::string_view kLinkNames[2] = {"bob_alice", "charlie_alice"};

}  // namespace

CountsFile parse_counts(std::string_view text) {
    CountsFile out;
    bool have_distance = false;
    bool have_pulses = false;
    bool have_header = false;
    bool filled[2][2][2] = {};
    int line_no = 0;
    for (std::string_view raw : lines_of(text)) {
        ++line_no;
        const std::string_view line = trim(raw);
        const std::string where = "counts line " + std::to_string(line_no);
        if (line.empty()) continue;
        if (line.front() == '#') {
            const std::string_view body = trim(line.substr(1));
            const auto eq = body.find('=');
            if (eq == std::string_view::npos) continue;  // free-form comment
            const std::string_view key = trim(body.substr(0, eq));
            const std::string_view value = body.substr(eq + 1);
            if (key == "distance_km") {
                out.distance_km = parse_number(value, where + ": distance_km");
                if (out.distance_km < 0.0) throw InputError(where + ": distance_km must be >= 0");
                have_distance = true;
            } else if (key == "n_pulses") {
                out.n_pulses = parse_number(value, where + ": n_pulses");
                if (!(out.n_pulses >= 1.0)) throw InputError(where + ": n_pulses must be >= 1");
                have_pulses = true;
            } else {
                throw InputError(where + ": unknown metadata key '" + std::string(key) + "'");
            }
            continue;
        }
        if (!have_header) {
            if (line != kCountsHeader) throw InputError(where + ": expected header '" + std::string(kCountsHeader) + "'");
            have_header = true;
            continue;
        }
        const auto fields = split(line, ',');
        if (fields.size() != 5) throw InputError(where + ": expected 5 fields");
        const std::string_view link = trim(fields[0]);
        const std::string_view basis = trim(fields[1]);
        const std::string_view intensity = trim(fields[2]);
        int li = -1;
        for (int i = 0; i < 2; ++i)
            if (link == kLinkNames[i]) li = i;
        if (li < 0) throw InputError(where + ": unknown link '" + std::string(link) + "'");
        if (basis != "Z" && basis != "X") throw InputError(where + ": basis must be Z or X");
        if (intensity != "mu" && intensity != "nu") throw InputError(where + ": intensity must be mu or nu");
        const Basis b = basis == "Z" ? Basis::Z : Basis::X;
        const Intensity in = intensity == "mu" ? Intensity::Signal : Intensity::Decoy;
        const std::string cell = std::string(link) + " " + std::string(basis) + "," + std::string(intensity);
        bool& slot = filled[li][static_cast<int>(b)][static_cast<int>(in)];
        if (slot) throw InputError(where + ": duplicate cell " + cell);
        slot = true;
        const double n = parse_number(fields[3], where + ": n of " + cell);
        const double m = parse_number(fields[4], where + ": m of " + cell);
        if (n < 0.0 || m < 0.0) throw InputError(where + ": negative count in " + cell);
        if (m > n) throw InputError(where + ": error count exceeds detections (m > n) in " + cell);
        (li == 0 ? out.bob_alice : out.charlie_alice).at(b, in) = {n, m};
    }
    if (!have_header) throw InputError("counts: missing header");
    if (!have_distance) throw InputError("counts: missing '# distance_km=' preamble");
    if (!have_pulses) throw InputError("counts: missing '# n_pulses=' preamble");
    for (int li = 0; li < 2; ++li)
        for (Basis b : kBases)
            for (Intensity in : kIntensities)
                if (!filled[li][static_cast<int>(b)][static_cast<int>(in)]) {
                    throw InputError("counts: missing cell " + std::string(kLinkNames[li]) + " " +
                                     std::string(to_string(b)) + "," + std::string(to_string(in)));
                }
    return out;
}

CountsFile load_counts(const std::filesystem::path& path) { return parse_counts(read_file(path)); }

std::string format_counts(const CountsFile& c) {
    std::ostringstream out;
    out << "# distance_km=" << format_number(c.distance_km) << '\n';
    out << "# n_pulses=" << format_number(c.n_pulses) << '\n';
    out << kCountsHeader << '\n';
    for (int li = 0; li < 2; ++li) {
        const ObservedCounts& counts = li == 0 ? c.bob_alice : c.charlie_alice;
        for (Basis b : kBases)
            for (Intensity in : kIntensities) {
                const CellCounts& cell = counts.at(b, in);
                out << kLinkNames[li] << ',' << to_string(b) << ',' << to_string(in) << ','
                    << format_number(cell.n) << ',' << format_number(cell.m) << '\n';
            }
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// Reports

namespace {

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

}  // namespace

std::string format_report(const SecurityReport& r, const SecurityParams& sp) {
    std::ostringstream out;
    auto row = [&out](std::string_view name, const std::string& value) {
        out << "  " << name;
        for (std::size_t i = name.size(); i < 22; ++i) out << ' ';
        out << value << '\n';
    };
    out << "security report\n";
    row("s_z1_lower", fmt("%.6g", r.s_z1_lower));
    row("phi_z1_upper", fmt("%.4f%%", 100.0 * r.phi_z1_upper));
    row("s_alpha", fmt("%.4f%%", 100.0 * r.thresholds.s_alpha));
    row("s_upsilon", fmt("%.4f%%", 100.0 * r.thresholds.s_upsilon));
    row("L", fmt("%.0f", r.block_length));
    row("p_sec", fmt("%.4g", r.p_sec));
    row("rate_bits_per_s", fmt("%.6g", r.rate_bits_per_s));
    row("time_per_bit_s", fmt("%.6g", r.time_per_bit_s));
    out << "estimates\n";
    row("E_upper", fmt("%.4f%%", 100.0 * r.e_upper));
    row("p_E", fmt("%.4f%%", 100.0 * r.p_e));
    row("test_size_k", fmt("%.0f", r.test_size));
    for (std::size_t i = 0; i < r.link_estimates.size(); ++i) {
        const FiniteKeyEstimates& e = r.link_estimates[i];
        out << "  " << (i < 2 ? kLinkNames[i] : std::string_view("link"))
            << ": s_z1=" << fmt("%.6g", e.s_z1_lower) << " phi=" << fmt("%.6g", e.phi_z1_upper)
            << " s_x1=" << fmt("%.6g", e.s_x1_lower) << " v_x1=" << fmt("%.6g", e.v_x1_upper)
            << " E_U=" << fmt("%.6g", e.e_upper);
        if (e.s_z1_infeasible) out << " [s_z1 infeasible]";
        if (e.s_x1_infeasible) out << " [s_x1 infeasible]";
        if (e.phi_saturated) out << " [phi saturated]";
        out << '\n';
    }
    out << "failure bounds (raw / clamped)\n";
    row("p_robust", fmt("%.6g", r.robust.raw) + " / " + fmt("%.6g", r.robust.clamped));
    row("p_repudiation", fmt("%.6g", r.repudiation.raw) + " / " + fmt("%.6g", r.repudiation.clamped));
    row("eps_F", fmt("%.6g", r.eps_f));
    row("p_forge", fmt("%.6g", r.forge.raw) + " / " + fmt("%.6g", r.forge.clamped));
    row("p_sec", fmt("%.6g", r.p_sec_raw) + " / " + fmt("%.6g", r.p_sec));
    row("target_p_sec", fmt("%.6g", sp.target_psec));
    row("p_sec_floor", fmt("%.6g", sp.psec_floor()) + "  (2 eps_PE vs alpha + eps/alpha + 10 eps_PE)");
    out << "eps_PE budget\n";
    const EpsilonBudget budget = sp.budget();
    for (BoundUse use : EpsilonBudget::uses()) row(to_string(use), fmt("%.3g", budget.eps(use).value()));
    row("total", fmt("%.3g", budget.total()));
    out << "status: " << (r.feasible ? "feasible" : "infeasible");
    if (!r.diagnosis.empty()) out << " (" << r.diagnosis << ")";
    out << '\n';
    return out.str();
}

std::string format_rate_csv(std::span<const RateRow> rows) {
    std::ostringstream out;
    out << "distance_km,rate_bps,L,p_sec,feasible\n";
    for (const RateRow& r : rows) {
        out << format_number(r.distance_km) << ',' << format_number(r.rate_bits_per_s) << ','
            << format_number(r.block_length) << ',' << format_number(r.p_sec) << ','
            << (r.feasible ? "true" : "false") << '\n';
    }
    return out.str();
}

}  // namespace qds
