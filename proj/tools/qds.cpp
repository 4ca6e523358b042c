// qds: command-line front end for the one-decoy QDS toolkit.
//
// Exit codes: 0 success, 2 input error, 3 infeasible run or protocol failure.

#include <array>
#include <cstdio>
#include <cstdlib>
#include <future>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "qds/io.hpp"
#include "qds/optimizer.hpp"
#include "qds/protocol.hpp"
#include "qds/security.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitInfeasible = 3;

qds::RunConfig load_run_config(const std::string& path) {
    if (!path.empty()) return qds::load_config(path);
    if (const char* env = std::getenv("QDS_CONFIG"); env && *env) return qds::load_config(env);
    return qds::RunConfig{};
}

void emit(const std::string& text, const std::string& out_path) {
    std::cout << text;
    if (!out_path.empty()) qds::write_file(out_path, text);
}

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

// --------------------------------------------------------------------------

struct EstimateArgs {
    std::string counts;
    std::string config;
    std::optional<double> block_length;
    std::string out;
};

int run_estimate(const EstimateArgs& a) {
    qds::RunConfig cfg = load_run_config(a.config);
    const qds::CountsFile counts = qds::load_counts(a.counts);
    cfg.pulse.n_pulses = counts.n_pulses;
    cfg.channel.distance_km = counts.distance_km;
    if (a.block_length && !(*a.block_length >= 2.0)) throw qds::InputError("--block-length must be >= 2");

    const std::array<qds::LinkObservation, 2> links{qds::LinkObservation{counts.bob_alice, std::nullopt},
                                                    qds::LinkObservation{counts.charlie_alice, std::nullopt}};
    if (a.block_length) {
        const double pool = std::min(links[0].pool_size(), links[1].pool_size());
        if (*a.block_length > pool) throw qds::InputError("--block-length exceeds the Z-basis key pool");
    }
    const qds::SecurityReport report = qds::analyze(links, cfg.pulse, cfg.channel, cfg.security, a.block_length);
    emit(qds::format_report(report, cfg.security), a.out);
    return report.feasible ? kExitOk : kExitInfeasible;
}

// --------------------------------------------------------------------------

struct SimulateArgs {
    std::string config;
    double distance = 0.0;
    std::optional<std::uint64_t> seed;
    bool sampled = false;
    bool optimize = false;
    std::string out;
    std::string counts_out;
    std::string transcript_out;
};

std::string describe_point(const qds::PulseConfig& pc) {
    std::ostringstream s;
    s << "mu=" << qds::format_number(pc.mu) << " nu=" << qds::format_number(pc.nu)
      << " p_mu=" << qds::format_number(pc.p_mu) << " p_z_tx=" << qds::format_number(pc.p_z_tx)
      << " p_z_rx=" << qds::format_number(pc.p_z_rx) << " n_pulses=" << qds::format_number(pc.n_pulses);
    return s.str();
}

std::string messaging_summary(const qds::QdsSession& session, const qds::MessagingOutcome& outcome,
                              const qds::Thresholds& th) {
    std::ostringstream s;
    const std::size_t half = session.block_length() / 2;
    std::map<std::string, int> kinds;
    for (const auto& m : session.transcript().messages()) ++kinds[std::string(qds::to_string(m.kind))];
    s << "messaging (m=" << outcome.bundle.message << ", L=" << session.block_length() << ")\n";
    s << "  thresholds            s_alpha=" << fmt("%.4f", th.s_alpha) << " s_upsilon=" << fmt("%.4f", th.s_upsilon)
      << '\n';
    s << "  Bob     mismatches    kept=" << outcome.bob.mismatches.kept << "/" << half
      << " forwarded=" << outcome.bob.mismatches.forwarded << "/" << half << " -> "
      << qds::to_string(outcome.bob.verdict) << '\n';
    if (outcome.charlie) {
        s << "  Charlie mismatches    kept=" << outcome.charlie->mismatches.kept << "/" << half
          << " forwarded=" << outcome.charlie->mismatches.forwarded << "/" << half << " -> "
          << qds::to_string(outcome.charlie->verdict) << '\n';
    } else {
        s << "  Charlie               no verdict (aborted by Bob)\n";
    }
    s << "  transcript            " << session.transcript().messages().size() << " messages:";
    for (const auto& [k, n] : kinds) s << ' ' << k << '=' << n;
    s << '\n';
    return s.str();
}

std::string kgp_summary(const char* name, const qds::KgpOutput& k) {
    std::ostringstream s;
    s << "  " << name << (k.mode == qds::KgpMode::BitLevel ? " (bit-level)" : " (aggregate)") << ": Z detections "
      << qds::format_number(k.counts.detections(qds::Basis::Z)) << ", X detections "
      << qds::format_number(k.counts.detections(qds::Basis::X)) << ", test errors " << k.test_errors << "/"
      << k.test_size << ", pool " << k.pool.remaining() << " bits\n";
    return s.str();
}

int run_simulate(const SimulateArgs& a) {
    qds::RunConfig cfg = load_run_config(a.config);
    if (!(a.distance >= 0.0)) throw qds::InputError("--distance must be >= 0");
    cfg.channel.distance_km = a.distance;
    const std::uint64_t seed = a.seed.value_or(cfg.seed);
    std::ostringstream text;

    if (a.optimize) {
        const qds::OptimizeResult opt = qds::optimize(qds::SearchSpace{}, cfg.pulse.n_pulses, cfg.channel, cfg.security);
        if (!opt.best.feasible) {
            std::cout << "optimizer: " << opt.diagnosis << " at " << a.distance << " km\n";
            return kExitInfeasible;
        }
        cfg.pulse = qds::to_pulse_config(opt.best.point, cfg.pulse.n_pulses);
        text << "optimizer: " << opt.evaluations << " evaluations\n";
    }
    text << "source: " << describe_point(cfg.pulse) << '\n';
    text << "distance_km: " << qds::format_number(a.distance) << '\n';

    qds::CountsFile counts{a.distance, cfg.pulse.n_pulses, {}, {}};
    if (a.sampled) {
        counts.bob_alice = qds::sample_statistics(cfg.pulse, cfg.channel, seed);
        counts.charlie_alice = qds::sample_statistics(cfg.pulse, cfg.channel, seed + 1);
        text << "statistics: sampled (seed " << seed << ")\n";
    } else {
        counts.bob_alice = qds::expected_statistics(cfg.pulse, cfg.channel);
        counts.charlie_alice = counts.bob_alice;
        text << "statistics: expected\n";
    }
    if (!a.counts_out.empty()) qds::write_file(a.counts_out, qds::format_counts(counts));

    const std::array<qds::LinkObservation, 2> links{qds::LinkObservation{counts.bob_alice, std::nullopt},
                                                    qds::LinkObservation{counts.charlie_alice, std::nullopt}};
    const qds::SecurityReport report = qds::analyze(links, cfg.pulse, cfg.channel, cfg.security);
    text << qds::format_report(report, cfg.security);
    if (!report.feasible) {
        emit(text.str(), a.out);
        return kExitInfeasible;
    }

    // End-to-end signing at the solved block length.
    const auto L = static_cast<std::size_t>(report.block_length);
    const auto k = static_cast<std::size_t>(report.test_size);
    try {
        qds::Transcript kgp_log;
        qds::KgpOutput bob = qds::run_kgp(cfg.pulse, cfg.channel, seed, {k, L, qds::Role::Bob}, &kgp_log);
        qds::KgpOutput charlie = qds::run_kgp(cfg.pulse, cfg.channel, seed, {k, L, qds::Role::Charlie}, &kgp_log);
        text << "key generation\n" << kgp_summary("Bob-Alice", bob) << kgp_summary("Charlie-Alice", charlie);
        qds::QdsSession session(std::move(bob), std::move(charlie), L, seed);
        const qds::MessagingOutcome outcome = session.run_messaging(0, report.thresholds);
        text << messaging_summary(session, outcome, report.thresholds);
        if (!a.transcript_out.empty()) qds::write_file(a.transcript_out, kgp_log.to_jsonl() + session.transcript().to_jsonl());
    } catch (const qds::ProtocolError& e) {
        text << "messaging: protocol failure: " << e.what() << '\n';
        emit(text.str(), a.out);
        return kExitInfeasible;
    }
    emit(text.str(), a.out);
    return kExitOk;
}

// --------------------------------------------------------------------------

struct RateCurveArgs {
    std::string config;
    double from = 0.0;
    double to = 0.0;
    double step = 0.0;
    std::string out;
    bool fixed = false;
};

int run_rate_curve(const RateCurveArgs& a) {
    const qds::RunConfig cfg = load_run_config(a.config);
    if (!(a.step > 0.0)) throw qds::InputError("--step must be > 0");
    if (!(a.from >= 0.0) || a.to < a.from) throw qds::InputError("need 0 <= --from <= --to");

    std::vector<double> distances;
    for (std::size_t i = 0;; ++i) {
        const double d = a.from + static_cast<double>(i) * a.step;
        if (d >= a.to - 1e-9) break;
        distances.push_back(d);
    }
    auto point = [&cfg, fixed = a.fixed](double d) {
        qds::ChannelParams ch = cfg.channel;
        ch.distance_km = d;
        qds::Evaluation ev = fixed ? qds::evaluate(qds::to_search_point(cfg.pulse, cfg.security.k_fraction),
                                                   cfg.pulse.n_pulses, ch, cfg.security)
                                   : qds::optimize(qds::SearchSpace{}, cfg.pulse.n_pulses, ch, cfg.security).best;
        return qds::RateRow{d, ev.feasible ? ev.rate_bits_per_s : 0.0, ev.block_length, ev.feasible ? ev.p_sec : 1.0,
                            ev.feasible};
    };
    std::vector<std::future<qds::RateRow>> jobs;
    for (double d : distances) jobs.push_back(std::async(std::launch::async, point, d));
    std::vector<qds::RateRow> rows;
    for (auto& j : jobs) rows.push_back(j.get());
    const std::string csv = qds::format_rate_csv(rows);
    if (a.out.empty()) {
        std::cout << csv;
    } else {
        qds::write_file(a.out, csv);
    }
    return kExitOk;
}

// --------------------------------------------------------------------------

struct DemoArgs {
    std::string config;
    int message = 0;
    std::optional<std::uint64_t> seed;
    double distance = 0.0;
    std::optional<std::size_t> block_length;
    std::optional<double> s_alpha;
    std::optional<double> s_upsilon;
    std::string transcript_out;
};

int run_demo_sign(const DemoArgs& a) {
    qds::RunConfig cfg = load_run_config(a.config);
    if (cfg.pulse.n_pulses > qds::kBitLevelPulseCap) {
        throw qds::InputError("demo-sign needs n_pulses <= " + qds::format_number(qds::kBitLevelPulseCap));
    }
    if (!(a.distance >= 0.0)) throw qds::InputError("--distance must be >= 0");
    if (a.block_length && (*a.block_length < 2 || *a.block_length % 2 != 0)) {
        throw qds::InputError("--block-length must be even and >= 2");
    }
    if (a.s_alpha.has_value() != a.s_upsilon.has_value()) throw qds::InputError("give both --s-alpha and --s-upsilon");
    if (a.s_alpha && !(*a.s_alpha > 0.0 && *a.s_alpha < *a.s_upsilon && *a.s_upsilon < 0.5)) {
        throw qds::InputError("need 0 < s_alpha < s_upsilon < 0.5");
    }
    cfg.channel.distance_km = a.distance;
    const std::uint64_t seed = a.seed.value_or(cfg.seed);

    const qds::ObservedCounts expected = qds::expected_statistics(cfg.pulse, cfg.channel);
    const std::array<qds::LinkObservation, 2> links{qds::LinkObservation{expected, std::nullopt},
                                                    qds::LinkObservation{expected, std::nullopt}};
    std::size_t L = 0;
    qds::Thresholds th;
    if (a.s_alpha && a.block_length) {
        L = *a.block_length;
        th = {*a.s_alpha, *a.s_upsilon, true};
    } else {
        std::optional<double> fixed_length;
        if (a.block_length) fixed_length = static_cast<double>(*a.block_length);
        const qds::SecurityReport report = qds::analyze(links, cfg.pulse, cfg.channel, cfg.security, fixed_length);
        if (!report.feasible && !a.s_alpha) {
            std::cout << "infeasible: " << report.diagnosis << '\n';
            return kExitInfeasible;
        }
        L = static_cast<std::size_t>(report.block_length);
        th = a.s_alpha ? qds::Thresholds{*a.s_alpha, *a.s_upsilon, true} : report.thresholds;
    }
    if (L == 0) {
        std::cout << "infeasible: no usable block length\n";
        return kExitInfeasible;
    }
    const auto k = static_cast<std::size_t>(cfg.security.test_size(static_cast<double>(L)));

    std::ostringstream text;
    text << "source: " << describe_point(cfg.pulse) << '\n';
    text << "distance_km: " << qds::format_number(a.distance) << '\n';
    try {
        qds::Transcript kgp_log;
        qds::KgpOutput bob = qds::run_kgp(cfg.pulse, cfg.channel, seed, {k, L, qds::Role::Bob}, &kgp_log);
        qds::KgpOutput charlie = qds::run_kgp(cfg.pulse, cfg.channel, seed, {k, L, qds::Role::Charlie}, &kgp_log);
        text << "key generation (k=" << k << ")\n" << kgp_summary("Bob-Alice", bob) << kgp_summary("Charlie-Alice", charlie);
        qds::QdsSession session(std::move(bob), std::move(charlie), L, seed);
        const qds::MessagingOutcome outcome = session.run_messaging(a.message, th);
        text << messaging_summary(session, outcome, th);
        for (const auto& m : session.transcript().messages()) {
            text << "  #" << m.seq << ' ' << qds::to_string(m.kind) << ' ' << qds::to_string(m.sender) << " -> "
                 << qds::to_string(m.receiver) << ' ' << m.digest() << '\n';
        }
        if (!a.transcript_out.empty()) qds::write_file(a.transcript_out, kgp_log.to_jsonl() + session.transcript().to_jsonl());
    } catch (const qds::ProtocolError& e) {
        std::cout << text.str() << "protocol failure: " << e.what() << '\n';
        return kExitInfeasible;
    }
    std::cout << text.str();
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"One-decoy quantum digital signature simulator and analysis toolkit"};
    app.require_subcommand(1);

    EstimateArgs est;
    auto* estimate = app.add_subcommand("estimate", "Security analysis of a two-link counts file");
    estimate->add_option("--counts", est.counts, "Counts CSV")->required();
    estimate->add_option("--config", est.config, "Config file (default: $QDS_CONFIG)");
    estimate->add_option("--block-length", est.block_length, "Signature block length L (solved when omitted)");
    estimate->add_option("--out", est.out, "Also write the report here");

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "Model both links at a distance and run the full pipeline");
    simulate->add_option("--config", sim.config, "Config file (default: $QDS_CONFIG)");
    simulate->add_option("--distance", sim.distance, "Fiber length in km")->required();
    simulate->add_option("--seed", sim.seed, "Seed (default: config seed)");
    simulate->add_flag("--sampled", sim.sampled, "Sample counts instead of using expectations");
    simulate->add_flag("--optimize", sim.optimize, "Choose source parameters with the optimizer");
    simulate->add_option("--out", sim.out, "Also write the report here");
    simulate->add_option("--counts-out", sim.counts_out, "Write the link counts as a counts CSV");
    simulate->add_option("--transcript", sim.transcript_out, "Write the classical transcript as JSON lines");

    RateCurveArgs rc;
    auto* curve = app.add_subcommand("rate-curve", "Optimized signature rate over a distance range [from, to)");
    curve->add_option("--config", rc.config, "Config file (default: $QDS_CONFIG)");
    curve->add_option("--from", rc.from, "First distance in km")->required();
    curve->add_option("--to", rc.to, "End of the range in km (exclusive)")->required();
    curve->add_option("--step", rc.step, "Distance step in km")->required();
    curve->add_option("--out", rc.out, "CSV output (stdout when omitted)");
    curve->add_flag("--fixed", rc.fixed, "Use the config's source parameters instead of optimizing");

    DemoArgs demo;
    auto* demo_sign = app.add_subcommand("demo-sign", "Bit-level KGP and one signed message bit");
    demo_sign->add_option("--config", demo.config, "Config file (default: $QDS_CONFIG)");
    demo_sign->add_option("--message-bit", demo.message, "Message bit")->required()->check(CLI::IsMember({0, 1}));
    demo_sign->add_option("--seed", demo.seed, "Seed (default: config seed)");
    demo_sign->add_option("--distance", demo.distance, "Fiber length in km (default 0)");
    demo_sign->add_option("--block-length", demo.block_length, "Signature block length L (solved when omitted)");
    demo_sign->add_option("--s-alpha", demo.s_alpha, "Override Bob's threshold");
    demo_sign->add_option("--s-upsilon", demo.s_upsilon, "Override Charlie's threshold");
    demo_sign->add_option("--transcript", demo.transcript_out, "Write the classical transcript as JSON lines");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitInput;
    }

    try {
        if (*estimate) return run_estimate(est);
        if (*simulate) return run_simulate(sim);
        if (*curve) return run_rate_curve(rc);
        if (*demo_sign) return run_demo_sign(demo);
    } catch (const qds::InputError& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return kExitInput;
    } catch (const std::invalid_argument& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return kExitInput;
    } catch (const std::domain_error& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInfeasible;
    }
    return kExitInput;
}
