#include "qds/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace qds {

std::string_view to_string(Role r) noexcept {
    switch (r) {
        case Role::Alice: return "Alice";
        case Role::Bob: return "Bob";
        case Role::Charlie: return "Charlie";
    }
    return "?";
}

std::string_view to_string(Phase p) noexcept {
    switch (p) {
        case Phase::Idle: return "Idle";
        case Phase::Kgp: return "KGP";
        case Phase::Sifted: return "Sifted";
        case Phase::PoolReady: return "PoolReady";
        case Phase::Signed: return "Signed";
        case Phase::Verified: return "Verified";
        case Phase::Aborted: return "Aborted";
    }
    return "?";
}

std::string_view to_string(Verdict v) noexcept { return v == Verdict::Accept ? "Accept" : "Reject"; }

std::string_view to_string(MessageKind k) noexcept {
    switch (k) {
        case MessageKind::BasisAnnounce: return "BasisAnnounce";
        case MessageKind::SiftResult: return "SiftResult";
        case MessageKind::TestReveal: return "TestReveal";
        case MessageKind::SymmetrizationForward: return "SymmetrizationForward";
        case MessageKind::Signature: return "Signature";
        case MessageKind::ForwardedSignature: return "ForwardedSignature";
        case MessageKind::Accept: return "Accept";
        case MessageKind::Reject: return "Reject";
        case MessageKind::Abort: return "Abort";
    }
    return "?";
}

namespace {

std::uint32_t party_index(Role r) { return static_cast<std::uint32_t>(r); }

std::string bits_to_string(const BitString& bits) {
    std::string s(bits.size(), '0');
    for (std::size_t i = 0; i < bits.size(); ++i) s[i] = bits[i] ? '1' : '0';
    return s;
}

BitString random_bits(std::size_t n, Rng& rng) {
    BitString out(n);
    std::uint64_t word = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (i % 64 == 0) word = rng();
        out[i] = static_cast<std::uint8_t>((word >> (i % 64)) & 1u);
    }
    return out;
}

std::int64_t draw_binomial(Rng& rng, std::int64_t trials, double p) {
    if (trials <= 0 || p <= 0.0) return 0;
    if (p >= 1.0) return trials;
    return std::binomial_distribution<std::int64_t>(trials, p)(rng);
}

}  // namespace

// ---------------------------------------------------------------------------
// Transcript

std::string ClassicalMessage::digest() const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : payload) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

const ClassicalMessage& Transcript::post(MessageKind kind, Role sender, Role receiver, std::string payload) {
    messages_.push_back({messages_.size(), kind, sender, receiver, std::move(payload)});
    return messages_.back();
}

std::string Transcript::to_jsonl() const {
    std::string out;
    for (const ClassicalMessage& m : messages_) {
        nlohmann::ordered_json j;
        j["seq"] = m.seq;
        j["kind"] = to_string(m.kind);
        j["sender"] = to_string(m.sender);
        j["receiver"] = to_string(m.receiver);
        j["digest"] = m.digest();
        out += j.dump();
        out += '\n';
    }
    return out;
}

std::vector<TranscriptRecord> parse_transcript(std::string_view jsonl) {
    std::vector<TranscriptRecord> out;
    std::istringstream in{std::string(jsonl)};
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto j = nlohmann::json::parse(line);
        out.push_back({j.at("seq").get<std::uint64_t>(), j.at("kind").get<std::string>(),
                       j.at("sender").get<std::string>(), j.at("receiver").get<std::string>(),
                       j.at("digest").get<std::string>()});
    }
    return out;
}

// ---------------------------------------------------------------------------
// KeyPool

KeyPool::KeyPool(BitString transmitter, BitString receiver)
    : transmitter_(std::move(transmitter)), receiver_(std::move(receiver)), size_(transmitter_.size()) {
    if (transmitter_.size() != receiver_.size()) throw std::invalid_argument("KeyPool: string lengths differ");
}

KeyPool KeyPool::synthetic(std::size_t size, double error_rate, Rng rng) {
    KeyPool pool;
    pool.size_ = size;
    pool.synthetic_ = true;
    pool.error_rate_ = error_rate;
    pool.rng_ = rng;
    return pool;
}

KeyPool::Block KeyPool::take(std::size_t length) {
    if (length > remaining()) {
        throw PoolExhausted("key pool exhausted: need " + std::to_string(length) + " bits, " +
                            std::to_string(remaining()) + " left");
    }
    Block block;
    if (synthetic_) {
        block.transmitter = random_bits(length, rng_);
        block.receiver = block.transmitter;
        for (auto& bit : block.receiver) {
            if (uniform01(rng_) < error_rate_) bit ^= 1u;
        }
    } else {
        const auto first = static_cast<std::ptrdiff_t>(cursor_);
        const auto last = first + static_cast<std::ptrdiff_t>(length);
        block.transmitter.assign(transmitter_.begin() + first, transmitter_.begin() + last);
        block.receiver.assign(receiver_.begin() + first, receiver_.begin() + last);
    }
    cursor_ += length;
    return block;
}

// ---------------------------------------------------------------------------
// KGP

KgpOutput run_kgp(const PulseConfig& pc, const ChannelParams& ch, std::uint64_t seed, const KgpRequest& request,
                  Transcript* transcript) {
    pc.validate();
    ch.validate();
    const Role tx = request.transmitter;
    if (tx == Role::Alice) throw std::invalid_argument("run_kgp: Alice is the measuring party");
    const std::uint32_t who = party_index(tx);
    const double eta = total_efficiency(ch);
    const double y0 = background_yield(ch);
    const GainModel gains[2] = {gain_model(pc.mu, eta, y0, ch.misalignment),
                                gain_model(pc.nu, eta, y0, ch.misalignment)};

    KgpOutput out;
    BitString tx_bits;
    BitString rx_bits;
    double sifted_z = 0.0;

    if (pc.n_pulses <= kBitLevelPulseCap) {
        out.mode = KgpMode::BitLevel;
        Rng rng = make_stream(seed, who, StreamPurpose::PulsePreparation);
        // pulses emitted inside the transmission windows
        const auto pulses = static_cast<std::int64_t>(std::llround(pc.n_pulses * ch.duty_cycle));
        for (std::int64_t p = 0; p < pulses; ++p) {
            const int intensity = uniform01(rng) < pc.p_mu ? 0 : 1;
            const bool tx_z = uniform01(rng) < pc.p_z_tx;
            const bool rx_z = uniform01(rng) < pc.p_z_rx;
            const std::uint64_t raw = rng();
            if (tx_z != rx_z) continue;  // discarded at sifting
            const double u = static_cast<double>(raw >> 11) * 0x1.0p-53;
            const GainModel& g = gains[intensity];
            if (u >= g.gain) continue;
            const bool error = u < g.error_gain;
            CellCounts& cell = out.counts.at(tx_z ? Basis::Z : Basis::X, intensity == 0 ? Intensity::Signal : Intensity::Decoy);
            cell.n += 1.0;
            if (error) cell.m += 1.0;
            if (tx_z) {
                const auto bit = static_cast<std::uint8_t>(rng() & 1u);
                tx_bits.push_back(bit);
                rx_bits.push_back(static_cast<std::uint8_t>(bit ^ (error ? 1u : 0u)));
            }
        }
        sifted_z = static_cast<double>(tx_bits.size());
    } else {
        out.mode = KgpMode::Aggregate;
        out.counts = sample_statistics(pc, ch, seed ^ (0x9e3779b97f4a7c15ull * (who + 1)));
        sifted_z = out.counts.detections(Basis::Z);
    }

    if (transcript) {
        const std::string announce = "bases announced for " + std::to_string(static_cast<long long>(pc.n_pulses)) + " pulses";
        transcript->post(MessageKind::BasisAnnounce, tx, Role::Alice, announce);
        transcript->post(MessageKind::BasisAnnounce, Role::Alice, tx, announce);
        transcript->post(MessageKind::SiftResult, Role::Alice, tx,
                         "sifted_z=" + std::to_string(static_cast<long long>(sifted_z)) +
                             ";sifted_x=" + std::to_string(static_cast<long long>(out.counts.detections(Basis::X))));
    }

    const double needed = static_cast<double>(request.test_size) + 2.0 * static_cast<double>(request.block_length);
    if (sifted_z < needed) {
        if (transcript) transcript->post(MessageKind::Abort, Role::Alice, tx, "sifted pool below k + 2L");
        throw ProtocolError("KGP abort: sifted pool of " + std::to_string(static_cast<long long>(sifted_z)) +
                            " bits is below k + 2L = " + std::to_string(static_cast<long long>(needed)));
    }

    Rng test_rng = make_stream(seed, who, StreamPurpose::TestSelection);
    out.test_size = request.test_size;
    if (out.mode == KgpMode::BitLevel) {
        // selection sampling: each position is revealed with probability
        // (still needed)/(still unseen)
        BitString pool_tx;
        BitString pool_rx;
        pool_tx.reserve(tx_bits.size() - request.test_size);
        pool_rx.reserve(tx_bits.size() - request.test_size);
        std::size_t needed_test = request.test_size;
        const std::size_t total = tx_bits.size();
        for (std::size_t i = 0; i < total; ++i) {
            const std::size_t unseen = total - i;
            if (needed_test > 0 && uniform01(test_rng) * static_cast<double>(unseen) < static_cast<double>(needed_test)) {
                --needed_test;
                if (tx_bits[i] != rx_bits[i]) ++out.test_errors;
            } else {
                pool_tx.push_back(tx_bits[i]);
                pool_rx.push_back(rx_bits[i]);
            }
        }
        out.pool = KeyPool(std::move(pool_tx), std::move(pool_rx));
    } else {
        const double z_rate = sifted_z > 0.0 ? out.counts.errors(Basis::Z) / sifted_z : 0.0;
        out.test_errors = static_cast<std::size_t>(
            draw_binomial(test_rng, static_cast<std::int64_t>(request.test_size), z_rate));
        const auto pool_size = static_cast<std::size_t>(sifted_z) - request.test_size;
        out.pool = KeyPool::synthetic(pool_size, z_rate, make_stream(seed, who, StreamPurpose::KeySynthesis));
    }
    if (transcript) {
        transcript->post(MessageKind::TestReveal, tx, Role::Alice,
                         "k=" + std::to_string(out.test_size) + ";errors=" + std::to_string(out.test_errors));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Symmetrization and verification

namespace {

std::pair<KeyHalf, KeyHalf> split_half(const BitString& key, Role origin, Rng& rng) {
    std::vector<std::uint32_t> order(key.size());
    std::iota(order.begin(), order.end(), 0u);
    const std::size_t half = key.size() / 2;
    // partial Fisher-Yates: the first `half` entries are a uniform subset
    for (std::size_t i = 0; i < half; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, order.size() - 1);
        std::swap(order[i], order[pick(rng)]);
    }
    KeyHalf forwarded{origin, {order.begin(), order.begin() + static_cast<std::ptrdiff_t>(half)}, {}};
    KeyHalf kept{origin, {order.begin() + static_cast<std::ptrdiff_t>(half), order.end()}, {}};
    std::sort(forwarded.positions.begin(), forwarded.positions.end());
    std::sort(kept.positions.begin(), kept.positions.end());
    for (auto p : forwarded.positions) forwarded.bits.push_back(key[p]);
    for (auto p : kept.positions) kept.bits.push_back(key[p]);
    return {kept, forwarded};
}

std::size_t half_mismatches(const BitString& signature_key, const KeyHalf& half) {
    if (half.positions.size() != half.bits.size()) throw std::invalid_argument("key half: positions and bits differ in size");
    std::size_t mm = 0;
    for (std::size_t i = 0; i < half.positions.size(); ++i) {
        const auto p = half.positions[i];
        if (p >= signature_key.size()) throw std::invalid_argument("key half: position outside the signature block");
        if (signature_key[p] != half.bits[i]) ++mm;
    }
    return mm;
}

}  // namespace

SymmetrizedPair symmetrize(const BitString& bob_key, const BitString& charlie_key, Rng& rng) {
    if (bob_key.size() != charlie_key.size()) throw std::invalid_argument("symmetrize: key lengths differ");
    if (bob_key.size() % 2 != 0) throw std::invalid_argument("symmetrize: block length must be even");
    auto [bob_kept, bob_forwarded] = split_half(bob_key, Role::Bob, rng);
    auto [charlie_kept, charlie_forwarded] = split_half(charlie_key, Role::Charlie, rng);
    return {SymmetrizedKey{Role::Bob, std::move(bob_kept), std::move(charlie_forwarded)},
            SymmetrizedKey{Role::Charlie, std::move(charlie_kept), std::move(bob_forwarded)}};
}

SymmetrizedPair symmetrize(const BitString& bob_key, const BitString& charlie_key, std::uint64_t seed) {
    Rng rng = make_stream(seed, 0, StreamPurpose::Symmetrization);
    return symmetrize(bob_key, charlie_key, rng);
}

Mismatches count_mismatches(const SignatureBundle& bundle, const SymmetrizedKey& key) {
    if (bundle.k_b.size() != bundle.k_c.size()) throw std::invalid_argument("signature halves differ in length");
    if (key.kept.origin == key.forwarded.origin) throw std::invalid_argument("symmetrized key halves share an origin");
    return {half_mismatches(bundle.key_for(key.kept.origin), key.kept),
            half_mismatches(bundle.key_for(key.forwarded.origin), key.forwarded)};
}

Verdict verify(const Mismatches& mm, double threshold, std::size_t block_length) noexcept {
    const double limit = threshold * static_cast<double>(block_length) / 2.0;
    const bool ok = static_cast<double>(mm.kept) < limit && static_cast<double>(mm.forwarded) < limit;
    return ok ? Verdict::Accept : Verdict::Reject;
}

Verdict verify(const SignatureBundle& bundle, const SymmetrizedKey& key, double threshold, std::size_t block_length) {
    return verify(count_mismatches(bundle, key), threshold, block_length);
}

// ---------------------------------------------------------------------------
// Session

QdsSession::QdsSession(KgpOutput bob_link, KgpOutput charlie_link, std::size_t block_length, std::uint64_t seed)
    : bob_(std::move(bob_link)),
      charlie_(std::move(charlie_link)),
      block_length_(block_length),
      sym_rng_(make_stream(seed, 0, StreamPurpose::Symmetrization)),
      parties_{{Role::Alice, Phase::Idle}, {Role::Bob, Phase::Idle}, {Role::Charlie, Phase::Idle}} {
    if (block_length_ == 0 || block_length_ % 2 != 0) throw std::invalid_argument("QdsSession: L must be even and positive");
    for (Role r : {Role::Alice, Role::Bob, Role::Charlie}) {
        advance(r, Phase::Kgp);
        advance(r, Phase::Sifted);
    }
}

void QdsSession::advance(Role r, Phase next) {
    Party& p = parties_[static_cast<int>(r)];
    bool ok = false;
    switch (p.phase) {
        case Phase::Idle: ok = next == Phase::Kgp; break;
        case Phase::Kgp: ok = next == Phase::Sifted; break;
        case Phase::Sifted: ok = next == Phase::PoolReady; break;
        case Phase::PoolReady:
            ok = next == Phase::PoolReady || next == Phase::Signed || next == Phase::Verified || next == Phase::Aborted;
            break;
        case Phase::Signed:
        case Phase::Verified:
        case Phase::Aborted: ok = next == Phase::PoolReady; break;
    }
    if (!ok) {
        throw ProtocolError(std::string(to_string(r)) + ": illegal transition " + std::string(to_string(p.phase)) +
                            " -> " + std::string(to_string(next)));
    }
    p.phase = next;
}

void QdsSession::distribute() {
    if (bob_.pool.remaining() < 2 * block_length_ || charlie_.pool.remaining() < 2 * block_length_) {
        throw PoolExhausted("key pool exhausted: a signature needs 2L = " + std::to_string(2 * block_length_) +
                            " unused bits per link");
    }
    prepared_.clear();
    for (int m = 0; m < 2; ++m) {
        KeyPool::Block b = bob_.pool.take(block_length_);
        KeyPool::Block c = charlie_.pool.take(block_length_);
        PreparedBlock block{std::move(b.receiver), std::move(c.receiver), symmetrize(b.transmitter, c.transmitter, sym_rng_)};
        const std::string tag = "m=" + std::to_string(m) + ";";
        transcript_.post(MessageKind::SymmetrizationForward, Role::Bob, Role::Charlie,
                         tag + "pos+bits=" + bits_to_string(block.keys.charlie.forwarded.bits));
        transcript_.post(MessageKind::SymmetrizationForward, Role::Charlie, Role::Bob,
                         tag + "pos+bits=" + bits_to_string(block.keys.bob.forwarded.bits));
        prepared_.push_back(std::move(block));
    }
    fresh_ = true;
    signed_message_.reset();
    for (Role r : {Role::Alice, Role::Bob, Role::Charlie}) advance(r, Phase::PoolReady);
}

SignatureBundle QdsSession::sign(int message) {
    if (message != 0 && message != 1) throw std::invalid_argument("sign: message must be 0 or 1");
    if (!fresh_) distribute();
    const PreparedBlock& block = prepared_[static_cast<std::size_t>(message)];
    fresh_ = false;
    signed_message_ = message;
    advance(Role::Alice, Phase::Signed);
    return {message, block.alice_b, block.alice_c};
}

MessagingOutcome QdsSession::run_messaging(int message, const Thresholds& th) {
    return deliver(sign(message), th);
}

MessagingOutcome QdsSession::deliver(const SignatureBundle& bundle, const Thresholds& th) {
    if (prepared_.empty()) throw ProtocolError("deliver: no distributed signature blocks");
    if (bundle.message != 0 && bundle.message != 1) throw std::invalid_argument("deliver: message must be 0 or 1");
    const SymmetrizedPair& keys = prepared_[static_cast<std::size_t>(bundle.message)].keys;
    const std::string body = "m=" + std::to_string(bundle.message) + ";kb=" + bits_to_string(bundle.k_b) +
                             ";kc=" + bits_to_string(bundle.k_c);

    MessagingOutcome out;
    out.bundle = bundle;
    transcript_.post(MessageKind::Signature, Role::Alice, Role::Bob, body);
    out.bob.mismatches = count_mismatches(bundle, keys.bob);
    out.bob.verdict = verify(out.bob.mismatches, th.s_alpha, block_length_);
    if (out.bob.verdict == Verdict::Reject) {
        transcript_.post(MessageKind::Reject, Role::Bob, Role::Alice, body);
        transcript_.post(MessageKind::Abort, Role::Bob, Role::Alice, "abort");
        transcript_.post(MessageKind::Abort, Role::Bob, Role::Charlie, "abort");
        out.aborted = true;
        advance(Role::Bob, Phase::Aborted);
        advance(Role::Charlie, Phase::Aborted);
        return out;
    }
    transcript_.post(MessageKind::Accept, Role::Bob, Role::Alice, body);
    advance(Role::Bob, Phase::Verified);
    transcript_.post(MessageKind::ForwardedSignature, Role::Bob, Role::Charlie, body);
    HopResult charlie;
    charlie.mismatches = count_mismatches(bundle, keys.charlie);
    charlie.verdict = verify(charlie.mismatches, th.s_upsilon, block_length_);
    transcript_.post(charlie.verdict == Verdict::Accept ? MessageKind::Accept : MessageKind::Reject, Role::Charlie,
                     Role::Bob, body);
    advance(Role::Charlie, charlie.verdict == Verdict::Accept ? Phase::Verified : Phase::Aborted);
    out.charlie = charlie;
    return out;
}

// ---------------------------------------------------------------------------
// Attacks

double AttackResult::sigma() const noexcept {
    if (trials == 0) return 0.0;
    const double p = rate();
    return std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
}

AttackResult attack_repudiation(std::size_t trials, std::size_t block_length, const Thresholds& th,
                                const RepudiationStrategy& strategy, std::uint64_t seed) {
    if (block_length % 2 != 0) throw std::invalid_argument("attack_repudiation: L must be even");
    Rng rng = make_stream(seed, party_index(Role::Alice), StreamPurpose::Attack);
    const auto corrupted = static_cast<std::size_t>(std::llround(strategy.corruption_rate * static_cast<double>(block_length)));
    AttackResult result{trials, 0};
    std::vector<std::uint32_t> order(block_length);
    for (std::size_t t = 0; t < trials; ++t) {
        BitString bob = random_bits(block_length, rng);
        BitString charlie = random_bits(block_length, rng);
        SignatureBundle bundle{0, bob, charlie};
        for (auto& bit : bundle.k_b) if (uniform01(rng) < strategy.honest_error_rate) bit ^= 1u;
        for (auto& bit : bundle.k_c) if (uniform01(rng) < strategy.honest_error_rate) bit ^= 1u;

        // Alice commits to corrupted positions before symmetrization.
        BitString& target = strategy.target == Role::Charlie ? bundle.k_c : bundle.k_b;
        std::iota(order.begin(), order.end(), 0u);
        for (std::size_t i = 0; i < corrupted; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, block_length - 1);
            std::swap(order[i], order[pick(rng)]);
            target[order[i]] ^= 1u;
        }

        const SymmetrizedPair keys = symmetrize(bob, charlie, rng);
        const bool bob_accepts = verify(bundle, keys.bob, th.s_alpha, block_length) == Verdict::Accept;
        if (!bob_accepts) continue;
        if (verify(bundle, keys.charlie, th.s_upsilon, block_length) == Verdict::Reject) ++result.successes;
    }
    return result;
}

AttackResult attack_forge(std::size_t trials, std::size_t block_length, const Thresholds& th, std::uint64_t seed) {
    if (block_length % 2 != 0) throw std::invalid_argument("attack_forge: L must be even");
    Rng rng = make_stream(seed, party_index(Role::Bob), StreamPurpose::Attack);
    AttackResult result{trials, 0};
    for (std::size_t t = 0; t < trials; ++t) {
        const BitString bob = random_bits(block_length, rng);
        const BitString charlie = random_bits(block_length, rng);
        const SymmetrizedPair keys = symmetrize(bob, charlie, rng);

        // Bob knows his own key and the half Charlie forwarded to him.
        SignatureBundle forged{1, bob, random_bits(block_length, rng)};
        const KeyHalf& known = keys.bob.forwarded;
        for (std::size_t i = 0; i < known.positions.size(); ++i) forged.k_c[known.positions[i]] = known.bits[i];

        if (verify(forged, keys.charlie, th.s_upsilon, block_length) == Verdict::Accept) ++result.successes;
    }
    return result;
}

double forge_guess_probability(std::size_t block_length, double s_upsilon) {
    const auto half = static_cast<double>(block_length / 2);
    const double limit = s_upsilon * static_cast<double>(block_length) / 2.0;
    double total = 0.0;
    for (double j = 0.0; j <= half && j < limit; j += 1.0) {
        total += std::exp(std::lgamma(half + 1.0) - std::lgamma(j + 1.0) - std::lgamma(half - j + 1.0) -
                          half * std::numbers::ln2);
    }
    return std::min(1.0, total);
}

}  // namespace qds
