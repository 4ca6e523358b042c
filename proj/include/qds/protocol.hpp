#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "qds/channel_model.hpp"
#include "qds/rng.hpp"
#include "qds/security.hpp"

namespace qds {

using BitString = std::vector<std::uint8_t>;

enum class Role { Alice, Bob, Charlie };
enum class Phase { Idle, Kgp, Sifted, PoolReady, Signed, Verified, Aborted };
enum class Verdict { Accept, Reject };

enum class MessageKind {
    BasisAnnounce,
    SiftResult,
    TestReveal,
    SymmetrizationForward,
    Signature,
    ForwardedSignature,
    Accept,
    Reject,
    Abort,
};

std::string_view to_string(Role r) noexcept;
std::string_view to_string(Phase p) noexcept;
std::string_view to_string(Verdict v) noexcept;
std::string_view to_string(MessageKind k) noexcept;

class ProtocolError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class PoolExhausted : public ProtocolError {
public:
    using ProtocolError::ProtocolError;
};

/// Bit-level KGP is simulated pulse by pulse up to this many pulses; above
/// it only counts are sampled and key bits are synthesized on demand.
inline constexpr double kBitLevelPulseCap = 1e8;

// ---------------------------------------------------------------------------
// Classical channel

struct ClassicalMessage {
    std::uint64_t seq = 0;
    MessageKind kind = MessageKind::Abort;
    Role sender = Role::Alice;
    Role receiver = Role::Alice;
    std::string payload;

    /// FNV-1a 64 of the payload, as 16 hex digits.
    std::string digest() const;
};

/// Ordered log of every classical message of a run. Delivery is reliable
/// and in order.
class Transcript {
public:
    const ClassicalMessage& post(MessageKind kind, Role sender, Role receiver, std::string payload);
    const std::vector<ClassicalMessage>& messages() const noexcept { return messages_; }

    /// One JSON object per line: seq, kind, sender, receiver, digest.
    std::string to_jsonl() const;

private:
    std::vector<ClassicalMessage> messages_;
};

/// A parsed transcript line (payload itself is not exported).
struct TranscriptRecord {
    std::uint64_t seq = 0;
    std::string kind;
    std::string sender;
    std::string receiver;
    std::string digest;

    friend bool operator==(const TranscriptRecord&, const TranscriptRecord&) = default;
};

std::vector<TranscriptRecord> parse_transcript(std::string_view jsonl);

// ---------------------------------------------------------------------------
// Key material

/// Correlated sifted Z-basis strings of one link: the transmitter's
/// prepared bits and Alice's measured bits. Blocks are handed out once.
class KeyPool {
public:
    KeyPool() = default;
    KeyPool(BitString transmitter, BitString receiver);
    /// Pool of `size` bits whose receiver side differs from the transmitter
    /// side independently with probability error_rate, generated lazily.
    static KeyPool synthetic(std::size_t size, double error_rate, Rng rng);

    std::size_t remaining() const noexcept { return size_ - cursor_; }
    bool is_synthetic() const noexcept { return synthetic_; }

    struct Block {
        BitString transmitter;
        BitString receiver;
    };
    /// Next `length` unused bits. Throws PoolExhausted.
    Block take(std::size_t length);

private:
    BitString transmitter_;
    BitString receiver_;
    std::size_t size_ = 0;
    std::size_t cursor_ = 0;
    bool synthetic_ = false;
    double error_rate_ = 0.0;
    Rng rng_;
};

enum class KgpMode { BitLevel, Aggregate };

struct KgpOutput {
    KgpMode mode = KgpMode::BitLevel;
    ObservedCounts counts;
    KeyPool pool;
    std::size_t test_size = 0;
    std::size_t test_errors = 0;

    double test_error_rate() const noexcept {
        return test_size > 0 ? static_cast<double>(test_errors) / static_cast<double>(test_size) : 0.0;
    }
};

struct KgpRequest {
    std::size_t test_size = 0;      ///< k positions revealed for the error estimate
    std::size_t block_length = 0;   ///< L; the pool must hold k + 2L bits
    Role transmitter = Role::Bob;
};

/// One-decoy key generation between a transmitter (Bob or Charlie) and
/// Alice: preparation, measurement, basis announcement, sifting and test
/// sampling. Pulse-level when N_t <= kBitLevelPulseCap. Throws ProtocolError
/// (abort) when the sifted pool holds fewer than k + 2L bits.
KgpOutput run_kgp(const PulseConfig& pc, const ChannelParams& ch, std::uint64_t seed, const KgpRequest& request,
                  Transcript* transcript = nullptr);

// ---------------------------------------------------------------------------
// Symmetrization and signatures

struct KeyHalf {
    Role origin = Role::Bob;             ///< whose key the bits come from
    std::vector<std::uint32_t> positions; ///< 0-based positions in the L-bit block
    BitString bits;
};

/// A recipient's holding after symmetrization: the half of his own key he
/// kept and the half the other recipient forwarded to him.
struct SymmetrizedKey {
    Role holder = Role::Bob;
    KeyHalf kept;
    KeyHalf forwarded;
};

struct SymmetrizedPair {
    SymmetrizedKey bob;
    SymmetrizedKey charlie;
};

/// Bob forwards a uniformly random half of his block to Charlie and vice
/// versa. Throws std::invalid_argument if L is odd or the lengths differ.
SymmetrizedPair symmetrize(const BitString& bob_key, const BitString& charlie_key, Rng& rng);
SymmetrizedPair symmetrize(const BitString& bob_key, const BitString& charlie_key, std::uint64_t seed);

struct SignatureBundle {
    int message = 0;
    BitString k_b;  ///< Alice's key for the Bob link, K_m^B
    BitString k_c;  ///< Alice's key for the Charlie link, K_m^C

    const BitString& key_for(Role origin) const { return origin == Role::Charlie ? k_c : k_b; }
};

struct Mismatches {
    std::size_t kept = 0;
    std::size_t forwarded = 0;
};

/// Hamming distance on each half against the matching key of the bundle.
/// Throws std::invalid_argument on inconsistent positions.
Mismatches count_mismatches(const SignatureBundle& bundle, const SymmetrizedKey& key);

/// Accept iff both halves have strictly fewer than threshold*L/2 mismatches.
Verdict verify(const SignatureBundle& bundle, const SymmetrizedKey& key, double threshold, std::size_t block_length);
Verdict verify(const Mismatches& mm, double threshold, std::size_t block_length) noexcept;

struct Party {
    Role role = Role::Alice;
    Phase phase = Phase::Idle;
};

struct HopResult {
    Mismatches mismatches;
    Verdict verdict = Verdict::Reject;
};

struct MessagingOutcome {
    SignatureBundle bundle;
    HopResult bob;
    std::optional<HopResult> charlie;  ///< absent when Bob aborted
    bool aborted = false;
};

/// Three-party session after KGP on both links: allocates signature blocks,
/// symmetrizes them, signs and runs the messaging stage. Every signed
/// message consumes 2L fresh bits per link (blocks for m = 0 and m = 1).
class QdsSession {
public:
    QdsSession(KgpOutput bob_link, KgpOutput charlie_link, std::size_t block_length, std::uint64_t seed);

    std::size_t block_length() const noexcept { return block_length_; }
    const Party& party(Role r) const noexcept { return parties_[static_cast<int>(r)]; }
    Transcript& transcript() noexcept { return transcript_; }
    const Transcript& transcript() const noexcept { return transcript_; }
    const KgpOutput& link(Role transmitter) const { return transmitter == Role::Charlie ? charlie_ : bob_; }

    /// Allocate the m = 0 and m = 1 blocks on both links and symmetrize.
    /// Throws PoolExhausted.
    void distribute();
    /// Alice's signature for message bit m; distributes first if no unused
    /// blocks are ready.
    SignatureBundle sign(int message);
    /// Recipients' symmetrized keys for the currently distributed block m.
    const SymmetrizedPair& symmetrized(int message) const { return prepared_.at(message).keys; }
    /// Alice -> Bob (verify at s_alpha) -> Charlie (verify at s_upsilon).
    MessagingOutcome run_messaging(int message, const Thresholds& th);
    /// Same, with a bundle supplied by the caller instead of Alice.
    MessagingOutcome deliver(const SignatureBundle& bundle, const Thresholds& th);

private:
    struct PreparedBlock {
        BitString alice_b;
        BitString alice_c;
        SymmetrizedPair keys;
    };
    void advance(Role r, Phase next);

    KgpOutput bob_;
    KgpOutput charlie_;
    std::size_t block_length_;
    Rng sym_rng_;
    Transcript transcript_;
    std::vector<Party> parties_;
    std::vector<PreparedBlock> prepared_;
    bool fresh_ = false;
    std::optional<int> signed_message_;
};

// ---------------------------------------------------------------------------
// Attack harness

struct AttackResult {
    std::size_t trials = 0;
    std::size_t successes = 0;

    double rate() const noexcept { return trials ? static_cast<double>(successes) / static_cast<double>(trials) : 0.0; }
    /// Binomial standard error of rate().
    double sigma() const noexcept;
};

struct RepudiationStrategy {
    double corruption_rate = 0.0;  ///< fraction of the targeted key Alice flips
    Role target = Role::Bob;       ///< origin key that is corrupted
    double honest_error_rate = 0.0;
};

/// Alice corrupts round(rate * L) positions of one origin key before the
/// symmetrization randomness is known; success when Bob accepts at s_alpha
/// and Charlie rejects the forwarded message at s_upsilon.
AttackResult attack_repudiation(std::size_t trials, std::size_t block_length, const Thresholds& th,
                                const RepudiationStrategy& strategy, std::uint64_t seed);

/// Bob forges a message for Charlie: he copies his own key for the half
/// Charlie holds from him and guesses Charlie's kept half uniformly.
AttackResult attack_forge(std::size_t trials, std::size_t block_length, const Thresholds& th, std::uint64_t seed);

/// P[Binomial(L/2, 1/2) < s_upsilon L/2]: success probability of the
/// guessing forger.
double forge_guess_probability(std::size_t block_length, double s_upsilon);

}  // namespace qds
