#pragma once

// Two-party ranging session and the proximity authentication decision.

#include "core/channel.hpp"
#include "core/signal.hpp"
#include "core/spectrum.hpp"

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace piano {

struct SessionMeasurements {
    std::int64_t l_AA = 0;  // S_A in the authenticating device's recording
    std::int64_t l_AV = 0;  // S_V in the authenticating device's recording
    std::int64_t l_VA = 0;  // S_A in the vouching device's recording
    std::int64_t l_VV = 0;  // S_V in the vouching device's recording
    double f_A = 44100.0;
    double f_V = 44100.0;
};

// d_AV = 1/2 * s * ( -(l_VV - l_VA)/f_V + (l_AV - l_AA)/f_A ). May be negative.
double estimate_distance(const SessionMeasurements& m, double speed_of_sound);

// Same formula from the two locally computed differences.
double estimate_distance(std::int64_t auth_difference /* l_AV - l_AA */,
                         std::int64_t vouch_difference /* l_VA - l_VV */, double f_A, double f_V,
                         double speed_of_sound);

struct AuthPolicy {
    double threshold_m = 1.0;
    double pairing_range_m = 10.0;
    bool enforce_threshold = true;  // false: log the distance, always accept when present

    void validate() const;
};

enum class Verdict { Accept, Reject };
enum class RejectReason { None, NotPaired, SignalNotPresent, DistanceExceeded };

const char* to_string(Verdict v) noexcept;
const char* to_string(RejectReason r) noexcept;

struct AuthDecision {
    Verdict verdict = Verdict::Reject;
    RejectReason reason = RejectReason::None;
    std::optional<double> estimated_distance_m;  // clamped at 0
};

enum class DetectorKind { Frequency, CrossCorrelation };

struct DeviceConfig {
    std::string id;
    Vec3 position;
    double sample_rate = 44100.0;
};

struct SessionConfig {
    FrequencyGrid grid = default_grid();
    SignalDefaults signal;
    DetectionParams detection;
    DetectorKind detector = DetectorKind::Frequency;
    double first_playback_s = 0.1;
    double playback_gap_s = 0.3;
    double recording_s = 1.5;
    double max_start_offset_s = 0.05;  // vouching device starts recording at a random offset
    bool disjoint_sets = false;
    bool drop_channel = false;  // simulate a failed secure channel
};

// Scene-time schedule of one session, handed to interference hooks.
struct SessionTiming {
    double first_playback = 0.0;  // S_A emission, scene samples
    double second_playback = 0.0;  // S_V emission
    std::size_t duration = 0;
    Vec3 authenticating;
    Vec3 vouching;
};

// Adds third-party emitters (attackers, other users) to the scene.
using SceneHook = std::function<void(AcousticScene& scene, const SessionTiming& timing)>;

// In-process reliable ordered pipe between two paired devices with a range gate.
class SecureChannel {
public:
    struct Message {
        std::string from;
        std::string to;
        std::string kind;
        std::vector<std::uint8_t> payload;
    };

    SecureChannel(bool paired, bool drop) : paired_(paired), drop_(drop) {}

    bool usable() const noexcept { return paired_ && !drop_; }

    // Returns false if the message could not be delivered.
    bool send(Message message);
    std::optional<Message> receive(const std::string& to);

    const std::vector<Message>& log() const noexcept { return log_; }

private:
    bool paired_;
    bool drop_;
    std::deque<Message> queue_;
    std::vector<Message> log_;
};

std::vector<std::uint8_t> serialize_signal(const ReferenceSignal& signal);
ReferenceSignal deserialize_signal(const std::vector<std::uint8_t>& bytes, const FrequencyGrid& grid);

struct MessageSummary {
    std::string from;
    std::string to;
    std::string kind;
    std::size_t bytes = 0;
};

struct SessionTranscript {
    std::uint64_t seed = 0;
    double true_distance_m = 0.0;
    DetectorKind detector = DetectorKind::Frequency;
    std::vector<double> freqs_A_hz;
    std::vector<double> freqs_V_hz;
    std::optional<std::int64_t> l_AA, l_AV, l_VA, l_VV;
    std::optional<std::int64_t> vouch_difference;  // the only value the vouching device reports
    double f_A = 0.0;
    double f_V = 0.0;
    std::optional<double> raw_distance_m;
    AuthDecision decision;
    std::vector<MessageSummary> messages;

    std::string to_json() const;
};

struct SessionResult {
    AuthDecision decision;
    SessionTranscript transcript;
    // Filled only when requested.
    std::optional<Recording> recording_A;
    std::optional<Recording> recording_V;
    std::optional<ReferenceSignal> signal_A;
    std::optional<ReferenceSignal> signal_V;
};

struct RunOptions {
    SceneHook hook;
    bool keep_artifacts = false;
};

SessionResult run_authentication(const DeviceConfig& authenticating, const DeviceConfig& vouching,
                                 const AuthPolicy& policy, std::uint64_t seed,
                                 const ChannelConfig& channel, const SessionConfig& session,
                                 const RunOptions& options = {});

// Threshold comparison on an already-estimated raw distance.
AuthDecision decide(double raw_distance_m, const AuthPolicy& policy);

}  // namespace piano
