#pragma once

// Attacker models: zero-effort, guessing-based replay, all-frequency spoofing.

#include "core/channel.hpp"
#include "core/protocol.hpp"
#include "core/signal.hpp"

#include <cstdint>
#include <vector>

namespace piano {

enum class AttackKind { ZeroEffort, GuessingReplay, AllFrequency };

const char* to_string(AttackKind kind) noexcept;
AttackKind parse_attack_kind(std::string_view name);

enum class AttackTarget { Authenticating, Vouching, Both };

struct AttackScenario {
    AttackKind kind = AttackKind::ZeroEffort;
    AttackTarget target = AttackTarget::Both;
    double standoff_m = 0.3;        // attacker speaker distance from each targeted device
    double per_tone_power = 0.0;    // AllFrequency: P_a received at the target (+-theta convention)
    bool continuous = true;         // AllFrequency: play for the whole session
    std::uint64_t guess_seed = 0;   // GuessingReplay
};

// A fresh reference signal built by the public construction algorithm,
// independent of any session's signals.
ReferenceSignal guessing_replay_signal(Rng& rng, const FrequencyGrid& grid,
                                       const SignalDefaults& defaults = {});

struct AllFrequencySignal {
    std::vector<double> waveform;  // integer-valued, within 16-bit range
    double amplitude = 0.0;        // per-tone amplitude actually used
    double per_tone_power = 0.0;   // measured mean candidate power of the first window
};

// Sum of one sine per candidate, equal amplitude chosen so the measured per-tone
// power is `per_tone_power`. Throws InfeasiblePower if that would clip.
AllFrequencySignal all_frequency_signal(const FrequencyGrid& grid, double per_tone_power,
                                        std::size_t duration, const SignalDefaults& defaults = {});

// 1 / (2^N - 2)^signals: independent guesses of `signals` reference signals.
double guessing_success_probability(unsigned bins, unsigned signals);

// The commonly quoted two-signal figure 1 / 2^(N+1). It does not equal the
// independent-guess product; kept for comparison only.
double printed_replay_probability(unsigned bins);

// Scene hook that injects the attacker's emitters into a session.
SceneHook attack_hook(const AttackScenario& scenario, const ChannelConfig& channel,
                      const FrequencyGrid& grid, const SignalDefaults& defaults);

}  // namespace piano
