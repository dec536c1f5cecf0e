#include "core/adversary.hpp"

#include "core/error.hpp"
#include "core/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace piano {

const char* to_string(AttackKind kind) noexcept {
    switch (kind) {
        case AttackKind::ZeroEffort: return "zero_effort";
        case AttackKind::GuessingReplay: return "guessing_replay";
        case AttackKind::AllFrequency: return "all_frequency";
    }
    return "unknown";
}

AttackKind parse_attack_kind(std::string_view name) {
    if (name == "zero_effort" || name == "zero-effort") return AttackKind::ZeroEffort;
    if (name == "guessing_replay" || name == "guessing-replay" || name == "replay") return AttackKind::GuessingReplay;
    if (name == "all_frequency" || name == "all-frequency") return AttackKind::AllFrequency;
    throw Error(ErrorCode::Config, "unknown attack kind '" + std::string(name) + "'");
}

ReferenceSignal guessing_replay_signal(Rng& rng, const FrequencyGrid& grid, const SignalDefaults& defaults) {
    return synthesize(sample_spec(rng, grid, defaults), defaults.theta);
}

namespace {

std::vector<double> tone_comb(const FrequencyGrid& grid, double amplitude, std::size_t duration,
                              const SignalDefaults& defaults) {
    const double sample_rate = defaults.sample_rate;
    std::vector<double> tones;
    for (double f : grid.candidates_hz)
        tones.push_back(tone_frequency(f, sample_rate, defaults.length, defaults.bin_centred));
    std::vector<double> out(duration, 0.0);
    for (std::size_t t = 0; t < duration; ++t) {
        double v = 0.0;
        for (double f : tones)
            v += std::sin(2.0 * std::numbers::pi * f * static_cast<double>(t) / sample_rate);
        out[t] = amplitude * v;
    }
    return out;
}

double mean_candidate_power(std::span<const double> window, const FrequencyGrid& grid, double sample_rate,
                            int theta) {
    const auto powers = candidate_powers(power_spectrum(window, sample_rate), grid, theta);
    return std::accumulate(powers.begin(), powers.end(), 0.0) / static_cast<double>(powers.size());
}

}  // namespace

AllFrequencySignal all_frequency_signal(const FrequencyGrid& grid, double per_tone_power, std::size_t duration,
                                        const SignalDefaults& defaults) {
    if (!(per_tone_power > 0.0)) throw Error(ErrorCode::InvalidArgument, "all_frequency_signal: P_a must be positive");
    const std::size_t window = defaults.length;
    if (duration < window)
        throw Error(ErrorCode::InvalidArgument, "all_frequency_signal: duration shorter than one window");

    const auto unit = tone_comb(grid, 1.0, window, defaults);
    const double unit_power = mean_candidate_power(unit, grid, defaults.sample_rate, defaults.theta);
    const double amplitude = std::sqrt(per_tone_power / unit_power);

    AllFrequencySignal out;
    out.amplitude = amplitude;
    out.waveform = tone_comb(grid, amplitude, duration, defaults);
    double peak = 0.0;
    for (double& v : out.waveform) {
        v = std::round(v);
        peak = std::max(peak, std::abs(v));
    }
    if (peak > 32767.0)
        throw Error(ErrorCode::InfeasiblePower,
                    "all_frequency_signal: per-tone power " + std::to_string(per_tone_power) +
                        " would clip 16-bit output (peak " + std::to_string(peak) + ")");
    out.per_tone_power = mean_candidate_power(std::span<const double>(out.waveform).first(window), grid,
                                              defaults.sample_rate, defaults.theta);
    return out;
}

double guessing_success_probability(unsigned bins, unsigned signals) {
    if (bins < 2) throw Error(ErrorCode::InvalidArgument, "guessing probability: need N >= 2");
    if (signals != 1 && signals != 2)
        throw Error(ErrorCode::InvalidArgument, "guessing probability: signals must be 1 or 2");
    const double one = 1.0 / (std::ldexp(1.0, static_cast<int>(bins)) - 2.0);
    return signals == 1 ? one : one * one;
}

double printed_replay_probability(unsigned bins) {
    return std::ldexp(1.0, -static_cast<int>(bins) - 1);
}

SceneHook attack_hook(const AttackScenario& scenario, const ChannelConfig& channel, const FrequencyGrid& grid,
                      const SignalDefaults& defaults) {
    if (scenario.kind == AttackKind::ZeroEffort) return {};
    if (scenario.kind == AttackKind::AllFrequency && !(scenario.per_tone_power > 0.0))
        throw Error(ErrorCode::InvalidArgument, "attack: all-frequency attack needs P_a > 0");

    return [scenario, channel, grid, defaults](AcousticScene& scene, const SessionTiming& timing) {
        auto beside = [&](const Vec3& device) {
            return Vec3{device.x, device.y + scenario.standoff_m, device.z};
        };
        const bool near_a = scenario.target != AttackTarget::Vouching;
        const bool near_v = scenario.target != AttackTarget::Authenticating;

        if (scenario.kind == AttackKind::GuessingReplay) {
            // Guess S_A and S_V; replay the S_V guess next to A when S_V is due,
            // and the S_A guess next to V when S_A is due.
            Rng rng = make_rng(scenario.guess_seed);
            const auto guess_a = guessing_replay_signal(rng, grid, defaults);
            const auto guess_v = guessing_replay_signal(rng, grid, defaults);
            auto wave = [](const ReferenceSignal& s) { return std::vector<double>(s.samples.begin(), s.samples.end()); };
            if (near_a)
                scene.emissions.push_back({"attacker_a", wave(guess_v), timing.second_playback, beside(timing.authenticating)});
            if (near_v)
                scene.emissions.push_back({"attacker_v", wave(guess_a), timing.first_playback, beside(timing.vouching)});
            return;
        }

        const std::size_t duration = scenario.continuous ? timing.duration + 8192 : defaults.length * 2;
        const double start = scenario.continuous ? -4096.0 : timing.first_playback;
        const auto comb = all_frequency_signal(grid, scenario.per_tone_power, duration, defaults);
        auto add = [&](const char* id, const Vec3& device) {
            const Vec3 pos = beside(device);
            const double g = path_gain(pos, device, channel);
            std::vector<double> emitted = comb.waveform;
            for (double& v : emitted) v /= g;
            scene.emissions.push_back({id, std::move(emitted), start, pos});
        };
        if (near_a) add("attacker_a", timing.authenticating);
        if (near_v) add("attacker_v", timing.vouching);
    };
}

}  // namespace piano
