#pragma once

// Candidate-frequency grid and randomized multi-tone reference signals.

#include "core/random.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace piano {

struct FrequencyGrid {
    double band_low_hz = 0.0;
    double band_high_hz = 0.0;
    std::vector<double> candidates_hz;  // bin midpoints, ascending

    std::size_t size() const noexcept { return candidates_hz.size(); }
    double spacing_hz() const noexcept {
        return (band_high_hz - band_low_hz) / static_cast<double>(candidates_hz.size());
    }
};

FrequencyGrid build_grid(double band_low_hz, double band_high_hz, std::size_t bins);

// 30 bins over [25 kHz, 35 kHz].
FrequencyGrid default_grid();

struct SignalDefaults {
    std::size_t length = 4096;
    double sample_rate = 44100.0;
    double amplitude_budget = 32000.0;
    bool random_phase = false;
    // Play each tone at the centre of the DFT bin its candidate maps to, so an
    // aligned window has no sidelobe leakage into neighbouring candidates.
    bool bin_centred = true;
    int theta = 5;  // bin half-width used when measuring R_f
};

// Frequency actually synthesized for candidate `candidate_hz`: the candidate
// itself, or frequency_bin(candidate) * fs / L when bin-centred.
double tone_frequency(double candidate_hz, double sample_rate, std::size_t length, bool bin_centred);

// Sorted, duplicate-free indices into a FrequencyGrid.
using CandidateSet = std::vector<std::size_t>;

struct SignalSpec {
    CandidateSet candidates;
    std::vector<double> frequencies_hz;  // the candidates of F
    std::vector<double> phases;  // radians, one per frequency
    bool bin_centred = true;
    std::size_t length = 0;
    double sample_rate = 0.0;
    double amplitude_budget = 0.0;

    std::size_t tone_count() const noexcept { return candidates.size(); }
};

// Builds a spec from an explicit candidate set; validates 0 < |F| < N.
SignalSpec make_spec(const FrequencyGrid& grid, CandidateSet candidates,
                     const SignalDefaults& defaults = {});

// Draws F uniformly over the 2^N - 2 non-empty proper subsets of the grid.
SignalSpec sample_spec(Rng& rng, const FrequencyGrid& grid, const SignalDefaults& defaults = {});

// Same, restricted to subsets of `pool` (non-empty, at most N - 1 elements).
SignalSpec sample_spec_from(Rng& rng, const FrequencyGrid& grid, const CandidateSet& pool,
                            const SignalDefaults& defaults = {});

struct ReferenceSignal {
    SignalSpec spec;
    std::vector<std::int16_t> samples;
    double nominal_power = 0.0;  // R_f, shared by every f in F

    double total_power() const noexcept {
        return nominal_power * static_cast<double>(spec.tone_count());
    }
    std::vector<double> nominal_powers() const {
        return std::vector<double>(spec.tone_count(), nominal_power);
    }
};

// samples[t] = round(sum_f (budget/n) sin(2 pi f' t / fs + phase_f)) with f' the
// tone frequency of candidate f; R_f is then
// measured on the clean samples with the detector's own +-theta convention.
ReferenceSignal synthesize(const SignalSpec& spec, int theta = 5);

// {"freqs_hz": [...], "nominal_power": [...]}
std::string signal_to_json(const ReferenceSignal& signal);

void save_signal(const ReferenceSignal& signal, const std::filesystem::path& wav_path,
                 const std::filesystem::path& json_path);

// Rebuilds a reference signal from a WAV file and its JSON sidecar. The
// frequencies must lie on `grid`.
ReferenceSignal load_signal(const std::filesystem::path& wav_path,
                            const std::filesystem::path& json_path, const FrequencyGrid& grid,
                            const SignalDefaults& defaults = {});

}  // namespace piano
