#include "core/signal.hpp"

#include "core/error.hpp"
#include "core/spectrum.hpp"
#include "core/wav.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

namespace piano {

FrequencyGrid build_grid(double band_low_hz, double band_high_hz, std::size_t bins) {
    if (!(band_low_hz < band_high_hz))
        throw Error(ErrorCode::InvalidBand, "build_grid: band_low must be below band_high");
    if (bins < 2) throw Error(ErrorCode::InvalidBinCount, "build_grid: need at least 2 bins");

    FrequencyGrid grid;
    grid.band_low_hz = band_low_hz;
    grid.band_high_hz = band_high_hz;
    grid.candidates_hz.resize(bins);
    const double width = (band_high_hz - band_low_hz) / static_cast<double>(bins);
    for (std::size_t i = 0; i < bins; ++i)
        grid.candidates_hz[i] = band_low_hz + (static_cast<double>(i) + 0.5) * width;
    return grid;
}

FrequencyGrid default_grid() { return build_grid(25000.0, 35000.0, 30); }

double tone_frequency(double candidate_hz, double sample_rate, std::size_t length, bool bin_centred) {
    if (!bin_centred) return candidate_hz;
    return static_cast<double>(frequency_bin(candidate_hz, sample_rate, length)) * sample_rate /
           static_cast<double>(length);
}

SignalSpec make_spec(const FrequencyGrid& grid, CandidateSet candidates,
                     const SignalDefaults& defaults) {
    std::sort(candidates.begin(), candidates.end());
    if (candidates.empty() || candidates.size() >= grid.size())
        throw Error(ErrorCode::InvalidArgument, "signal spec: need 0 < |F| < N");
    if (std::adjacent_find(candidates.begin(), candidates.end()) != candidates.end())
        throw Error(ErrorCode::InvalidArgument, "signal spec: duplicate frequency");
    if (candidates.back() >= grid.size())
        throw Error(ErrorCode::InvalidArgument, "signal spec: candidate index outside grid");
    if (defaults.length == 0 || !(defaults.sample_rate > 0.0) || !(defaults.amplitude_budget > 0.0))
        throw Error(ErrorCode::InvalidArgument, "signal spec: invalid length/rate/budget");

    SignalSpec spec;
    spec.frequencies_hz.reserve(candidates.size());
    for (auto c : candidates) spec.frequencies_hz.push_back(grid.candidates_hz[c]);
    spec.candidates = std::move(candidates);
    spec.phases.assign(spec.candidates.size(), 0.0);
    spec.length = defaults.length;
    spec.sample_rate = defaults.sample_rate;
    spec.amplitude_budget = defaults.amplitude_budget;
    spec.bin_centred = defaults.bin_centred;
    return spec;
}

SignalSpec sample_spec_from(Rng& rng, const FrequencyGrid& grid, const CandidateSet& pool,
                            const SignalDefaults& defaults) {
    const std::size_t max_n = std::min(pool.size(), grid.size() - 1);
    if (max_n == 0) throw Error(ErrorCode::InvalidArgument, "sample_spec: empty candidate pool");

    // Weighting n by C(|pool|, n) makes every admissible subset equally likely.
    const double m = static_cast<double>(pool.size());
    std::vector<double> log_weights(max_n);
    for (std::size_t n = 1; n <= max_n; ++n) {
        const double k = static_cast<double>(n);
        log_weights[n - 1] = std::lgamma(m + 1) - std::lgamma(k + 1) - std::lgamma(m - k + 1);
    }
    const double top = *std::max_element(log_weights.begin(), log_weights.end());
    std::vector<double> weights(max_n);
    std::transform(log_weights.begin(), log_weights.end(), weights.begin(),
                   [top](double lw) { return std::exp(lw - top); });
    std::discrete_distribution<std::size_t> pick_n(weights.begin(), weights.end());
    const std::size_t n = pick_n(rng) + 1;

    CandidateSet chosen;
    chosen.reserve(n);
    std::sample(pool.begin(), pool.end(), std::back_inserter(chosen), n, rng);

    auto spec = make_spec(grid, std::move(chosen), defaults);
    if (defaults.random_phase) {
        std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
        for (auto& p : spec.phases) p = phase(rng);
    }
    return spec;
}

SignalSpec sample_spec(Rng& rng, const FrequencyGrid& grid, const SignalDefaults& defaults) {
    CandidateSet all(grid.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return sample_spec_from(rng, grid, all, defaults);
}

ReferenceSignal synthesize(const SignalSpec& spec, int theta) {
    const std::size_t n = spec.tone_count();
    if (n == 0 || spec.frequencies_hz.size() != n || spec.phases.size() != n)
        throw Error(ErrorCode::InvalidArgument, "synthesize: malformed spec");

    ReferenceSignal signal;
    signal.spec = spec;
    signal.samples.resize(spec.length);
    const double amplitude = spec.amplitude_budget / static_cast<double>(n);
    std::vector<double> tones(n);
    for (std::size_t j = 0; j < n; ++j)
        tones[j] = tone_frequency(spec.frequencies_hz[j], spec.sample_rate, spec.length, spec.bin_centred);
    std::vector<double> clean(spec.length);
    for (std::size_t t = 0; t < spec.length; ++t) {
        double v = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            v += amplitude * std::sin(2.0 * std::numbers::pi * tones[j] *
                                          static_cast<double>(t) / spec.sample_rate +
                                      spec.phases[j]);
        const double rounded = std::round(v);
        signal.samples[t] = static_cast<std::int16_t>(rounded);
        clean[t] = rounded;
    }

    const auto spectrum = power_spectrum(clean, spec.sample_rate);
    double sum = 0.0;
    for (double f : spec.frequencies_hz)
        sum += band_power(spectrum, frequency_bin(f, spec.sample_rate, spec.length), theta);
    signal.nominal_power = sum / static_cast<double>(n);
    return signal;
}

std::string signal_to_json(const ReferenceSignal& signal) {
    nlohmann::json j;
    j["freqs_hz"] = signal.spec.frequencies_hz;
    j["nominal_power"] = signal.nominal_powers();
    return j.dump();
}

void save_signal(const ReferenceSignal& signal, const std::filesystem::path& wav_path,
                 const std::filesystem::path& json_path) {
    write_wav(wav_path, signal.samples, static_cast<std::uint32_t>(signal.spec.sample_rate));
    std::ofstream out(json_path);
    if (!out) throw Error(ErrorCode::Io, json_path.string() + ": cannot open for writing");
    out << signal_to_json(signal) << '\n';
}

ReferenceSignal load_signal(const std::filesystem::path& wav_path,
                            const std::filesystem::path& json_path, const FrequencyGrid& grid,
                            const SignalDefaults& defaults) {
    auto wav = read_wav(wav_path);
    std::ifstream in(json_path);
    if (!in) throw Error(ErrorCode::Io, json_path.string() + ": cannot open for reading");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::Config, json_path.string() + ": " + e.what());
    }
    const auto freqs = j.at("freqs_hz").get<std::vector<double>>();
    const auto powers = j.at("nominal_power").get<std::vector<double>>();
    if (freqs.size() != powers.size() || powers.empty())
        throw Error(ErrorCode::Config, "signal json: freqs_hz and nominal_power differ in size");

    CandidateSet candidates;
    for (double f : freqs) {
        auto it = std::find_if(grid.candidates_hz.begin(), grid.candidates_hz.end(),
                               [f](double c) { return std::abs(c - f) < 1e-6 * c; });
        if (it == grid.candidates_hz.end())
            throw Error(ErrorCode::Config, "signal json: frequency not on the grid");
        candidates.push_back(static_cast<std::size_t>(it - grid.candidates_hz.begin()));
    }

    SignalDefaults d = defaults;
    d.length = wav.samples.size();
    d.sample_rate = wav.sample_rate;
    ReferenceSignal signal;
    signal.spec = make_spec(grid, std::move(candidates), d);
    signal.samples = std::move(wav.samples);
    signal.nominal_power = std::accumulate(powers.begin(), powers.end(), 0.0) /
                           static_cast<double>(powers.size());
    return signal;
}

}  // namespace piano
