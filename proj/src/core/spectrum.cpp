#include "core/spectrum.hpp"

#include "core/error.hpp"

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <unordered_map>

namespace piano {

namespace {

// FFTW's planner is not thread-safe; execution with the new-array interface is.
class PlanCache {
public:
    static PlanCache& instance() {
        static PlanCache cache;
        return cache;
    }

    fftw_plan get(std::size_t n) {
        std::lock_guard lock(mutex_);
        auto it = plans_.find(n);
        if (it != plans_.end()) return it->second;
        std::vector<double> in(n);
        std::vector<fftw_complex> out(n / 2 + 1);
        fftw_plan plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in.data(), out.data(),
                                              FFTW_ESTIMATE | FFTW_UNALIGNED);
        plans_.emplace(n, plan);
        return plan;
    }

    ~PlanCache() {
        for (auto& [n, plan] : plans_) fftw_destroy_plan(plan);
    }

private:
    std::mutex mutex_;
    std::map<std::size_t, fftw_plan> plans_;
};

std::size_t fold(std::size_t k, std::size_t n) { return k <= n / 2 ? k : n - k; }

}  // namespace

void DetectionParams::validate() const {
    auto fail = [](const char* what) { throw Error(ErrorCode::InvalidArgument, what); };
    if (!(epsilon > 0.0 && epsilon <= alpha && alpha < 1.0))
        fail("detection params: require 0 < epsilon <= alpha < 1");
    if (!(beta_ratio > 0.0 && beta_ratio < alpha))
        fail("detection params: require 0 < beta_ratio < alpha");
    if (theta < 0) fail("detection params: theta must be non-negative");
    if (fine_step < 1 || coarse_step < fine_step)
        fail("detection params: require coarse_step >= fine_step >= 1");
    if (fine_radius < coarse_step) fail("detection params: require fine_radius >= coarse_step");
}

PowerSpectrum power_spectrum(std::span<const double> window, double sample_rate) {
    const std::size_t n = window.size();
    if (n < 2 || !std::has_single_bit(n))
        throw Error(ErrorCode::NotPowerOfTwo,
                    "power_spectrum: window length " + std::to_string(n) + " is not a power of two");

    std::vector<fftw_complex> out(n / 2 + 1);
    // FFTW does not write to the input of an out-of-place r2c transform.
    fftw_execute_dft_r2c(PlanCache::instance().get(n), const_cast<double*>(window.data()),
                         out.data());

    PowerSpectrum result;
    result.window_length = n;
    result.sample_rate = sample_rate;
    result.power.resize(n / 2 + 1);
    for (std::size_t k = 0; k < out.size(); ++k)
        result.power[k] = out[k][0] * out[k][0] + out[k][1] * out[k][1];
    return result;
}

std::size_t frequency_bin(double frequency_hz, double sample_rate, std::size_t window_length) {
    if (!(sample_rate > 0.0) || window_length == 0)
        throw Error(ErrorCode::InvalidArgument, "frequency_bin: invalid sample rate or length");
    if (!(frequency_hz >= 0.0) || frequency_hz >= sample_rate || frequency_hz == sample_rate / 2.0)
        throw Error(ErrorCode::AboveNyquist,
                    "frequency_bin: " + std::to_string(frequency_hz) +
                        " Hz is not a usable frequency at fs = " + std::to_string(sample_rate));
    return static_cast<std::size_t>(
        std::floor(frequency_hz / sample_rate * static_cast<double>(window_length)));
}

double band_power(const PowerSpectrum& spectrum, std::size_t bin, int theta) {
    const std::size_t n = spectrum.window_length;
    const std::size_t lo = bin >= static_cast<std::size_t>(theta) ? bin - theta : 0;
    const std::size_t hi = std::min(bin + static_cast<std::size_t>(theta), n - 1);
    double sum = 0.0;
    for (std::size_t k = lo; k <= hi; ++k) sum += spectrum.power[fold(k, n)];
    return sum;
}

std::vector<double> candidate_powers(const PowerSpectrum& spectrum, const FrequencyGrid& grid,
                                     int theta) {
    std::vector<double> out(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const auto bin =
            frequency_bin(grid.candidates_hz[j], spectrum.sample_rate, spectrum.window_length);
        out[j] = band_power(spectrum, bin, theta);
    }
    return out;
}

NormalizedPower norm_power(std::span<const double> powers, const CandidateSet& in_set,
                           std::span<const double> nominal, const DetectionParams& params) {
    if (in_set.size() != nominal.size() || in_set.empty())
        throw Error(ErrorCode::InvalidArgument, "norm_power: F and R must match and be non-empty");

    double nominal_sum = 0.0;
    for (double r : nominal) nominal_sum += r;
    const double beta = params.beta_ratio * nominal_sum / static_cast<double>(nominal.size());

    std::vector<bool> member(powers.size(), false);
    double in_sum = 0.0;
    for (std::size_t j = 0; j < in_set.size(); ++j) {
        const double p = powers[in_set[j]];
        if (!(p > params.alpha * nominal[j])) return NormalizedPower::rejected();
        member[in_set[j]] = true;
        in_sum += p;
    }
    double out_sum = 0.0;
    for (std::size_t k = 0; k < powers.size(); ++k) {
        if (member[k]) continue;
        if (!(powers[k] < beta)) return NormalizedPower::rejected();
        out_sum += powers[k];
    }
    return NormalizedPower::of(in_sum - out_sum);
}

NormalizedPower norm_power(std::span<const double> window, const CandidateSet& in_set,
                           std::span<const double> nominal, const FrequencyGrid& grid,
                           const DetectionParams& params, double sample_rate) {
    const auto spectrum = power_spectrum(window, sample_rate);
    const auto powers = candidate_powers(spectrum, grid, params.theta);
    return norm_power(powers, in_set, nominal, params);
}

namespace {

// Candidate powers of the window starting at `index`, memoized so both signals
// of a pair and overlapping coarse/fine passes share one FFT per window.
class WindowPowers {
public:
    WindowPowers(std::span<const std::int16_t> recording, const FrequencyGrid& grid,
                 std::size_t length, double sample_rate, int theta)
        : recording_(recording), grid_(grid), length_(length), sample_rate_(sample_rate),
          theta_(theta), buffer_(length) {}

    const std::vector<double>& at(std::size_t index) {
        auto it = cache_.find(index);
        if (it != cache_.end()) return it->second;
        for (std::size_t t = 0; t < length_; ++t) buffer_[t] = recording_[index + t];
        auto spectrum = power_spectrum(buffer_, sample_rate_);
        return cache_.emplace(index, candidate_powers(spectrum, grid_, theta_)).first->second;
    }

private:
    std::span<const std::int16_t> recording_;
    const FrequencyGrid& grid_;
    std::size_t length_;
    double sample_rate_;
    int theta_;
    std::vector<double> buffer_;
    std::unordered_map<std::size_t, std::vector<double>> cache_;
};

void check_lengths(std::span<const std::int16_t> recording, const ReferenceSignal& signal) {
    if (recording.size() < signal.samples.size())
        throw Error(ErrorCode::RecordingTooShort,
                    "detect: recording (" + std::to_string(recording.size()) +
                        " samples) is shorter than the reference signal (" +
                        std::to_string(signal.samples.size()) + ")");
}

DetectionOutcome scan(WindowPowers& windows, std::size_t last, const ReferenceSignal& signal,
                      const DetectionParams& params, const WindowTrace& trace) {
    const auto nominal = signal.nominal_powers();
    const auto& in_set = signal.spec.candidates;

    auto best = NormalizedPower::rejected();
    std::size_t coarse_best = 0;
    for (std::size_t i = 0; i <= last; i += params.coarse_step) {
        const auto score = norm_power(windows.at(i), in_set, nominal, params);
        if (trace) trace(i, score);
        if (score > best) {
            best = score;
            coarse_best = i;
        }
    }

    const std::size_t lo = coarse_best >= params.fine_radius ? coarse_best - params.fine_radius : 0;
    const std::size_t hi = std::min(last, coarse_best + params.fine_radius);
    best = NormalizedPower::rejected();
    std::size_t fine_best = lo;
    for (std::size_t i = lo; i <= hi; i += params.fine_step) {
        const auto score = norm_power(windows.at(i), in_set, nominal, params);
        if (trace) trace(i, score);
        if (score > best) {
            best = score;
            fine_best = i;
        }
    }

    DetectionOutcome outcome;
    outcome.peak = best;
    if (!best.is_rejected() && !(best.value() < params.epsilon * signal.total_power()))
        outcome.location = fine_best;
    return outcome;
}

}  // namespace

DetectionOutcome detect(std::span<const std::int16_t> recording, const ReferenceSignal& signal,
                        const FrequencyGrid& grid, const DetectionParams& params,
                        const WindowTrace& trace) {
    params.validate();
    check_lengths(recording, signal);
    const std::size_t length = signal.samples.size();
    WindowPowers windows(recording, grid, length, signal.spec.sample_rate, params.theta);
    return scan(windows, recording.size() - length, signal, params, trace);
}

std::pair<DetectionOutcome, DetectionOutcome> detect_pair(std::span<const std::int16_t> recording,
                                                          const ReferenceSignal& first,
                                                          const ReferenceSignal& second,
                                                          const FrequencyGrid& grid,
                                                          const DetectionParams& params) {
    params.validate();
    check_lengths(recording, first);
    check_lengths(recording, second);
    if (first.samples.size() != second.samples.size() ||
        first.spec.sample_rate != second.spec.sample_rate)
        throw Error(ErrorCode::InvalidArgument,
                    "detect_pair: signals must share length and sample rate");
    const std::size_t length = first.samples.size();
    WindowPowers windows(recording, grid, length, first.spec.sample_rate, params.theta);
    const std::size_t last = recording.size() - length;
    auto a = scan(windows, last, first, params, {});
    auto b = scan(windows, last, second, params, {});
    return {a, b};
}

std::size_t cross_correlate_detect(std::span<const std::int16_t> recording,
                                   const ReferenceSignal& signal) {
    check_lengths(recording, signal);
    const std::size_t length = signal.samples.size();
    const std::size_t last = recording.size() - length;

    std::vector<double> x(recording.begin(), recording.end());
    std::vector<double> s(signal.samples.begin(), signal.samples.end());

    // Products of 16-bit values summed over <= 2^20 terms stay exact in double.
    double best = -std::numeric_limits<double>::infinity();
    std::size_t best_index = 0;
    for (std::size_t i = 0; i <= last; ++i) {
        const double* xi = x.data() + i;
        // Partial sums are integers below 2^53, so splitting the accumulation is exact.
        double acc[4] = {0.0, 0.0, 0.0, 0.0};
        std::size_t t = 0;
        for (; t + 4 <= length; t += 4) {
            acc[0] += xi[t] * s[t];
            acc[1] += xi[t + 1] * s[t + 1];
            acc[2] += xi[t + 2] * s[t + 2];
            acc[3] += xi[t + 3] * s[t + 3];
        }
        for (; t < length; ++t) acc[0] += xi[t] * s[t];
        const double total = (acc[0] + acc[1]) + (acc[2] + acc[3]);
        if (total > best) {
            best = total;
            best_index = i;
        }
    }
    return best_index;
}

}  // namespace piano
