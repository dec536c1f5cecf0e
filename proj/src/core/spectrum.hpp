#pragma once

// Power spectrum, normalized power and sliding-window reference-signal
// detection, plus the raw cross-correlation baseline.

#include "core/signal.hpp"

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace piano {

struct DetectionParams {
    double alpha = 0.01;
    double beta_ratio = 0.005;  // beta = beta_ratio * R_f
    double epsilon = 0.01;
    int theta = 5;
    std::size_t coarse_step = 1000;
    std::size_t fine_step = 10;
    std::size_t fine_radius = 1500;

    // Throws ErrorCode::InvalidArgument if any invariant is broken.
    void validate() const;
};

struct PowerSpectrum {
    std::vector<double> power;  // one-sided, |W|/2 + 1 entries
    std::size_t window_length = 0;
    double sample_rate = 0.0;

    double bin_frequency(std::size_t k) const noexcept {
        return static_cast<double>(k) * sample_rate / static_cast<double>(window_length);
    }
};

// |DFT(W)[k]|^2 for k = 0..|W|/2, rectangular window. |W| must be a power of two.
PowerSpectrum power_spectrum(std::span<const double> window, double sample_rate);

// floor(f / fs * |W|). Frequencies above fs/2 are accepted (they alias, and the
// returned index then lies in the upper half of the two-sided spectrum); fs/2
// itself and anything outside [0, fs) is rejected.
std::size_t frequency_bin(double frequency_hz, double sample_rate, std::size_t window_length);

// Sum of Y over two-sided indices [bin - theta, bin + theta], clamped to
// [0, |W| - 1] and folded into the one-sided array.
double band_power(const PowerSpectrum& spectrum, std::size_t bin, int theta);

// P_f for every candidate of the grid.
std::vector<double> candidate_powers(const PowerSpectrum& spectrum, const FrequencyGrid& grid,
                                     int theta);

// Algorithm score of one window: either a finite value or the rejected
// sentinel, which orders below every finite value.
class NormalizedPower {
public:
    static NormalizedPower rejected() noexcept { return NormalizedPower(); }
    static NormalizedPower of(double value) noexcept { return NormalizedPower(value); }

    bool is_rejected() const noexcept { return !finite_; }
    double value() const noexcept { return value_; }

    friend bool operator==(const NormalizedPower& a, const NormalizedPower& b) noexcept {
        return a.finite_ == b.finite_ && (!a.finite_ || a.value_ == b.value_);
    }
    friend std::partial_ordering operator<=>(const NormalizedPower& a,
                                             const NormalizedPower& b) noexcept {
        if (!a.finite_ || !b.finite_) return a.finite_ <=> b.finite_;
        return a.value_ <=> b.value_;
    }

private:
    NormalizedPower() = default;
    explicit NormalizedPower(double v) : value_(v), finite_(true) {}

    double value_ = 0.0;
    bool finite_ = false;
};

// Sanity-checked score from precomputed candidate powers.
NormalizedPower norm_power(std::span<const double> powers, const CandidateSet& in_set,
                           std::span<const double> nominal, const DetectionParams& params);

NormalizedPower norm_power(std::span<const double> window, const CandidateSet& in_set,
                           std::span<const double> nominal, const FrequencyGrid& grid,
                           const DetectionParams& params, double sample_rate);

struct DetectionOutcome {
    std::optional<std::size_t> location;  // nullopt == not present
    NormalizedPower peak = NormalizedPower::rejected();

    bool present() const noexcept { return location.has_value(); }
};

// Called for every evaluated window (coarse then fine) in scan order.
using WindowTrace = std::function<void(std::size_t index, const NormalizedPower& score)>;

DetectionOutcome detect(std::span<const std::int16_t> recording, const ReferenceSignal& signal,
                        const FrequencyGrid& grid, const DetectionParams& params,
                        const WindowTrace& trace = {});

// Both signals in one scan; each window's spectrum is computed once.
std::pair<DetectionOutcome, DetectionOutcome> detect_pair(std::span<const std::int16_t> recording,
                                                          const ReferenceSignal& first,
                                                          const ReferenceSignal& second,
                                                          const FrequencyGrid& grid,
                                                          const DetectionParams& params);

// argmax_i sum_t X[i+t] S[t]; never reports absence.
std::size_t cross_correlate_detect(std::span<const std::int16_t> recording,
                                   const ReferenceSignal& signal);

}  // namespace piano
