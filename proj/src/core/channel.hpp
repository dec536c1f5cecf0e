#pragma once

// Sample-accurate acoustic propagation between simulated devices.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace piano {

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
};

double distance(const Vec3& a, const Vec3& b) noexcept;

enum class Environment { Silent, Office, Home, Street, Restaurant };

Environment parse_environment(std::string_view name);
const char* to_string(Environment env) noexcept;

// Low-passed Gaussian background noise with a small white floor.
struct EnvironmentNoise {
    Environment name = Environment::Office;
    double lowpass_cutoff_hz = 4500.0;  // 8th-order Butterworth corner
    double hf_floor_fraction = 0.005;   // share of noise power that is white
    double noise_rms = 500.0;
    std::uint64_t seed = 0;

    static EnvironmentNoise preset(Environment env, std::uint64_t seed = 0);
};

// `length` samples at noise.noise_rms; deterministic in (noise.seed, stream).
std::vector<double> generate_noise(const EnvironmentNoise& noise, std::size_t length,
                                   double sample_rate, std::uint64_t stream);

std::vector<double> default_smoothing_kernel();

struct ChannelConfig {
    double speed_of_sound = 340.0;
    double attenuation_exponent = 2.0;
    double gain_at_1m = 0.27;
    double self_gain = 0.5;  // speaker-to-own-microphone coupling
    std::vector<double> smoothing_kernel = default_smoothing_kernel();
    double wander_rms_samples = 0.25;  // slow per-path delay jitter
    double wall_attenuation_db = 0.0;
    std::optional<double> wall_x;  // wall plane x = wall_x; separates endpoints on opposite sides
    double scene_rate = 44100.0;
    EnvironmentNoise noise;

    void validate() const;
};

// Amplitude factor of the direct path, including the 0.1 m floor and any wall.
double path_gain(const Vec3& src, const Vec3& dst, const ChannelConfig& config);

// Propagation delay in scene samples.
double path_delay(const Vec3& src, const Vec3& dst, const ChannelConfig& config);

struct Contribution {
    std::int64_t start = 0;  // scene sample index of samples[0]
    std::vector<double> samples;
};

// Waveform emitted at `emit_time` (scene samples) from src as heard at dst:
// smoothed, delayed by distance / s with band-limited fractional interpolation,
// scaled by gain_at_1m / max(d, 0.1)^(exponent / 2), and wall-attenuated.
Contribution propagate(std::span<const double> waveform, double emit_time, const Vec3& src,
                       const Vec3& dst, const ChannelConfig& config, std::uint64_t path_seed);

struct Emission {
    std::string source_id;
    std::vector<double> waveform;
    double emit_time = 0.0;
    Vec3 position;
};

struct Recorder {
    std::string device_id;
    Vec3 position;
    double sample_rate = 44100.0;  // device clock; != scene_rate models skew
    double start_time = 0.0;       // scene sample at which recording begins
    std::size_t length = 0;        // device samples
};

struct AcousticScene {
    std::vector<Emission> emissions;
    std::vector<Recorder> recorders;
    std::size_t duration = 0;  // scene samples
    std::uint64_t seed = 0;
};

struct Recording {
    std::vector<std::int16_t> samples;
    double sample_rate = 44100.0;
};

// Pre-quantization microphone signal of one device.
std::vector<double> record_analog(const AcousticScene& scene, std::string_view device_id,
                                  const ChannelConfig& config, bool with_noise = true);

// record_analog, rounded and saturated to 16 bits.
Recording record(const AcousticScene& scene, std::string_view device_id,
                 const ChannelConfig& config);

std::vector<std::int16_t> quantize(std::span<const double> analog);

}  // namespace piano
