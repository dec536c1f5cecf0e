#include "core/channel.hpp"

#include "core/error.hpp"
#include "core/random.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace piano {

namespace {

// Kaiser-windowed sinc, tabulated over fractional offsets.
class InterpolationTable {
public:
    static constexpr int kHalfWidth = 16;
    static constexpr int kPhases = 1024;
    static constexpr double kBeta = 8.0;

    static const InterpolationTable& instance() {
        static const InterpolationTable table;
        return table;
    }

    // Taps for x(p) = sum_j taps[j] * x[floor(p) - kHalfWidth + 1 + j], mu = p - floor(p).
    void taps(double mu, std::array<double, 2 * kHalfWidth>& out) const {
        const double scaled = mu * kPhases;
        const int row = std::min(static_cast<int>(scaled), kPhases - 1);
        const double frac = scaled - row;
        const auto& a = rows_[row];
        const auto& b = rows_[row + 1];
        for (int j = 0; j < 2 * kHalfWidth; ++j) out[j] = a[j] + frac * (b[j] - a[j]);
    }

private:
    InterpolationTable() : rows_(kPhases + 1) {
        const double norm = std::cyl_bessel_i(0.0, kBeta);
        for (int r = 0; r <= kPhases; ++r) {
            const double mu = static_cast<double>(r) / kPhases;
            for (int j = 0; j < 2 * kHalfWidth; ++j) {
                const int offset = j - kHalfWidth + 1;  // sample index relative to floor(p)
                const double d = mu - offset;
                double v;
                if (r == 0 || r == kPhases) {
                    const int hit = r == 0 ? 0 : 1;
                    v = offset == hit ? 1.0 : 0.0;
                } else {
                    const double ratio = d / kHalfWidth;
                    const double w = std::abs(ratio) < 1.0
                                         ? std::cyl_bessel_i(0.0, kBeta * std::sqrt(1.0 - ratio * ratio)) / norm
                                         : 0.0;
                    v = std::sin(std::numbers::pi * d) / (std::numbers::pi * d) * w;
                }
                rows_[r][j] = v;
            }
        }
    }

    std::vector<std::array<double, 2 * kHalfWidth>> rows_;
};

// Band-limited read of x at fractional position p (zero outside).
double interpolate(std::span<const double> x, double p) {
    const double fl = std::floor(p);
    const double mu = p - fl;
    const auto base = static_cast<std::int64_t>(fl);
    const auto n = static_cast<std::int64_t>(x.size());
    if (mu == 0.0) return base >= 0 && base < n ? x[static_cast<std::size_t>(base)] : 0.0;

    constexpr int H = InterpolationTable::kHalfWidth;
    std::array<double, 2 * H> taps;
    InterpolationTable::instance().taps(mu, taps);
    double acc = 0.0;
    for (int j = 0; j < 2 * H; ++j) {
        const std::int64_t idx = base - H + 1 + j;
        if (idx >= 0 && idx < n) acc += taps[j] * x[static_cast<std::size_t>(idx)];
    }
    return acc;
}

// Slow delay wander: three random 2-12 Hz sinusoids scaled to the target RMS.
class DelayWander {
public:
    DelayWander(double rms_samples, double rate, std::uint64_t seed) {
        if (rms_samples <= 0.0) return;
        Rng rng = make_rng(seed);
        std::uniform_real_distribution<double> freq(2.0, 12.0);
        std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
        const double amplitude = rms_samples / std::sqrt(1.5);
        for (auto& c : components_) {
            c.omega = 2.0 * std::numbers::pi * freq(rng) / rate;
            c.phase = phase(rng);
            c.amplitude = amplitude;
        }
        active_ = true;
        peak_ = 3.0 * amplitude;
    }

    double at(double t) const {
        if (!active_) return 0.0;
        double v = 0.0;
        for (const auto& c : components_) v += c.amplitude * std::sin(c.omega * t + c.phase);
        return v;
    }

    double peak() const { return peak_; }

private:
    struct Component {
        double omega = 0.0;
        double phase = 0.0;
        double amplitude = 0.0;
    };
    std::array<Component, 3> components_{};
    bool active_ = false;
    double peak_ = 0.0;
};

Contribution render_path(std::span<const double> waveform, double emit_time, double delay,
                         double gain, const ChannelConfig& config, std::uint64_t path_seed) {
    Contribution out;
    if (waveform.empty() || gain == 0.0) return out;

    // Kernel is applied centred so that it adds no net delay.
    const auto& h = config.smoothing_kernel;
    const std::size_t k_len = h.size();
    const double centre = static_cast<double>(k_len - 1) / 2.0;
    std::vector<double> smoothed(waveform.size() + k_len - 1, 0.0);
    for (std::size_t i = 0; i < waveform.size(); ++i)
        for (std::size_t k = 0; k < k_len; ++k) smoothed[i + k] += waveform[i] * h[k];

    const double origin = emit_time - centre + delay;  // scene time of smoothed[0]
    const DelayWander wander(config.wander_rms_samples, config.scene_rate, path_seed);
    const double margin = InterpolationTable::kHalfWidth + std::ceil(wander.peak()) + 1;
    const auto first = static_cast<std::int64_t>(std::floor(origin - margin));
    const auto last = static_cast<std::int64_t>(std::ceil(origin + smoothed.size() + margin));

    out.start = first;
    out.samples.resize(static_cast<std::size_t>(last - first + 1));
    for (std::int64_t k = first; k <= last; ++k) {
        const double local = static_cast<double>(k) - origin;
        const double p = local - wander.at(local);
        out.samples[static_cast<std::size_t>(k - first)] = gain * interpolate(smoothed, p);
    }
    return out;
}

void biquad_lowpass(std::vector<double>& x, double cutoff, double rate, double q) {
    const double w0 = 2.0 * std::numbers::pi * cutoff / rate;
    const double cw = std::cos(w0);
    const double alpha = std::sin(w0) / (2.0 * q);
    const double a0 = 1.0 + alpha;
    const double b0 = (1.0 - cw) / 2.0 / a0, b1 = (1.0 - cw) / a0, b2 = b0;
    const double a1 = -2.0 * cw / a0, a2 = (1.0 - alpha) / a0;
    double x1 = 0, x2 = 0, y1 = 0, y2 = 0;
    for (double& v : x) {
        const double y = b0 * v + b1 * x1 + b2 * x2 - a1 * y1 - a2 * y2;
        x2 = x1;
        x1 = v;
        y2 = y1;
        y1 = y;
        v = y;
    }
}

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

double distance(const Vec3& a, const Vec3& b) noexcept {
    const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

Environment parse_environment(std::string_view name) {
    if (name == "silent") return Environment::Silent;
    if (name == "office") return Environment::Office;
    if (name == "home") return Environment::Home;
    if (name == "street") return Environment::Street;
    if (name == "restaurant") return Environment::Restaurant;
    throw Error(ErrorCode::Config, "unknown environment '" + std::string(name) + "'");
}

const char* to_string(Environment env) noexcept {
    switch (env) {
        case Environment::Silent: return "silent";
        case Environment::Office: return "office";
        case Environment::Home: return "home";
        case Environment::Street: return "street";
        case Environment::Restaurant: return "restaurant";
    }
    return "unknown";
}

EnvironmentNoise EnvironmentNoise::preset(Environment env, std::uint64_t seed) {
    EnvironmentNoise noise;
    noise.name = env;
    noise.seed = seed;
    switch (env) {
        case Environment::Silent: noise.noise_rms = 0.0; break;
        case Environment::Office: noise.noise_rms = 500.0; break;
        case Environment::Home: noise.noise_rms = 1000.0; break;
        case Environment::Restaurant: noise.noise_rms = 900.0; break;
        case Environment::Street: noise.noise_rms = 2500.0; break;
    }
    return noise;
}

std::vector<double> generate_noise(const EnvironmentNoise& noise, std::size_t length,
                                   double sample_rate, std::uint64_t stream) {
    std::vector<double> out(length, 0.0);
    if (noise.noise_rms <= 0.0 || length == 0) return out;

    constexpr std::size_t kWarmup = 4096;
    constexpr int kOrder = 8;
    Rng rng = make_rng(derive_seed(noise.seed, stream));
    std::normal_distribution<double> gauss(0.0, 1.0);

    std::vector<double> shaped(length + kWarmup);
    for (double& v : shaped) v = gauss(rng);
    for (int k = 0; k < kOrder / 2; ++k) {
        const double q = 1.0 / (2.0 * std::sin((2.0 * k + 1.0) * std::numbers::pi / (2.0 * kOrder)));
        biquad_lowpass(shaped, noise.lowpass_cutoff_hz, sample_rate, q);
    }
    double energy = 0.0;
    for (std::size_t i = kWarmup; i < shaped.size(); ++i) energy += shaped[i] * shaped[i];
    const double scale = energy > 0.0 ? std::sqrt(static_cast<double>(length) / energy) : 0.0;

    const double low = std::sqrt(1.0 - noise.hf_floor_fraction);
    const double high = std::sqrt(noise.hf_floor_fraction);
    for (std::size_t i = 0; i < length; ++i)
        out[i] = noise.noise_rms * (low * scale * shaped[i + kWarmup] + high * gauss(rng));
    return out;
}

std::vector<double> default_smoothing_kernel() {
    std::vector<double> h{-0.0086, 0.0075, 0.0247, 0.05, 0.9968, 0.05, 0.0247, 0.0075, -0.0086};
    const double norm = std::sqrt(std::inner_product(h.begin(), h.end(), h.begin(), 0.0));
    for (double& v : h) v /= norm;
    return h;
}

void ChannelConfig::validate() const {
    auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidArgument, "channel: " + what); };
    if (!(speed_of_sound > 0.0)) fail("speed_of_sound must be positive");
    if (!(gain_at_1m > 0.0)) fail("gain_at_1m must be positive");
    if (!(self_gain >= 0.0)) fail("self_gain must be non-negative");
    if (!(attenuation_exponent >= 0.0)) fail("attenuation_exponent must be non-negative");
    if (!(scene_rate > 0.0)) fail("scene_rate must be positive");
    if (!(wander_rms_samples >= 0.0)) fail("wander_rms_samples must be non-negative");
    if (!(wall_attenuation_db >= 0.0)) fail("wall_attenuation_db must be non-negative");
    if (smoothing_kernel.empty()) fail("smoothing kernel is empty");
    const double energy = std::inner_product(smoothing_kernel.begin(), smoothing_kernel.end(),
                                             smoothing_kernel.begin(), 0.0);
    if (std::abs(energy - 1.0) > 1e-9) fail("smoothing kernel must have unit energy");
}

double path_gain(const Vec3& src, const Vec3& dst, const ChannelConfig& config) {
    const double d = std::max(distance(src, dst), 0.1);
    double gain = config.gain_at_1m / std::pow(d, config.attenuation_exponent / 2.0);
    if (config.wall_x && config.wall_attenuation_db > 0.0 &&
        (src.x - *config.wall_x) * (dst.x - *config.wall_x) < 0.0)
        gain *= std::pow(10.0, -config.wall_attenuation_db / 20.0);
    return gain;
}

double path_delay(const Vec3& src, const Vec3& dst, const ChannelConfig& config) {
    return distance(src, dst) / config.speed_of_sound * config.scene_rate;
}

Contribution propagate(std::span<const double> waveform, double emit_time, const Vec3& src,
                       const Vec3& dst, const ChannelConfig& config, std::uint64_t path_seed) {
    return render_path(waveform, emit_time, path_delay(src, dst, config),
                       path_gain(src, dst, config), config, path_seed);
}

std::vector<double> record_analog(const AcousticScene& scene, std::string_view device_id,
                                  const ChannelConfig& config, bool with_noise) {
    config.validate();
    const auto it = std::find_if(scene.recorders.begin(), scene.recorders.end(),
                                 [&](const Recorder& r) { return r.device_id == device_id; });
    if (it == scene.recorders.end())
        throw Error(ErrorCode::UnknownDevice, "record: unknown device '" + std::string(device_id) + "'");
    const Recorder& rec = *it;
    if (!(rec.sample_rate > 0.0)) throw Error(ErrorCode::InvalidArgument, "record: bad sample rate");

    // Scene-time span read by the device, padded for interpolation.
    const double step = config.scene_rate / rec.sample_rate;
    const double pad = InterpolationTable::kHalfWidth + 2;
    const auto span_start = static_cast<std::int64_t>(std::floor(rec.start_time - pad));
    const auto span_end = static_cast<std::int64_t>(
        std::ceil(rec.start_time + static_cast<double>(rec.length) * step + pad));
    std::vector<double> scene_buf(static_cast<std::size_t>(span_end - span_start + 1), 0.0);

    const std::uint64_t device_hash = fnv1a(device_id);
    for (const auto& e : scene.emissions) {
        std::uint64_t seed = derive_seed(scene.seed, fnv1a(e.source_id) ^ (device_hash * 31));
        seed = derive_seed(seed, static_cast<std::uint64_t>(std::llround(e.emit_time * 16.0)));
        Contribution c;
        if (e.source_id == device_id)
            c = render_path(e.waveform, e.emit_time, 0.0, config.self_gain, config, seed);
        else
            c = propagate(e.waveform, e.emit_time, e.position, rec.position, config, seed);
        for (std::size_t i = 0; i < c.samples.size(); ++i) {
            const std::int64_t k = c.start + static_cast<std::int64_t>(i) - span_start;
            if (k >= 0 && k < static_cast<std::int64_t>(scene_buf.size()))
                scene_buf[static_cast<std::size_t>(k)] += c.samples[i];
        }
    }
    if (with_noise) {
        const auto noise = generate_noise(config.noise, scene_buf.size(), config.scene_rate, device_hash);
        for (std::size_t i = 0; i < scene_buf.size(); ++i) scene_buf[i] += noise[i];
    }

    std::vector<double> out(rec.length);
    for (std::size_t k = 0; k < rec.length; ++k) {
        const double p = rec.start_time + static_cast<double>(k) * step - static_cast<double>(span_start);
        out[k] = interpolate(scene_buf, p);
    }
    return out;
}

std::vector<std::int16_t> quantize(std::span<const double> analog) {
    std::vector<std::int16_t> out(analog.size());
    for (std::size_t i = 0; i < analog.size(); ++i) {
        const double r = std::round(analog[i]);
        out[i] = static_cast<std::int16_t>(std::clamp(r, -32768.0, 32767.0));
    }
    return out;
}

Recording record(const AcousticScene& scene, std::string_view device_id, const ChannelConfig& config) {
    const auto it = std::find_if(scene.recorders.begin(), scene.recorders.end(),
                                 [&](const Recorder& r) { return r.device_id == device_id; });
    Recording rec;
    rec.samples = quantize(record_analog(scene, device_id, config));
    rec.sample_rate = it->sample_rate;
    return rec;
}

}  // namespace piano
