#include "doctest.h"

#include "core/channel.hpp"
#include "core/error.hpp"
#include "core/spectrum.hpp"

#include <cmath>
#include <numeric>

using namespace piano;

namespace {

ChannelConfig plain_channel() {
    ChannelConfig c;
    c.smoothing_kernel = {1.0};
    c.wander_rms_samples = 0.0;
    c.noise = EnvironmentNoise::preset(Environment::Silent);
    return c;
}

double rms(std::span<const double> x) {
    return std::sqrt(std::inner_product(x.begin(), x.end(), x.begin(), 0.0) / static_cast<double>(x.size()));
}

ReferenceSignal test_signal(std::uint64_t seed) {
    Rng rng = make_rng(seed);
    return synthesize(sample_spec(rng, default_grid()));
}

std::vector<double> as_double(const ReferenceSignal& s) { return {s.samples.begin(), s.samples.end()}; }

}  // namespace

TEST_SUITE("channel") {
    TEST_CASE("co-located endpoints clamp to the 0.1 m floor") {
        const auto c = plain_channel();
        const std::vector<double> w{1.0, -2.0, 3.0, 0.5};
        const auto out = propagate(w, 100.0, {}, {}, c, 1);
        const double g = c.gain_at_1m / 0.1;
        for (std::size_t i = 0; i < w.size(); ++i) {
            const auto k = 100 + static_cast<std::int64_t>(i) - out.start;
            REQUIRE(k >= 0);
            CHECK(out.samples[static_cast<std::size_t>(k)] == doctest::Approx(w[i] * g));
        }
        CHECK(path_gain({}, {}, c) == doctest::Approx(2.7));
    }

    TEST_CASE("one metre is 129.70588 samples") {
        const auto c = plain_channel();
        const double delay = path_delay({0, 0, 0}, {1, 0, 0}, c);
        CHECK(std::floor(delay) == 129.0);
        CHECK(delay - std::floor(delay) == doctest::Approx(0.70588).epsilon(1e-4));
    }

    TEST_CASE("fractional delay reproduces a band-limited tone") {
        const auto c = plain_channel();
        std::vector<double> w(2000);
        const double f = 3000.0;
        for (std::size_t t = 0; t < w.size(); ++t) w[t] = std::sin(2.0 * std::numbers::pi * f * t / 44100.0);
        const Vec3 dst{1.0, 0, 0};
        const auto out = propagate(w, 0.0, {}, dst, c, 1);
        const double delay = path_delay({}, dst, c), g = path_gain({}, dst, c);
        for (std::int64_t k = 400; k < 1600; k += 37) {
            const double expected = g * std::sin(2.0 * std::numbers::pi * f * (k - delay) / 44100.0);
            CHECK(out.samples[static_cast<std::size_t>(k - out.start)] == doctest::Approx(expected).epsilon(1e-3));
        }
    }

    TEST_CASE("a 60 dB wall scales RMS by 1e-3") {
        auto c = plain_channel();
        const auto s = test_signal(1);
        const Vec3 a{0, 0, 0}, b{0.5, 0, 0};
        const auto open = propagate(as_double(s), 0.0, a, b, c, 7);
        c.wall_attenuation_db = 60.0;
        c.wall_x = 0.25;
        const auto walled = propagate(as_double(s), 0.0, a, b, c, 7);
        CHECK(rms(walled.samples) / rms(open.samples) == doctest::Approx(1e-3));
        // A wall that does not separate the endpoints has no effect.
        c.wall_x = 2.0;
        CHECK(path_gain(a, b, c) == doctest::Approx(c.gain_at_1m / 0.5));
    }

    TEST_CASE("reciprocity of delay and attenuation") {
        ChannelConfig c;
        const Vec3 a{0.3, -1.0, 0.2}, b{1.7, 0.4, 0.0};
        CHECK(path_delay(a, b, c) == path_delay(b, a, c));
        CHECK(path_gain(a, b, c) == path_gain(b, a, c));
        c.wall_x = 1.0;
        c.wall_attenuation_db = 20.0;
        CHECK(path_gain(a, b, c) == path_gain(b, a, c));
    }

    TEST_CASE("empty silent scene records zeros") {
        AcousticScene scene;
        scene.duration = 1000;
        scene.recorders.push_back({"m", {}, 44100.0, 0.0, 1000});
        ChannelConfig c;
        c.noise = EnvironmentNoise::preset(Environment::Silent);
        const auto rec = record(scene, "m", c);
        CHECK(rec.samples.size() == 1000);
        CHECK(std::all_of(rec.samples.begin(), rec.samples.end(), [](auto v) { return v == 0; }));
    }

    TEST_CASE("unknown devices are rejected") {
        AcousticScene scene;
        scene.recorders.push_back({"m", {}, 44100.0, 0.0, 10});
        try {
            record(scene, "other", ChannelConfig{});
            FAIL("expected an error");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::UnknownDevice);
        }
    }

    TEST_CASE("arrival difference between two recorders") {
        ChannelConfig c;
        c.noise = EnvironmentNoise::preset(Environment::Office, 3);
        const auto s = test_signal(2);
        AcousticScene scene;
        scene.seed = 5;
        scene.emissions.push_back({"src", as_double(s), 5000.0, {0, 0, 0}});
        scene.recorders.push_back({"near", {0.5, 0, 0}, 44100.0, 0.0, 15000});
        scene.recorders.push_back({"far", {1.0, 0, 0}, 44100.0, 0.0, 15000});
        DetectionParams p;
        p.fine_step = 1;
        const auto g = default_grid();
        const auto near = detect(record(scene, "near", c).samples, s, g, p);
        const auto far = detect(record(scene, "far", c).samples, s, g, p);
        REQUIRE(near.present());
        REQUIRE(far.present());
        const long diff = static_cast<long>(*far.location) - static_cast<long>(*near.location);
        CHECK(std::abs(diff - std::lround(0.5 / 340.0 * 44100.0)) <= 2);
        CHECK(std::lround(0.5 / 340.0 * 44100.0) == 65);
    }

    TEST_CASE("noise keeps at most 1% of its power above 6 kHz") {
        for (auto env : {Environment::Office, Environment::Home, Environment::Street, Environment::Restaurant}) {
            const auto n = EnvironmentNoise::preset(env, 11);
            const auto x = generate_noise(n, 1 << 16, 44100.0, 0);
            CHECK(rms(x) == doctest::Approx(n.noise_rms).epsilon(0.05));
            const auto y = power_spectrum(x, 44100.0);
            double total = 0.0, high = 0.0;
            for (std::size_t k = 1; k < y.power.size(); ++k) {
                total += y.power[k];
                if (y.bin_frequency(k) > 6000.0) high += y.power[k];
            }
            CHECK(high / total <= 0.01);
        }
    }

    TEST_CASE("environment noise levels are ordered") {
        auto level = [](Environment e) { return EnvironmentNoise::preset(e).noise_rms; };
        CHECK(level(Environment::Silent) == 0.0);
        CHECK(level(Environment::Office) < level(Environment::Home));
        CHECK(level(Environment::Office) < level(Environment::Restaurant));
        CHECK(level(Environment::Home) < level(Environment::Street));
        CHECK(level(Environment::Restaurant) < level(Environment::Street));
        CHECK(parse_environment("street") == Environment::Street);
        CHECK_THROWS_AS(parse_environment("moon"), Error);
    }

    TEST_CASE("default kernel has unit energy") {
        const auto h = default_smoothing_kernel();
        CHECK(h.size() == 9);
        CHECK(std::inner_product(h.begin(), h.end(), h.begin(), 0.0) == doctest::Approx(1.0));
        ChannelConfig c;
        c.smoothing_kernel = {0.5, 0.5};
        CHECK_THROWS_AS(c.validate(), Error);
    }

    TEST_CASE("recordings are deterministic") {
        ChannelConfig c;
        c.noise = EnvironmentNoise::preset(Environment::Street, 9);
        AcousticScene scene;
        scene.seed = 99;
        scene.emissions.push_back({"a", as_double(test_signal(3)), 1000.0, {0.7, 0.2, 0}});
        scene.recorders.push_back({"m", {}, 44100.0, 0.0, 8000});
        CHECK(record(scene, "m", c).samples == record(scene, "m", c).samples);
    }

    TEST_CASE("superposition with noise counted once") {
        ChannelConfig c;
        c.noise = EnvironmentNoise::preset(Environment::Office, 4);
        AcousticScene a, b, both;
        for (auto* s : {&a, &b, &both}) {
            s->seed = 12;
            s->recorders.push_back({"m", {}, 44100.0, 0.0, 9000});
        }
        const Emission ea{"x", as_double(test_signal(4)), 500.0, {1.0, 0, 0}};
        const Emission eb{"y", as_double(test_signal(5)), 2500.0, {0, 1.5, 0}};
        a.emissions = {ea};
        b.emissions = {eb};
        both.emissions = {ea, eb};
        const auto ra = record_analog(a, "m", c, false);
        const auto rb = record_analog(b, "m", c, false);
        const auto rn = record_analog(AcousticScene{{}, a.recorders, 0, 12}, "m", c, true);
        const auto rboth = record_analog(both, "m", c, true);
        for (std::size_t i = 0; i < rboth.size(); i += 13) CHECK(rboth[i] == doctest::Approx(ra[i] + rb[i] + rn[i]));
    }

    TEST_CASE("quantization saturates") {
        const std::vector<double> x{0.4, 0.5, -0.5, 40000.0, -40000.0, 32767.4};
        const auto q = quantize(x);
        CHECK(q == std::vector<std::int16_t>{0, 1, -1, 32767, -32768, 32767});
    }

    TEST_CASE("clock skew stretches sample distances") {
        auto c = plain_channel();
        const auto s = test_signal(6);
        AcousticScene scene;
        scene.seed = 3;
        scene.emissions.push_back({"src", as_double(s), 2000.0, {0.3, 0, 0}});
        scene.emissions.push_back({"src", as_double(s), 22000.0, {0.3, 0, 0}});
        for (double rate : {44100.0, 44100.0 * 1.002, 44100.0 * 0.998})
            scene.recorders.push_back({"r" + std::to_string(rate), {}, rate, 0.0, 30000});
        DetectionParams p;
        p.fine_step = 1;
        const auto g = default_grid();
        for (const auto& r : scene.recorders) {
            const auto x = record(scene, r.device_id, c).samples;
            const auto first = detect(std::span(x).first(15000), s, g, p);
            const auto second = detect(std::span(x).subspan(15000), s, g, p);
            REQUIRE(first.present());
            REQUIRE(second.present());
            const double gap = static_cast<double>(*second.location + 15000 - *first.location);
            CHECK(std::abs(gap - 20000.0 * r.sample_rate / 44100.0) <= 2.0);
        }
    }

    TEST_CASE("emergent range gate lies between 2 and 3 metres") {
        ChannelConfig c;
        c.noise = EnvironmentNoise::preset(Environment::Office, 8);
        const auto g = default_grid();
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            const auto s = test_signal(40 + seed);
            for (double d : {2.0, 3.0}) {
                AcousticScene scene;
                scene.seed = seed;
                scene.emissions.push_back({"src", as_double(s), 3000.0, {d, 0, 0}});
                scene.recorders.push_back({"m", {}, 44100.0, 0.0, 12000});
                const bool present = detect(record(scene, "m", c).samples, s, g, DetectionParams{}).present();
                CHECK(present == (d < 2.5));
            }
        }
    }
}
