#include "doctest.h"

#include "core/error.hpp"
#include "core/protocol.hpp"

#include "json.hpp"

#include <algorithm>

using namespace piano;

namespace {

struct Pair {
    DeviceConfig a{"auth", {0, 0, 0}, 44100.0};
    DeviceConfig v{"vouch", {0.5, 0, 0}, 44100.0};
};

ChannelConfig office() {
    ChannelConfig c;
    c.noise = EnvironmentNoise::preset(Environment::Office);
    return c;
}

SessionResult run_at(double d, std::uint64_t seed, ChannelConfig c = office(), SessionConfig s = {},
                     AuthPolicy p = {}) {
    Pair pair;
    pair.v.position = {d, 0, 0};
    return run_authentication(pair.a, pair.v, p, seed, c, s);
}

}  // namespace

TEST_SUITE("protocol") {
    TEST_CASE("distance from location differences") {
        SessionMeasurements m{0, 130, 130, 0, 44100.0, 44100.0};
        CHECK(estimate_distance(m, 340.0) == doctest::Approx(0.5 * 340.0 * 260.0 / 44100.0));
        CHECK(estimate_distance(m, 340.0) == doctest::Approx(1.00226).epsilon(1e-5));
        CHECK(estimate_distance(130, 130, 44100.0, 44100.0, 340.0) == doctest::Approx(1.00226).epsilon(1e-5));
        // Opposite differences cancel.
        CHECK(estimate_distance(SessionMeasurements{100, 230, 500, 630, 44100.0, 44100.0}, 340.0) == 0.0);
        // Symmetric scene: both one-way estimates agree with the mean.
        const double d_a = 340.0 * 65 / 44100.0;
        CHECK(estimate_distance(65, 65, 44100.0, 44100.0, 340.0) == doctest::Approx(d_a));
    }

    TEST_CASE("scaling differences and sample rates together leaves distance unchanged") {
        for (double c : {0.5, 1.0001, 2.0, 3.0}) {
            const double base = estimate_distance(SessionMeasurements{0, 1200, 1200, 0, 44100.0, 48000.0}, 340.0);
            SessionMeasurements scaled{0, static_cast<std::int64_t>(1200 * c), static_cast<std::int64_t>(1200 * c), 0,
                                       44100.0 * c, 48000.0 * c};
            if (1200 * c == std::floor(1200 * c)) CHECK(estimate_distance(scaled, 340.0) == doctest::Approx(base));
        }
    }

    TEST_CASE("decisions against the threshold") {
        AuthPolicy p;
        p.threshold_m = 1.0;
        const auto near = decide(0.4, p);
        CHECK(near.verdict == Verdict::Accept);
        CHECK(*near.estimated_distance_m == 0.4);
        const auto far = decide(1.3, p);
        CHECK(far.verdict == Verdict::Reject);
        CHECK(far.reason == RejectReason::DistanceExceeded);
        CHECK(*far.estimated_distance_m > p.threshold_m);
        const auto negative = decide(-0.05, p);
        CHECK(negative.verdict == Verdict::Accept);
        CHECK(*negative.estimated_distance_m == 0.0);
        p.enforce_threshold = false;
        CHECK(decide(5.0, p).verdict == Verdict::Accept);
    }

    TEST_CASE("raising the threshold never turns an accept into a reject") {
        for (double d = -0.2; d < 3.0; d += 0.05)
            for (double t1 = 0.1; t1 < 3.0; t1 += 0.1) {
                AuthPolicy p1, p2;
                p1.threshold_m = t1;
                p2.threshold_m = t1 + 0.3;
                if (decide(d, p1).verdict == Verdict::Accept) CHECK(decide(d, p2).verdict == Verdict::Accept);
            }
    }

    TEST_CASE("policy invariants") {
        AuthPolicy p;
        p.threshold_m = 0.0;
        CHECK_THROWS_AS(p.validate(), Error);
        p.threshold_m = 10.0;
        CHECK_THROWS_AS(p.validate(), Error);
        p.threshold_m = 2.0;
        CHECK_NOTHROW(p.validate());
    }

    TEST_CASE("signals survive the secure channel byte for byte") {
        Rng rng = make_rng(3);
        SignalDefaults d;
        d.random_phase = true;
        const auto s = synthesize(sample_spec(rng, default_grid(), d));
        const auto bytes = serialize_signal(s);
        const auto back = deserialize_signal(bytes, default_grid());
        CHECK(back.samples == s.samples);
        CHECK(back.spec.candidates == s.spec.candidates);
        CHECK(back.spec.phases == s.spec.phases);
        CHECK(back.nominal_power == s.nominal_power);
        CHECK(serialize_signal(back) == bytes);
        auto truncated = bytes;
        truncated.pop_back();
        CHECK_THROWS_AS(deserialize_signal(truncated, default_grid()), Error);
    }

    TEST_CASE("nearby devices in an office are accepted") {
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            const auto r = run_at(0.5, seed);
            CHECK(r.decision.verdict == Verdict::Accept);
            REQUIRE(r.decision.estimated_distance_m);
            CHECK(std::abs(*r.decision.estimated_distance_m - 0.5) < 0.2);
        }
    }

    TEST_CASE("devices beyond the detection range are rejected") {
        const auto r = run_at(3.0, 2);
        CHECK(r.decision.verdict == Verdict::Reject);
        CHECK(r.decision.reason == RejectReason::SignalNotPresent);
    }

    TEST_CASE("a wall between the devices blocks authentication") {
        auto c = office();
        c.wall_attenuation_db = 60.0;
        c.wall_x = 0.25;
        const auto r = run_at(0.5, 3, c);
        CHECK(r.decision.reason == RejectReason::SignalNotPresent);
    }

    TEST_CASE("unpaired or disconnected devices are rejected") {
        const auto far = run_at(12.0, 4);
        CHECK(far.decision.reason == RejectReason::NotPaired);
        CHECK(far.transcript.messages.empty());
        SessionConfig s;
        s.drop_channel = true;
        const auto dropped = run_at(0.5, 4, office(), s);
        CHECK(dropped.decision.reason == RejectReason::NotPaired);
    }

    TEST_CASE("the vouching device only reports its location difference") {
        const auto r = run_at(0.8, 5);
        REQUIRE(r.decision.verdict == Verdict::Accept);
        std::size_t from_v = 0;
        for (const auto& m : r.transcript.messages) {
            if (m.from != "vouch") continue;
            ++from_v;
            CHECK(m.kind == "vouch_difference");
            CHECK(m.bytes == 8);
        }
        CHECK(from_v == 1);
        CHECK(*r.transcript.vouch_difference == *r.transcript.l_VA - *r.transcript.l_VV);
    }

    TEST_CASE("transcripts allow the verdict to be recomputed offline") {
        for (double d : {0.4, 1.4, 2.0, 3.0}) {
            const auto r = run_at(d, 6);
            const auto j = nlohmann::json::parse(r.transcript.to_json());
            CHECK(j.at("freqs_A_hz").size() > 0);
            CHECK(j.at("freqs_V_hz").size() > 0);
            CHECK(j.at("seed") == 6);
            if (j.at("reason") == "signal_not_present") continue;
            const auto& l = j.at("locations");
            const SessionMeasurements m{l.at("l_AA"), l.at("l_AV"), l.at("l_VA"), l.at("l_VV"), j.at("f_A"), j.at("f_V")};
            const double raw = estimate_distance(m, 340.0);
            CHECK(raw == doctest::Approx(j.at("raw_distance_m").get<double>()));
            CHECK(to_string(decide(raw, AuthPolicy{}).verdict) == j.at("verdict").get<std::string>());
        }
    }

    TEST_CASE("sessions are reproducible from the seed") {
        CHECK(run_at(1.1, 9).transcript.to_json() == run_at(1.1, 9).transcript.to_json());
        CHECK(run_at(1.1, 9).transcript.to_json() != run_at(1.1, 10).transcript.to_json());
    }

    TEST_CASE("the two signals never share a frequency set") {
        for (std::uint64_t seed = 0; seed < 40; ++seed) {
            const auto r = run_at(12.0 - 11.0, seed, ChannelConfig{});
            CHECK(r.transcript.freqs_A_hz != r.transcript.freqs_V_hz);
        }
        SessionConfig s;
        s.disjoint_sets = true;
        const auto r = run_at(1.0, 1, office(), s);
        for (double f : r.transcript.freqs_A_hz)
            CHECK(std::find(r.transcript.freqs_V_hz.begin(), r.transcript.freqs_V_hz.end(), f) ==
                  r.transcript.freqs_V_hz.end());
    }

    TEST_CASE("clock skew on the vouching device is compensated") {
        Pair pair;
        pair.v.position = {1.0, 0, 0};
        pair.v.sample_rate = 44100.0 * 1.0005;
        const auto r = run_authentication(pair.a, pair.v, AuthPolicy{}, 11, office(), SessionConfig{});
        REQUIRE(r.transcript.raw_distance_m);
        CHECK(std::abs(*r.transcript.raw_distance_m - 1.0) < 0.2);
    }
}
