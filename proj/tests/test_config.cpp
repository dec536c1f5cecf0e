#include "doctest.h"

#include "core/config.hpp"
#include "core/error.hpp"

#include <optional>
#include <string>

using namespace piano;

namespace {

std::optional<ErrorCode> code_of(const std::string& json) {
    try {
        parse_config(json);
    } catch (const Error& e) {
        return e.code();
    }
    return std::nullopt;
}

}  // namespace

TEST_SUITE("config") {
    TEST_CASE("empty config yields defaults") {
        const auto c = parse_config("{}");
        CHECK(c.setup.environment == Environment::Office);
        CHECK(c.setup.policy.threshold_m == 1.0);
        CHECK(c.setup.session.grid.candidates_hz.size() == 30);
        CHECK(c.error_model.sigma_m == 0.0702);
        CHECK_FALSE(c.authenticating);
        CHECK(c.power_sweep.empty());
    }

    TEST_CASE("sections override the defaults") {
        const auto c = parse_config(R"({
            "environment": "street", "min_trials": 3, "threads": 2,
            "channel": {"speed_of_sound": 343.0, "wall_attenuation_db": 30},
            "signal": {"bins": 20, "random_phase": true},
            "detection": {"alpha": 0.02},
            "protocol": {"threshold_m": 1.5, "detector": "cross_correlation"},
            "attack": {"kind": "all_frequency", "power_sweep": [1e8, 1e9]},
            "error_model": {"sigma_m": 0.1},
            "echo": {"sigma_processing_s": 0.0},
            "devices": {"authenticating": {"position": [0, 0]},
                        "vouching": {"position": [1.2, 0.5, 0], "sample_rate": 48000}}
        })");
        CHECK(c.setup.environment == Environment::Street);
        CHECK(c.setup.min_trials == 3);
        CHECK(c.setup.threads == 2);
        CHECK(c.setup.channel.speed_of_sound == 343.0);
        CHECK(c.setup.channel.wall_attenuation_db == 30.0);
        CHECK(c.setup.session.grid.candidates_hz.size() == 20);
        CHECK(c.setup.session.signal.random_phase);
        CHECK(c.setup.session.detection.alpha == 0.02);
        CHECK(c.setup.policy.threshold_m == 1.5);
        CHECK(c.setup.session.detector == DetectorKind::CrossCorrelation);
        CHECK(c.attack.kind == AttackKind::AllFrequency);
        CHECK(c.power_sweep.size() == 2);
        CHECK(c.error_model.sigma_m == 0.1);
        CHECK(c.echo.sigma_processing_s == 0.0);
        REQUIRE(c.vouching);
        CHECK(c.vouching->position.x == 1.2);
        CHECK(c.vouching->sample_rate == 48000.0);
    }

    TEST_CASE("malformed or invalid configs are configuration errors") {
        CHECK(code_of("{") == ErrorCode::Config);
        CHECK(code_of("[]") == ErrorCode::Config);
        CHECK(code_of(R"({"enviroment": "office"})") == ErrorCode::Config);
        CHECK(code_of(R"({"channel": {"speed": 340}})") == ErrorCode::Config);
        CHECK(code_of(R"({"channel": {"speed_of_sound": "fast"}})") == ErrorCode::Config);
        CHECK(code_of(R"({"environment": "beach"})") == ErrorCode::Config);
        CHECK(code_of(R"({"detection": {"alpha": -1}})") == ErrorCode::Config);
        CHECK(code_of(R"({"signal": {"length": 1000}})") == ErrorCode::Config);
        CHECK(code_of(R"({"signal": {"bins": 1}})") == ErrorCode::Config);
        CHECK(code_of(R"({"protocol": {"threshold_m": 0}})") == ErrorCode::Config);
        CHECK(code_of(R"({"protocol": {"detector": "magic"}})") == ErrorCode::Config);
        CHECK(code_of(R"({"attack": {"kind": "sonic"}})") == ErrorCode::Config);
        CHECK(code_of(R"({"attack": {"power_sweep": [-1]}})") == ErrorCode::Config);
        CHECK(code_of(R"({"error_model": {"detect_range_m": 50}})") == ErrorCode::Config);
        CHECK(code_of(R"({"devices": {"vouching": {"position": [1]}}})") == ErrorCode::Config);
        CHECK(code_of(R"({"devices": {"vouching": {"position": [1, 0], "sample_rate": 0}}})") == ErrorCode::Config);
        CHECK(code_of(R"({"channel": {"wander_rms_samples": -1}})") == ErrorCode::Config);
    }
}
