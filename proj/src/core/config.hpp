#pragma once

// JSON configuration shared by the C API and the CLI. Unknown keys are
// rejected so that typos surface as configuration errors.

#include "core/adversary.hpp"
#include "core/eval.hpp"

#include <optional>
#include <string_view>
#include <vector>

namespace piano {

struct SimulatorConfig {
    SimulationSetup setup;
    ErrorModel error_model;
    EchoConfig echo;
    AttackScenario attack;
    std::vector<double> power_sweep;  // empty: default sweep
    std::optional<DeviceConfig> authenticating;
    std::optional<DeviceConfig> vouching;
};

// Throws Error(ErrorCode::Config) on malformed JSON, unknown keys, wrong types
// or values that fail validation.
SimulatorConfig parse_config(std::string_view json);

}  // namespace piano
