#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "mflab/experiments.hpp"
#include "mflab/pde.hpp"
#include "mflab/sampling.hpp"

namespace mflab {

using ordered_json = nlohmann::ordered_json;

// Built-in preset configurations: "smoke" (seconds), "desk" (minutes),
// "paper-direction" (longest sweep). Unknown names raise ConfigError.
ordered_json preset_config(const std::string& name);
const std::vector<std::string>& preset_names();

// Recursive merge: override wins over base on scalar/array keys.
ordered_json merge_config(const ordered_json& base, const ordered_json& override_cfg);

ordered_json parse_json_text(const std::string& text, const std::string& origin);

Box parse_box(const ordered_json& density, int dim);
InitialDensity parse_density(const ordered_json& root);
ExperimentConfig parse_experiment(const ordered_json& root);

struct SampleCommand {
    InitialDensity density;
    double h = 0.1;
};
SampleCommand parse_sample_command(const ordered_json& root);

struct SimulateCommand {
    InitialDensity density;
    double h = 0.1;
    std::string system = "interacting";  // interacting | regularized | self-consistent
    KernelSpec kernel;
    double kappa = 0.75;
    SdeConfig sde;
};
SimulateCommand parse_simulate_command(const ordered_json& root);

struct PdeCommand {
    InitialDensity density;
    PdeConfig pde;
    int frames = 0;  // 0: every step
};
PdeCommand parse_pde_command(const ordered_json& root);

}  // namespace mflab
