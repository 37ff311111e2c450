#include "mflab/config.hpp"

#include <cmath>

#include "mflab/errors.hpp"

namespace mflab {

namespace {

const ordered_json* find(const ordered_json& j, const std::string& key) {
    auto it = j.find(key);
    return it == j.end() || it->is_null() ? nullptr : &*it;
}

double get_number(const ordered_json& j, const std::string& key, std::optional<double> fallback,
                  const std::string& scope) {
    const ordered_json* v = find(j, key);
    if (!v) {
        if (fallback) return *fallback;
        throw ConfigError(scope + "." + key + ": missing");
    }
    if (!v->is_number()) throw ConfigError(scope + "." + key + ": must be a number");
    return v->get<double>();
}

long get_integer(const ordered_json& j, const std::string& key, std::optional<long> fallback,
                 const std::string& scope) {
    const ordered_json* v = find(j, key);
    if (!v) {
        if (fallback) return *fallback;
        throw ConfigError(scope + "." + key + ": missing");
    }
    if (!v->is_number_integer()) throw ConfigError(scope + "." + key + ": must be an integer");
    return v->get<long>();
}

std::string get_string(const ordered_json& j, const std::string& key,
                       std::optional<std::string> fallback, const std::string& scope) {
    const ordered_json* v = find(j, key);
    if (!v) {
        if (fallback) return *fallback;
        throw ConfigError(scope + "." + key + ": missing");
    }
    if (!v->is_string()) throw ConfigError(scope + "." + key + ": must be a string");
    return v->get<std::string>();
}

bool get_bool(const ordered_json& j, const std::string& key, bool fallback,
              const std::string& scope) {
    const ordered_json* v = find(j, key);
    if (!v) return fallback;
    if (!v->is_boolean()) throw ConfigError(scope + "." + key + ": must be a boolean");
    return v->get<bool>();
}

std::vector<double> get_vector(const ordered_json& j, const std::string& key, int expected,
                               const std::string& scope) {
    const ordered_json* v = find(j, key);
    if (!v) throw ConfigError(scope + "." + key + ": missing");
    if (!v->is_array() || (expected > 0 && static_cast<int>(v->size()) != expected))
        throw ConfigError(scope + "." + key + ": must be an array of length " +
                          std::to_string(expected));
    std::vector<double> out;
    for (const auto& e : *v) {
        if (!e.is_number()) throw ConfigError(scope + "." + key + ": entries must be numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

int get_dim(const ordered_json& root) {
    const long dim = get_integer(root, "dim", std::nullopt, "config");
    if (dim < 1 || dim > 3) throw ConfigError("config.dim: must be 1, 2 or 3");
    return static_cast<int>(dim);
}

}  // namespace

ordered_json parse_json_text(const std::string& text, const std::string& origin) {
    try {
        return ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(origin + ": " + e.what());
    }
}

ordered_json merge_config(const ordered_json& base, const ordered_json& override_cfg) {
    if (!base.is_object() || !override_cfg.is_object())
        return override_cfg.is_null() ? base : override_cfg;
    ordered_json out = base;
    for (auto it = override_cfg.begin(); it != override_cfg.end(); ++it) {
        if (out.contains(it.key()))
            out[it.key()] = merge_config(out[it.key()], it.value());
        else
            out[it.key()] = it.value();
    }
    return out;
}

const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names = {"smoke", "desk", "paper-direction"};
    return names;
}

ordered_json preset_config(const std::string& name) {
    if (name == "smoke") {
        return parse_json_text(R"({
            "dim": 1,
            "density": {"id": "bump", "lo": [-1.0], "hi": [1.0]},
            "kernel": {"id": "zero", "kappa": 0.75},
            "h": 0.2,
            "h_list": [0.2, 0.1],
            "realizations": 2,
            "horizon": 0.1,
            "sigma": 1.0,
            "seed": 1,
            "policy": {"sde_steps": 16, "output_frames": 16, "dx_over_eps": 0.25},
            "sde": {"system": "interacting", "horizon": 0.1, "dt": 0.01, "sigma": 1.0, "seed": 1},
            "grid": {"lo": [-4.0], "hi": [4.0], "cells": [128]},
            "pde": {"kernel": "zero", "dt": 0.001, "horizon": 0.1, "nu": 0.5, "frames": 16}
        })", "preset smoke");
    }
    if (name == "desk") {
        return parse_json_text(R"({
            "dim": 1,
            "density": {"id": "bump", "lo": [-1.0], "hi": [1.0]},
            "kernel": {"id": "tanh-gauss", "kappa": 0.75},
            "h": 0.05,
            "h_list": [0.2, 0.1, 0.05, 0.025],
            "realizations": 32,
            "horizon": 0.5,
            "sigma": 1.0,
            "seed": 1,
            "policy": {"sde_steps": 64, "output_frames": 64, "dx_over_eps": 0.125},
            "sde": {"system": "interacting", "horizon": 0.5, "dt": 0.0078125, "sigma": 1.0, "seed": 1},
            "grid": {"lo": [-5.0], "hi": [5.0], "cells": [256]},
            "pde": {"kernel": "zero", "dt": 0.0005, "horizon": 0.5, "nu": 0.5, "frames": 64}
        })", "preset desk");
    }
    if (name == "paper-direction") {
        return parse_json_text(R"({
            "dim": 1,
            "density": {"id": "bump", "lo": [-1.0], "hi": [1.0]},
            "kernel": {"id": "tanh-gauss", "kappa": 0.75},
            "h": 0.0125,
            "h_list": [0.2, 0.1, 0.05, 0.025, 0.0125],
            "realizations": 64,
            "horizon": 1.0,
            "sigma": 1.0,
            "seed": 1,
            "policy": {"sde_steps": 128, "output_frames": 64, "dx_over_eps": 0.125},
            "sde": {"system": "interacting", "horizon": 1.0, "dt": 0.0078125, "sigma": 1.0, "seed": 1},
            "grid": {"lo": [-6.0], "hi": [6.0], "cells": [512]},
            "pde": {"kernel": "zero", "dt": 0.0002, "horizon": 1.0, "nu": 0.5, "frames": 64}
        })", "preset paper-direction");
    }
    std::string valid;
    for (const auto& n : preset_names()) valid += (valid.empty() ? "" : ", ") + n;
    throw ConfigError("unknown preset '" + name + "' (valid: " + valid + ")");
}

Box parse_box(const ordered_json& density, int dim) {
    Box box;
    box.dim = dim;
    const std::vector<double> lo = get_vector(density, "lo", dim, "config.density");
    const std::vector<double> hi = get_vector(density, "hi", dim, "config.density");
    for (int k = 0; k < dim; ++k) {
        box.lo[k] = lo[k];
        box.hi[k] = hi[k];
        if (!(box.lo[k] < box.hi[k]))
            throw ConfigError("config.density: lo must be strictly below hi on every axis");
    }
    return box;
}

InitialDensity parse_density(const ordered_json& root) {
    const int dim = get_dim(root);
    const ordered_json* density = find(root, "density");
    if (!density) throw ConfigError("config.density: missing");
    const std::string id = get_string(*density, "id", std::nullopt, "config.density");
    return make_density(id, parse_box(*density, dim));
}

ExperimentConfig parse_experiment(const ordered_json& root) {
    ExperimentConfig cfg;
    cfg.dim = get_dim(root);
    const ordered_json* density = find(root, "density");
    if (!density) throw ConfigError("config.density: missing");
    cfg.density_id = get_string(*density, "id", std::nullopt, "config.density");
    cfg.support = parse_box(*density, cfg.dim);

    const ordered_json* kernel = find(root, "kernel");
    if (!kernel) throw ConfigError("config.kernel: missing");
    cfg.kernel_id = get_string(*kernel, "id", std::nullopt, "config.kernel");
    cfg.kappa = get_number(*kernel, "kappa", 0.75, "config.kernel");

    cfg.h_list = get_vector(root, "h_list", 0, "config");
    cfg.realizations = static_cast<int>(get_integer(root, "realizations", 8, "config"));
    cfg.horizon = get_number(root, "horizon", std::nullopt, "config");
    cfg.q0 = get_number(root, "q0", 0.0, "config");
    cfg.prob_constant = get_number(root, "prob_constant", 1.0, "config");
    cfg.sigma = get_number(root, "sigma", 1.0, "config");
    cfg.base_seed = static_cast<std::uint64_t>(get_integer(root, "seed", 1, "config"));
    cfg.workers = static_cast<int>(get_integer(root, "workers", 0, "config"));
    cfg.uniform_weights = get_bool(root, "uniform_weights", false, "config");

    if (const ordered_json* policy = find(root, "policy")) {
        cfg.sde_steps = static_cast<int>(get_integer(*policy, "sde_steps", 64, "config.policy"));
        cfg.dx_over_eps = get_number(*policy, "dx_over_eps", 0.125, "config.policy");
        cfg.pad_sigmas = get_number(*policy, "pad_sigmas", 6.0, "config.policy");
        cfg.output_frames =
            static_cast<int>(get_integer(*policy, "output_frames", 64, "config.policy"));
    }
    if (find(root, "separation_j"))
        cfg.separation_j = get_integer(root, "separation_j", std::nullopt, "config");
    cfg.separation_all_j = get_bool(root, "separation_all_j", false, "config");
    cfg.validate();
    // Surface kernel-id problems at parse time.
    (void)KernelSpec::from_id(cfg.kernel_id, cfg.dim);
    return cfg;
}

SampleCommand parse_sample_command(const ordered_json& root) {
    SampleCommand cmd;
    cmd.density = parse_density(root);
    cmd.h = get_number(root, "h", std::nullopt, "config");
    if (cmd.h <= 0.0 || cmd.h >= 1.0) throw ConfigError("config.h: must lie in (0, 1)");
    return cmd;
}

SimulateCommand parse_simulate_command(const ordered_json& root) {
    SimulateCommand cmd;
    cmd.density = parse_density(root);
    cmd.h = get_number(root, "h", std::nullopt, "config");
    if (cmd.h <= 0.0 || cmd.h >= 1.0) throw ConfigError("config.h: must lie in (0, 1)");

    const ordered_json* kernel = find(root, "kernel");
    if (!kernel) throw ConfigError("config.kernel: missing");
    const std::string kernel_id = get_string(*kernel, "id", std::nullopt, "config.kernel");
    cmd.kernel = KernelSpec::from_id(kernel_id, cmd.density.dim);
    cmd.kappa = get_number(*kernel, "kappa", 0.75, "config.kernel");

    const ordered_json* sde = find(root, "sde");
    if (!sde) throw ConfigError("config.sde: missing");
    cmd.system = get_string(*sde, "system", std::string("interacting"), "config.sde");
    if (cmd.system != "interacting" && cmd.system != "regularized" &&
        cmd.system != "self-consistent")
        throw ConfigError(
            "config.sde.system: must be interacting, regularized or self-consistent");
    cmd.sde.horizon = get_number(*sde, "horizon", std::nullopt, "config.sde");
    cmd.sde.dt = get_number(*sde, "dt", std::nullopt, "config.sde");
    cmd.sde.sigma = get_number(*sde, "sigma", 1.0, "config.sde");
    cmd.sde.seed = static_cast<std::uint64_t>(get_integer(*sde, "seed", 0, "config.sde"));
    cmd.sde.uniform_weights = get_bool(root, "uniform_weights", false, "config");
    if (cmd.sde.dt <= 0.0 || cmd.sde.horizon < cmd.sde.dt)
        throw ConfigError("config.sde: need dt > 0 and horizon >= dt");
    return cmd;
}

PdeCommand parse_pde_command(const ordered_json& root) {
    PdeCommand cmd;
    cmd.density = parse_density(root);
    const int dim = cmd.density.dim;

    const ordered_json* grid = find(root, "grid");
    if (!grid) throw ConfigError("config.grid: missing");
    cmd.pde.grid.dim = dim;
    const std::vector<double> lo = get_vector(*grid, "lo", dim, "config.grid");
    const std::vector<double> hi = get_vector(*grid, "hi", dim, "config.grid");
    const ordered_json* cells = find(*grid, "cells");
    if (!cells || !cells->is_array() || static_cast<int>(cells->size()) != dim)
        throw ConfigError("config.grid.cells: must be an array of length " + std::to_string(dim));
    for (int k = 0; k < dim; ++k) {
        cmd.pde.grid.lo[k] = lo[k];
        cmd.pde.grid.hi[k] = hi[k];
        if (!(lo[k] < hi[k])) throw ConfigError("config.grid: lo must be strictly below hi");
        const long n = (*cells)[k].get<long>();
        if (n < 2) throw ConfigError("config.grid.cells: every axis needs at least 2 cells");
        cmd.pde.grid.cells[k] = static_cast<int>(n);
    }

    const ordered_json* pde = find(root, "pde");
    if (!pde) throw ConfigError("config.pde: missing");
    const std::string kernel_id = get_string(*pde, "kernel", std::nullopt, "config.pde");
    cmd.pde.kernel = KernelSpec::from_id(kernel_id, dim);
    cmd.pde.dt = get_number(*pde, "dt", std::nullopt, "config.pde");
    cmd.pde.horizon = get_number(*pde, "horizon", std::nullopt, "config.pde");
    cmd.pde.nu = get_number(*pde, "nu", 0.5, "config.pde");
    if (find(*pde, "delta")) cmd.pde.delta = get_number(*pde, "delta", std::nullopt, "config.pde");
    cmd.pde.principal_value = get_bool(*pde, "principal_value", false, "config.pde");
    cmd.frames = static_cast<int>(get_integer(*pde, "frames", 0, "config.pde"));
    if (cmd.pde.dt <= 0.0 || cmd.pde.horizon <= 0.0)
        throw ConfigError("config.pde: dt and horizon must be positive");
    if (cmd.frames < 0) throw ConfigError("config.pde.frames: must be nonnegative");
    if (cmd.frames > 0) {
        cmd.pde.frame_times.resize(cmd.frames + 1);
        for (int k = 0; k <= cmd.frames; ++k)
            cmd.pde.frame_times[k] = cmd.pde.horizon * k / cmd.frames;
    }
    return cmd;
}

}  // namespace mflab
