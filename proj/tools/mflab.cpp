// Batch front door: parse one JSON config, dispatch an experiment command,
// write reports and exports under the output directory.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "mflab/config.hpp"
#include "mflab/errors.hpp"
#include "mflab/io.hpp"

namespace fs = std::filesystem;
using namespace mflab;

namespace {

constexpr const char* kVersion = "0.1.0";

std::string timestamp_utc() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

struct RunContext {
    std::string command;
    fs::path out_dir;
    ordered_json resolved;
    ordered_json manifest;
    std::vector<std::string> outputs;

    void begin() {
        fs::create_directories(out_dir);
        manifest["tool"] = "mflab";
        manifest["version"] = kVersion;
        manifest["command"] = command;
        manifest["config"] = resolved;
        manifest["config_hash"] = sha256_hex(resolved.dump());
        manifest["started"] = timestamp_utc();
        manifest["status"] = "running";
        write_text_file(out_dir / "manifest.json", manifest.dump(2) + "\n");
    }

    void emit(const std::string& name, const std::string& content) {
        write_text_file(out_dir / name, content);
        outputs.push_back(name);
    }

    void finish() {
        manifest["finished"] = timestamp_utc();
        manifest["status"] = "done";
        manifest["outputs"] = outputs;
        write_text_file(out_dir / "manifest.json", manifest.dump(2) + "\n");
    }
};

int resolve_workers_option(int cli_workers, const ordered_json& cfg) {
    if (cli_workers > 0) return cli_workers;
    if (const char* env = std::getenv("MFLAB_WORKERS")) {
        const int w = std::atoi(env);
        if (w > 0) return w;
    }
    if (cfg.contains("workers") && cfg["workers"].is_number_integer())
        return cfg["workers"].get<int>();
    return 0;
}

void run_sample(RunContext& ctx) {
    const SampleCommand cmd = parse_sample_command(ctx.resolved);
    const LatticeSample sample = build_lattice_sample(cmd.density, cmd.h);
    ctx.emit("sample.csv", sample_csv(sample));
    ctx.emit("sample.json", sample_json(sample).dump(2) + "\n");
}

void run_simulate(RunContext& ctx) {
    const SimulateCommand cmd = parse_simulate_command(ctx.resolved);
    const LatticeSample sample = build_lattice_sample(cmd.density, cmd.h);

    TrajectoryEnsemble traj;
    if (cmd.system == "interacting") {
        traj = simulate_interacting(sample, cmd.kernel, cmd.sde);
    } else if (cmd.system == "regularized") {
        traj = simulate_regularized(sample, cmd.kernel, delta_for(cmd.h, cmd.kappa), cmd.sde);
    } else {
        // Self-consistent: drive with the mean-field solution of the same
        // kernel, discretized by the sweep policy machinery.
        ExperimentConfig ecfg;
        ecfg.dim = cmd.density.dim;
        ecfg.density_id = cmd.density.id;
        ecfg.support = cmd.density.support;
        ecfg.kernel_id = cmd.kernel.family;
        ecfg.kappa = cmd.kappa;
        ecfg.h_list = {cmd.h};
        ecfg.horizon = cmd.sde.horizon;
        ecfg.sigma = cmd.sde.sigma;
        ecfg.sde_steps = std::max(1, static_cast<int>(std::llround(cmd.sde.horizon / cmd.sde.dt)));
        const SweepPolicy policy = derive_policy(ecfg);
        if (cmd.kernel.family == "zero") {
            traj = simulate_self_consistent(
                sample, [](const Vec&, double) { return zero_vec(); }, cmd.sde);
        } else {
            PdeConfig pcfg;
            pcfg.grid = policy.grid;
            pcfg.horizon = cmd.sde.horizon;
            pcfg.nu = 0.5 * cmd.sde.sigma * cmd.sde.sigma;
            pcfg.kernel = cmd.kernel;
            pcfg.frame_times = policy.frame_times;
            pcfg.dt = std::min(policy.dt, diffusion_dt_bound(policy.grid, pcfg.nu) * 0.999);
            if (cmd.kernel.singular()) pcfg.delta = delta_for(cmd.h, cmd.kappa);
            const PdeSolution sol = solve_pde(cmd.density, pcfg);
            const VelocityProvider provider(sol);
            traj = simulate_self_consistent(sample, provider.fn(), cmd.sde);
        }
    }

    write_trajectory_bin(ctx.out_dir / "trajectory.bin", traj);
    ctx.outputs.push_back("trajectory.bin");
    if (traj.count() * traj.times.size() <= 200000)
        ctx.emit("trajectory.csv", trajectory_csv(traj));

    ordered_json meta;
    meta["system"] = traj.system;
    meta["dim"] = traj.dim;
    meta["particles"] = traj.count();
    meta["steps"] = traj.steps();
    meta["dt"] = traj.dt;
    meta["sigma"] = traj.sigma;
    meta["seed"] = traj.seed;
    ctx.emit("simulate.json", meta.dump(2) + "\n");
}

void run_pde(RunContext& ctx) {
    const PdeCommand cmd = parse_pde_command(ctx.resolved);
    const PdeSolution sol = solve_pde(cmd.density, cmd.pde);
    write_fields_bin(ctx.out_dir / "density.bin", sol.density);
    ctx.outputs.push_back("density.bin");
    write_fields_bin(ctx.out_dir / "velocity.bin", sol.velocity);
    ctx.outputs.push_back("velocity.bin");
    ctx.emit("mass.csv", mass_ledger_csv(sol));
    ctx.emit("density_final.csv", field_csv(sol.density.back()));
    if (cmd.pde.kernel.singular() && cmd.pde.delta) {
        const MollifiedKernel mk(cmd.pde.kernel,
                                 make_mollifier(cmd.pde.grid.dim, *cmd.pde.delta));
        std::ostringstream table;
        mk.write_radial_csv(table);
        ctx.emit("kernel_radial.csv", table.str());
    }

    ordered_json meta;
    meta["frames"] = sol.times.size();
    meta["initial_mass"] = sol.initial_mass;
    meta["mass_drift"] = sol.mass_drift;
    meta["min_density"] = sol.min_density;
    meta["clipped_cells"] = sol.clipped_cells;
    ctx.emit("pde.json", meta.dump(2) + "\n");
}

void run_converge(RunContext& ctx, int workers) {
    ExperimentConfig cfg = parse_experiment(ctx.resolved);
    if (workers > 0) cfg.workers = workers;
    const ConvergenceReport report = run_convergence_sweep(cfg);
    ctx.emit("report.json", convergence_report_json(report).dump(2) + "\n");
    ctx.emit("report.csv", convergence_report_csv(report));
}

void run_separation(RunContext& ctx, int workers) {
    ExperimentConfig cfg = parse_experiment(ctx.resolved);
    if (workers > 0) cfg.workers = workers;
    const SeparationReport report = estimate_separation(cfg);
    ctx.emit("report.json", separation_report_json(report).dump(2) + "\n");
    ctx.emit("report.csv", separation_report_csv(report));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mflab: stochastic interacting-particle / mean-field PDE laboratory"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    std::string config_path, out_dir, preset;
    int workers = 0;
    app.add_option("--config", config_path, "JSON config file");
    app.add_option("--out", out_dir, "output directory")->required();
    app.add_option("--workers", workers, "worker thread count (overrides config)");
    app.add_option("--preset", preset, "preset name: smoke | desk | paper-direction");

    for (const char* name : {"sample", "simulate", "pde", "converge", "separation"})
        app.add_subcommand(name)->fallthrough();

    CLI11_PARSE(app, argc, argv);

    try {
        ordered_json resolved = ordered_json::object();
        if (!preset.empty()) resolved = preset_config(preset);
        if (!config_path.empty()) {
            const ordered_json user =
                parse_json_text(read_text_file(config_path), "config " + config_path);
            resolved = merge_config(resolved, user);
        }
        if (resolved.empty())
            throw ConfigError("no configuration: pass --config FILE and/or --preset NAME");

        RunContext ctx;
        ctx.command = app.get_subcommands().front()->get_name();
        ctx.out_dir = out_dir;
        ctx.resolved = resolved;
        ctx.begin();

        const int w = resolve_workers_option(workers, resolved);
        if (ctx.command == "sample")
            run_sample(ctx);
        else if (ctx.command == "simulate")
            run_simulate(ctx);
        else if (ctx.command == "pde")
            run_pde(ctx);
        else if (ctx.command == "converge")
            run_converge(ctx, w);
        else
            run_separation(ctx, w);

        ctx.finish();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
