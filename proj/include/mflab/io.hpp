#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mflab/dynamics.hpp"
#include "mflab/experiments.hpp"
#include "mflab/fields.hpp"
#include "mflab/pde.hpp"
#include "mflab/sampling.hpp"

namespace mflab {

using ordered_json = nlohmann::ordered_json;

std::string sha256_hex(std::string_view data);

void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);

// Lattice sample: CSV rows (index vector, position, weight) and JSON metadata.
std::string sample_csv(const LatticeSample& sample);
ordered_json sample_json(const LatticeSample& sample);

// Trajectory binary: header u32 d, u64 N, u64 K, f64 dt, u64 seed; then K+1
// frames of N*d little-endian doubles. CSV for small runs.
void write_trajectory_bin(const std::filesystem::path& path, const TrajectoryEnsemble& traj);
TrajectoryEnsemble read_trajectory_bin(const std::filesystem::path& path);
std::string trajectory_csv(const TrajectoryEnsemble& traj);

// Field series binary: header u32 d, u32 comps, u64 frames, then per axis
// u64 cells, f64 lo, f64 hi; then per frame f64 time followed by the values
// (component-major, cells x-fastest).
void write_fields_bin(const std::filesystem::path& path, const std::vector<GridField>& frames);
std::string field_csv(const GridField& field);

std::string mass_ledger_csv(const PdeSolution& sol);

ordered_json experiment_config_json(const ExperimentConfig& cfg);
ordered_json convergence_report_json(const ConvergenceReport& report);
std::string convergence_report_csv(const ConvergenceReport& report);
ordered_json separation_report_json(const SeparationReport& report);
std::string separation_report_csv(const SeparationReport& report);

}  // namespace mflab
