#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "emq/app/config.hpp"
#include "emq/microdynamics.hpp"
#include "emq/schrodinger.hpp"

namespace emq::app {

enum class Subcommand { simulate, solve, thermo, measure, compare, verify };

Subcommand subcommand_from_string(const std::string& name);

struct RunOptions {
  std::filesystem::path out_dir = ".";
  std::optional<std::uint64_t> seed_override;
  /// Verify tier override from the command line.
  std::optional<std::string> tier;
};

enum ExitCode : int { kOk = 0, kNumerical = 1, kConfig = 2, kInvariant = 3 };

struct RunResult {
  int exit_code = kOk;
  std::vector<std::string> artifacts;  // file names inside out_dir, manifest excluded
  std::string summary;
};

/// Runs the scenario for the subcommand, writes artifacts plus manifest.txt
/// into options.out_dir. ConfigError for kind/subcommand mismatches;
/// NumericalError and InvalidArgument propagate from the modules.
RunResult run_scenario(const Scenario& scenario, Subcommand command, const RunOptions& options);

FreeEnergyModel make_free_energy(const PresetSpec& preset, std::size_t dims);
ScalarField make_potential(const PresetSpec& preset, const Grid& grid, double mass);
WaveFunction make_initial_wave(const PresetSpec& preset, const Grid& grid, const ScalarField& V, double mass,
                               double hbar);

}  // namespace emq::app
