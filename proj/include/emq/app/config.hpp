#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "emq/grid.hpp"

namespace emq::app {

/// Schema violation in a scenario file. `line` is 1-based, 0 when unknown.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, int line, const std::string& message);
  const std::string& field() const { return field_; }
  int line() const { return line_; }

 private:
  std::string field_;
  int line_;
};

enum class ScenarioKind { langevin, fokker_planck, madelung, schrodinger, thermo_pool, measurement, compare, verify };

std::string to_string(ScenarioKind kind);

/// Preset name plus numeric parameters (scalars are stored as length-1 lists).
struct PresetSpec {
  std::string name;
  std::map<std::string, std::vector<double>> values;

  double scalar(const std::string& key, double fallback) const;
  /// Vector of length `dims`; a scalar is broadcast, a missing key gives `fallback`.
  Point3 point(const std::string& key, std::size_t dims, double fallback = 0.0) const;
};

enum class HbarMode { explicit_value, from_mu, from_lambda };

struct HbarSpec {
  HbarMode mode = HbarMode::explicit_value;
  double value = 0.0;  // hbar, mu or lambda depending on the mode
};

struct TimeSpec {
  double dt = 0.0;
  std::size_t steps = 0;
  std::size_t record_every = 0;  // 0: only the initial and final frames
};

struct PoolSpec {
  std::size_t size = 0;
  double activation = 0.0;
  double temperature = 1.0;
  double mu = 0.0;
  std::size_t sweeps = 0;
  std::size_t burn_in = 0;
};

struct MeasurementSpec {
  std::size_t dimension = 0;
  std::size_t operators = 0;
  double pre_time = 0.0;
  double main_time = 0.0;
  double post_time = 0.0;
  std::size_t draws = 0;
  /// Main Hamiltonian from the grid discretization instead of a random matrix.
  bool grid_hamiltonian = false;
};

struct SolveSpec {
  std::size_t states = 0;
  std::string method = "auto";
};

struct Scenario {
  ScenarioKind kind = ScenarioKind::verify;
  std::optional<std::uint64_t> seed;
  std::vector<AxisSpec> grid;
  double gamma = 0.0;
  double diffusion = 0.0;
  double epsilon = 1.0;
  std::optional<HbarSpec> hbar;
  std::optional<PresetSpec> free_energy;
  std::optional<PresetSpec> potential;
  std::optional<PresetSpec> initial;
  std::optional<TimeSpec> time;
  std::size_t trajectories = 0;
  double bandwidth = 0.0;
  std::string scheme = "auto";
  std::optional<PoolSpec> pool;
  std::optional<MeasurementSpec> measurement;
  std::optional<SolveSpec> solve;
  std::string tier = "fast";

  double mass() const { return epsilon / (2.0 * gamma); }
  /// Resolved hbar; throws ConfigError when no source is configured.
  double resolved_hbar() const;
};

Scenario parse_scenario(const std::string& yaml_text);
Scenario load_scenario(const std::filesystem::path& path);

}  // namespace emq::app
