#include "emq/app/config.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace emq::app {

ConfigError::ConfigError(std::string field, int line, const std::string& message)
    : std::runtime_error(message + " [field '" + field + "'" + (line > 0 ? ", line " + std::to_string(line) : "") + "]"),
      field_(std::move(field)),
      line_(line) {}

std::string to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::langevin: return "langevin";
    case ScenarioKind::fokker_planck: return "fokker-planck";
    case ScenarioKind::madelung: return "madelung";
    case ScenarioKind::schrodinger: return "schrodinger";
    case ScenarioKind::thermo_pool: return "thermo-pool";
    case ScenarioKind::measurement: return "measurement";
    case ScenarioKind::compare: return "compare";
    case ScenarioKind::verify: return "verify";
  }
  return "unknown";
}

double PresetSpec::scalar(const std::string& key, double fallback) const {
  const auto it = values.find(key);
  if (it == values.end()) return fallback;
  if (it->second.size() != 1) throw ConfigError(name + "." + key, 0, "expected a scalar");
  return it->second.front();
}

Point3 PresetSpec::point(const std::string& key, std::size_t dims, double fallback) const {
  Point3 p{fallback, fallback, fallback};
  const auto it = values.find(key);
  if (it == values.end()) return p;
  if (it->second.size() == 1) {
    for (std::size_t k = 0; k < dims; ++k) p[k] = it->second.front();
  } else if (it->second.size() == dims) {
    for (std::size_t k = 0; k < dims; ++k) p[k] = it->second[k];
  } else {
    throw ConfigError(name + "." + key, 0, "expected a scalar or one value per grid axis");
  }
  return p;
}

double Scenario::resolved_hbar() const {
  if (!hbar) throw ConfigError("hbar", 0, "no source of hbar configured");
  switch (hbar->mode) {
    case HbarMode::explicit_value: return hbar->value;
    case HbarMode::from_mu: return hbar->value * epsilon / (2.0 * std::numbers::pi);
    case HbarMode::from_lambda: return epsilon * std::sqrt(4.0 * diffusion / (gamma * hbar->value));
  }
  return 0.0;
}

namespace {

int line_of(const YAML::Node& n) { return n.Mark().line >= 0 ? n.Mark().line + 1 : 0; }

std::string join(const std::string& a, const std::string& b) { return a.empty() ? b : a + "." + b; }

void check_keys(const YAML::Node& map, const std::string& path, const std::set<std::string>& allowed) {
  if (!map.IsMap()) throw ConfigError(path, line_of(map), "expected a mapping");
  for (const auto& kv : map) {
    const std::string key = kv.first.as<std::string>();
    if (!allowed.count(key)) throw ConfigError(join(path, key), line_of(kv.first), "unknown key");
  }
}

template <class T>
T read(const YAML::Node& n, const std::string& path) {
  try {
    return n.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(path, line_of(n), "value has the wrong type");
  }
}

double read_number(const YAML::Node& parent, const std::string& key, const std::string& path) {
  const YAML::Node n = parent[key];
  if (!n) throw ConfigError(join(path, key), line_of(parent), "required field is missing");
  const double v = read<double>(n, join(path, key));
  if (!std::isfinite(v)) throw ConfigError(join(path, key), line_of(n), "value must be finite");
  return v;
}

double optional_number(const YAML::Node& parent, const std::string& key, const std::string& path, double fallback) {
  return parent[key] ? read_number(parent, key, path) : fallback;
}

std::size_t read_count(const YAML::Node& parent, const std::string& key, const std::string& path, bool required,
                       std::size_t fallback = 0) {
  const YAML::Node n = parent[key];
  if (!n) {
    if (required) throw ConfigError(join(path, key), line_of(parent), "required field is missing");
    return fallback;
  }
  const long long v = read<long long>(n, join(path, key));
  if (v < 0) throw ConfigError(join(path, key), line_of(n), "value must be non-negative");
  return static_cast<std::size_t>(v);
}

void require_positive(double v, const std::string& field, const YAML::Node& at) {
  if (!(v > 0.0)) throw ConfigError(field, line_of(at), "value must be positive");
}

const std::map<std::string, std::map<std::string, std::set<std::string>>>& preset_schema() {
  static const std::map<std::string, std::map<std::string, std::set<std::string>>> schema = {
      {"free_energy",
       {{"constant", {"value"}},
        {"quadratic_well", {"stiffness", "center"}},
        {"inverted_quadratic", {"stiffness", "center"}},
        {"double_well", {"depth", "half_separation"}}}},
      {"potential", {{"zero", {}}, {"harmonic", {"omega", "center"}}, {"linear", {"slope"}}}},
      {"initial",
       {{"point", {"at"}},
        {"uniform", {}},
        {"gaussian", {"center", "width", "momentum"}},
        {"ground_state", {}},
        {"vortex", {"center", "winding", "core", "envelope"}}}},
  };
  return schema;
}

PresetSpec read_preset(const YAML::Node& n, const std::string& path) {
  if (!n.IsMap()) throw ConfigError(path, line_of(n), "expected a mapping");
  if (!n["preset"]) throw ConfigError(path + ".preset", line_of(n), "required field is missing");
  PresetSpec spec;
  spec.name = read<std::string>(n["preset"], path + ".preset");
  const auto& presets = preset_schema().at(path);
  const auto it = presets.find(spec.name);
  if (it == presets.end()) throw ConfigError(path + ".preset", line_of(n["preset"]), "unknown preset '" + spec.name + "'");
  std::set<std::string> allowed = it->second;
  allowed.insert("preset");
  check_keys(n, path, allowed);
  for (const auto& kv : n) {
    const std::string key = kv.first.as<std::string>();
    if (key == "preset") continue;
    const std::string field = path + "." + key;
    std::vector<double> values;
    if (kv.second.IsSequence()) {
      for (const auto& x : kv.second) values.push_back(read<double>(x, field));
    } else {
      values.push_back(read<double>(kv.second, field));
    }
    for (double v : values) {
      if (!std::isfinite(v)) throw ConfigError(field, line_of(kv.second), "value must be finite");
    }
    spec.values[key] = std::move(values);
  }
  return spec;
}

std::vector<AxisSpec> read_grid(const YAML::Node& n) {
  if (!n.IsSequence() || n.size() == 0) throw ConfigError("grid", line_of(n), "expected a non-empty list of axes");
  std::vector<AxisSpec> axes;
  for (std::size_t k = 0; k < n.size(); ++k) {
    const std::string path = "grid[" + std::to_string(k) + "]";
    const YAML::Node a = n[k];
    check_keys(a, path, {"lower", "upper", "points", "boundary"});
    AxisSpec spec;
    spec.lower = read_number(a, "lower", path);
    spec.upper = read_number(a, "upper", path);
    spec.points = read_count(a, "points", path, true);
    if (!a["boundary"]) throw ConfigError(path + ".boundary", line_of(a), "required field is missing");
    try {
      spec.boundary = boundary_from_string(read<std::string>(a["boundary"], path + ".boundary"));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(path + ".boundary", line_of(a["boundary"]), e.what());
    }
    axes.push_back(spec);
  }
  try {
    Grid check(axes);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("grid", line_of(n), e.what());
  }
  return axes;
}

ScenarioKind kind_from(const YAML::Node& n) {
  static const std::map<std::string, ScenarioKind> kinds = {
      {"langevin", ScenarioKind::langevin},       {"fokker-planck", ScenarioKind::fokker_planck},
      {"madelung", ScenarioKind::madelung},       {"schrodinger", ScenarioKind::schrodinger},
      {"thermo-pool", ScenarioKind::thermo_pool}, {"measurement", ScenarioKind::measurement},
      {"compare", ScenarioKind::compare},         {"verify", ScenarioKind::verify}};
  const std::string name = read<std::string>(n, "kind");
  const auto it = kinds.find(name);
  if (it == kinds.end()) throw ConfigError("kind", line_of(n), "unknown scenario kind '" + name + "'");
  return it->second;
}

void require(const YAML::Node& root, const std::string& key, const char* why) {
  if (!root[key]) throw ConfigError(key, 0, std::string("required field is missing (") + why + ")");
}

void require_initial(const Scenario& s, const YAML::Node& root, std::set<std::string> allowed) {
  if (!allowed.count(s.initial->name)) {
    throw ConfigError("initial.preset", line_of(root["initial"]),
                      "preset '" + s.initial->name + "' is not valid for kind " + to_string(s.kind));
  }
}

}  // namespace

Scenario parse_scenario(const std::string& yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError("<document>", e.mark.line + 1, std::string("malformed YAML: ") + e.msg);
  }
  if (!root || !root.IsMap()) throw ConfigError("<document>", 1, "scenario must be a mapping");
  check_keys(root, "", {"kind", "seed", "grid", "params", "hbar", "free_energy", "potential", "initial", "time",
                        "ensemble", "scheme", "pool", "measurement", "solve", "verify"});
  if (!root["kind"]) throw ConfigError("kind", 1, "required field is missing");

  Scenario s;
  s.kind = kind_from(root["kind"]);
  if (root["seed"]) {
    const long long seed = read<long long>(root["seed"], "seed");
    if (seed < 0) throw ConfigError("seed", line_of(root["seed"]), "seed must be non-negative");
    s.seed = static_cast<std::uint64_t>(seed);
  }
  if (root["grid"]) s.grid = read_grid(root["grid"]);
  if (root["params"]) {
    const YAML::Node p = root["params"];
    check_keys(p, "params", {"gamma", "diffusion", "epsilon"});
    if (p["gamma"]) {
      s.gamma = read_number(p, "gamma", "params");
      require_positive(s.gamma, "params.gamma", p["gamma"]);
    }
    s.diffusion = optional_number(p, "diffusion", "params", 0.0);
    if (s.diffusion < 0.0) throw ConfigError("params.diffusion", line_of(p["diffusion"]), "value must be non-negative");
    s.epsilon = optional_number(p, "epsilon", "params", 1.0);
    require_positive(s.epsilon, "params.epsilon", p);
  }
  if (root["hbar"]) {
    const YAML::Node h = root["hbar"];
    check_keys(h, "hbar", {"mode", "value", "mu", "lambda"});
    const std::string mode = h["mode"] ? read<std::string>(h["mode"], "hbar.mode") : "explicit";
    HbarSpec spec;
    const char* source = nullptr;
    if (mode == "explicit") {
      spec.mode = HbarMode::explicit_value;
      source = "value";
    } else if (mode == "from-mu") {
      spec.mode = HbarMode::from_mu;
      source = "mu";
    } else if (mode == "from-lambda") {
      spec.mode = HbarMode::from_lambda;
      source = "lambda";
    } else {
      throw ConfigError("hbar.mode", line_of(h["mode"]), "mode must be explicit, from-mu or from-lambda");
    }
    for (const char* key : {"value", "mu", "lambda"}) {
      if (h[key] && std::string(key) != source) {
        throw ConfigError(std::string("hbar.") + key, line_of(h[key]), "conflicts with hbar.mode " + mode);
      }
    }
    spec.value = read_number(h, source, "hbar");
    if (spec.mode == HbarMode::from_mu && !(spec.value > 0.0)) {
      throw ConfigError("hbar.mu", line_of(h["mu"]),
                        "no multivalued structure: chemical potential must be positive");
    }
    require_positive(spec.value, std::string("hbar.") + source, h[source]);
    s.hbar = spec;
  }
  if (root["free_energy"]) s.free_energy = read_preset(root["free_energy"], "free_energy");
  if (root["potential"]) s.potential = read_preset(root["potential"], "potential");
  if (root["initial"]) s.initial = read_preset(root["initial"], "initial");
  if (root["time"]) {
    const YAML::Node t = root["time"];
    check_keys(t, "time", {"dt", "steps", "record_every"});
    TimeSpec spec;
    spec.dt = read_number(t, "dt", "time");
    require_positive(spec.dt, "time.dt", t["dt"]);
    spec.steps = read_count(t, "steps", "time", true);
    spec.record_every = read_count(t, "record_every", "time", false, 0);
    s.time = spec;
  }
  if (root["ensemble"]) {
    const YAML::Node e = root["ensemble"];
    check_keys(e, "ensemble", {"trajectories", "bandwidth"});
    s.trajectories = read_count(e, "trajectories", "ensemble", true);
    if (s.trajectories == 0) throw ConfigError("ensemble.trajectories", line_of(e), "value must be positive");
    s.bandwidth = optional_number(e, "bandwidth", "ensemble", 0.0);
  }
  if (root["scheme"]) {
    s.scheme = read<std::string>(root["scheme"], "scheme");
    static const std::set<std::string> schemes = {"auto", "explicit", "implicit", "crank-nicolson", "split-step"};
    if (!schemes.count(s.scheme)) throw ConfigError("scheme", line_of(root["scheme"]), "unknown scheme");
  }
  if (root["pool"]) {
    const YAML::Node p = root["pool"];
    check_keys(p, "pool", {"size", "activation", "temperature", "mu", "sweeps", "burn_in"});
    PoolSpec spec;
    spec.size = read_count(p, "size", "pool", true);
    spec.activation = optional_number(p, "activation", "pool", 0.0);
    spec.temperature = read_number(p, "temperature", "pool");
    require_positive(spec.temperature, "pool.temperature", p["temperature"]);
    spec.mu = read_number(p, "mu", "pool");
    spec.sweeps = read_count(p, "sweeps", "pool", true);
    spec.burn_in = read_count(p, "burn_in", "pool", false, 0);
    if (spec.size == 0 || spec.sweeps == 0) throw ConfigError("pool", line_of(p), "size and sweeps must be positive");
    s.pool = spec;
  }
  if (root["measurement"]) {
    const YAML::Node m = root["measurement"];
    check_keys(m, "measurement",
               {"dimension", "operators", "pre_time", "main_time", "post_time", "draws", "grid_hamiltonian"});
    MeasurementSpec spec;
    spec.grid_hamiltonian = m["grid_hamiltonian"] ? read<bool>(m["grid_hamiltonian"], "measurement.grid_hamiltonian")
                                                  : false;
    spec.dimension = read_count(m, "dimension", "measurement", !spec.grid_hamiltonian);
    spec.operators = read_count(m, "operators", "measurement", true);
    spec.pre_time = optional_number(m, "pre_time", "measurement", 0.0);
    spec.main_time = optional_number(m, "main_time", "measurement", 0.0);
    spec.post_time = optional_number(m, "post_time", "measurement", 0.0);
    spec.draws = read_count(m, "draws", "measurement", true);
    if (spec.operators == 0) throw ConfigError("measurement.operators", line_of(m), "value must be positive");
    s.measurement = spec;
  }
  if (root["solve"]) {
    const YAML::Node v = root["solve"];
    check_keys(v, "solve", {"states", "method"});
    SolveSpec spec;
    spec.states = read_count(v, "states", "solve", true);
    if (v["method"]) spec.method = read<std::string>(v["method"], "solve.method");
    if (spec.method != "auto" && spec.method != "tridiagonal" && spec.method != "imaginary-time") {
      throw ConfigError("solve.method", line_of(v["method"]), "method must be auto, tridiagonal or imaginary-time");
    }
    s.solve = spec;
  }
  if (root["verify"]) {
    const YAML::Node v = root["verify"];
    check_keys(v, "verify", {"tier"});
    if (v["tier"]) s.tier = read<std::string>(v["tier"], "verify.tier");
    if (s.tier != "fast" && s.tier != "full") throw ConfigError("verify.tier", line_of(v["tier"]), "tier must be fast or full");
  }

  // Per-kind requirements.
  auto needs_gamma = [&] {
    if (!(s.gamma > 0.0)) throw ConfigError("params.gamma", line_of(root["params"] ? root["params"] : root),
                                            "required field is missing");
  };
  switch (s.kind) {
    case ScenarioKind::langevin:
    case ScenarioKind::fokker_planck:
      require(root, "grid", "drift-diffusion scenarios run on a grid");
      needs_gamma();
      if (!root["params"]["diffusion"]) throw ConfigError("params.diffusion", line_of(root["params"]), "required field is missing");
      require(root, "free_energy", "drift needs a free energy");
      require(root, "initial", "initial condition");
      require(root, "time", "time stepping");
      if (s.kind == ScenarioKind::langevin) {
        require(root, "seed", "stochastic scenario");
        require(root, "ensemble", "trajectory count");
        require_initial(s, root, {"point", "uniform"});
      } else {
        require_initial(s, root, {"gaussian", "uniform"});
      }
      break;
    case ScenarioKind::madelung:
    case ScenarioKind::schrodinger:
    case ScenarioKind::compare:
      require(root, "grid", "field solvers run on a grid");
      needs_gamma();
      require(root, "hbar", "quantum scenarios need one source of hbar");
      require(root, "potential", "potential preset");
      if (!(s.kind == ScenarioKind::schrodinger && s.solve)) {
        require(root, "initial", "initial condition");
        require(root, "time", "time stepping");
        require_initial(s, root,
                        s.kind == ScenarioKind::compare ? std::set<std::string>{"gaussian", "ground_state"}
                                                        : std::set<std::string>{"gaussian", "ground_state", "vortex"});
      }
      if (s.hbar->mode == HbarMode::from_lambda && !(s.diffusion > 0.0)) {
        throw ConfigError("params.diffusion", line_of(root["params"]), "hbar from lambda needs a positive diffusion");
      }
      break;
    case ScenarioKind::thermo_pool:
      require(root, "pool", "pool parameters");
      require(root, "seed", "stochastic scenario");
      break;
    case ScenarioKind::measurement:
      require(root, "measurement", "measurement parameters");
      require(root, "seed", "stochastic scenario");
      require(root, "hbar", "unitaries need one source of hbar");
      if (s.measurement->grid_hamiltonian) {
        require(root, "grid", "grid Hamiltonian");
        needs_gamma();
        require(root, "potential", "grid Hamiltonian");
      }
      break;
    case ScenarioKind::verify:
      break;
  }
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", 0, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

}  // namespace emq::app
