#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <algorithm>
#include <numbers>
#include <set>
#include <sstream>

#include "doctest.h"
#include "emq/app/config.hpp"
#include "emq/app/manifest.hpp"
#include "emq/app/scenarios.hpp"
#include "emq/app/verify.hpp"

using namespace emq;
using namespace emq::app;
namespace fs = std::filesystem;

namespace {

const fs::path kScenarios = EMQ_SCENARIO_DIR;

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("emq_test_app_" + std::to_string(::getpid())) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

struct CliRun {
  int code;
  std::string output;
};

// Runs the command-line tool with stdout and stderr captured.
CliRun cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string("\"") + EMQ_CLI + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  std::ifstream in(log);
  std::stringstream ss;
  ss << in.rdbuf();
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, ss.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ConfigError parse_error(const std::string& text) {
  try {
    parse_scenario(text);
  } catch (const ConfigError& e) {
    return e;
  }
  FAIL("expected a config error");
  return ConfigError("", 0, "");
}

const char* kLangevin = R"(kind: langevin
seed: 7
grid:
  - {lower: -4, upper: 4, points: 41, boundary: reflecting}
params: {gamma: 1.0, diffusion: 0.25}
free_energy: {preset: quadratic_well}
initial: {preset: point, at: 0.0}
time: {dt: 0.01, steps: 50}
ensemble: {trajectories: 500}
)";

}  // namespace

TEST_CASE("scenario parsing resolves derived quantities") {
  const Scenario s = parse_scenario(kLangevin);
  CHECK(s.kind == ScenarioKind::langevin);
  CHECK(s.seed == 7u);
  CHECK(s.grid.size() == 1);
  CHECK(s.mass() == doctest::Approx(0.5));

  const Scenario q = parse_scenario(R"(kind: schrodinger
grid:
  - {lower: -5, upper: 5, points: 64, boundary: absorbing}
params: {gamma: 0.5, epsilon: 2.0}
hbar: {mode: from-mu, mu: 3.0}
potential: {preset: zero}
initial: {preset: gaussian, width: 1.0}
time: {dt: 0.01, steps: 5}
)");
  CHECK(q.resolved_hbar() == doctest::Approx(3.0 * 2.0 / (2 * std::numbers::pi)));
  CHECK(q.mass() == doctest::Approx(2.0));
}

TEST_CASE("schema violations name the field and line") {
  std::string missing = kLangevin;
  missing.replace(missing.find("gamma: 1.0, "), 12, "");
  const ConfigError a = parse_error(missing);
  CHECK(a.field() == "params.gamma");
  CHECK(a.line() == 5);

  std::string typo = kLangevin;
  typo.replace(typo.find("diffusion"), 9, "difusion");
  const ConfigError b = parse_error(typo);
  CHECK(b.field() == "params.difusion");
  CHECK(std::string(b.what()).find("unknown key") != std::string::npos);

  const ConfigError c = parse_error(std::string(kLangevin) + "extra: 1\n");
  CHECK(c.field() == "extra");
  CHECK(c.line() == 10);

  std::string unseeded = kLangevin;
  unseeded.replace(unseeded.find("seed: 7\n"), 8, "");
  CHECK(parse_error(unseeded).field() == "seed");

  CHECK(parse_error("kind: teleport\n").field() == "kind");
  CHECK(parse_error("kind: [1, 2\n").field() == "<document>");
}

TEST_CASE("hbar has exactly one source") {
  const std::string head = R"(kind: schrodinger
grid:
  - {lower: -5, upper: 5, points: 64, boundary: absorbing}
params: {gamma: 0.5}
potential: {preset: zero}
initial: {preset: gaussian, width: 1.0}
time: {dt: 0.01, steps: 5}
)";
  CHECK(parse_error(head + "hbar: {mode: from-mu, mu: 1.0, value: 2.0}\n").field() == "hbar.value");
  CHECK(parse_error(head + "hbar: {mode: from-mu, mu: 0.0}\n").field() == "hbar.mu");
  CHECK(parse_error(head).field() == "hbar");
}

TEST_CASE("every shipped scenario parses") {
  std::size_t count = 0;
  for (const auto& entry : fs::directory_iterator(kScenarios)) {
    if (entry.path().extension() != ".yaml") continue;
    CAPTURE(entry.path().string());
    CHECK_NOTHROW(load_scenario(entry.path()));
    ++count;
  }
  CHECK(count >= 8);
}

TEST_CASE("manifest lists every artifact with its hash") {
  const fs::path dir = scratch("manifest");
  std::ofstream(dir / "b.txt") << "beta\n";
  std::ofstream(dir / "a.txt") << "abc";
  write_manifest(dir, {"b.txt", "a.txt"});
  const std::string m = slurp(dir / "manifest.txt");
  // SHA-256 of "abc"
  CHECK(m.find("ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad  a.txt") == 0);
  CHECK(m.find("  b.txt\n") != std::string::npos);
}

TEST_CASE("verify registry covers every documented invariant") {
  const auto& reg = invariant_registry();
  CHECK(reg.size() == kDocumentedInvariants);
  std::set<std::string> ids;
  for (const auto& c : reg) ids.insert(c.id);
  CHECK(ids.size() == reg.size());
  for (const char* module : {"grid", "microdynamics", "thermo", "action", "madelung", "schrodinger", "measurement"}) {
    const auto n = std::count_if(reg.begin(), reg.end(), [&](const InvariantCheck& c) { return c.module == module; });
    CHECK(n >= 3);
  }
}

TEST_CASE("cli: missing field exits 2 and names it") {
  const fs::path dir = scratch("missing");
  std::string text = kLangevin;
  text.replace(text.find("gamma: 1.0, "), 12, "");
  std::ofstream(dir / "bad.yaml") << text;
  const CliRun r = cli("simulate --config " + (dir / "bad.yaml").string() + " --out " + (dir / "out").string(), dir / "log");
  CHECK(r.code == 2);
  CHECK(r.output.find("params.gamma") != std::string::npos);
  CHECK(r.output.find("line 5") != std::string::npos);
}

TEST_CASE("cli: bad flags are config errors") {
  const fs::path dir = scratch("flags");
  CHECK(cli("simulate", dir / "log").code == 2);
  CHECK(cli("verify --tier medium", dir / "log").code == 2);
  CHECK(cli("simulate --config " + (dir / "nope.yaml").string(), dir / "log").code == 2);
  // subcommand and scenario kind must match
  CHECK(cli("thermo --config " + (kScenarios / "langevin_equilibrium.yaml").string() + " --out " + (dir / "o").string(),
            dir / "log")
            .code == 2);
}

TEST_CASE("cli: identical config and seed give byte-identical outputs") {
  const fs::path dir = scratch("determinism");
  std::ofstream(dir / "run.yaml") << kLangevin;
  const std::string cfg = " --config " + (dir / "run.yaml").string();
  REQUIRE(cli("simulate" + cfg + " --out " + (dir / "a").string(), dir / "log").code == 0);
  REQUIRE(cli("simulate" + cfg + " --out " + (dir / "b").string(), dir / "log").code == 0);
  REQUIRE(cli("simulate" + cfg + " --seed 8 --out " + (dir / "c").string(), dir / "log").code == 0);
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(dir / "a")) {
    CAPTURE(e.path().filename().string());
    CHECK(slurp(e.path()) == slurp(dir / "b" / e.path().filename()));
    ++files;
  }
  CHECK(files >= 3);
  CHECK(slurp(dir / "a" / "manifest.txt") == slurp(dir / "b" / "manifest.txt"));
  CHECK(slurp(dir / "a" / "trajectories.txt") != slurp(dir / "c" / "trajectories.txt"));
  CHECK(slurp(dir / "c" / "report.txt").find("seed = 8") != std::string::npos);
}

TEST_CASE("cli: report echoes derived parameters") {
  const fs::path dir = scratch("echo");
  REQUIRE(cli("compare --config " + (kScenarios / "compare_free_gaussian.yaml").string() + " --out " + dir.string(),
              dir / "log")
              .code == 0);
  const std::string report = slurp(dir / "report.txt");
  for (const char* key : {"mass = ", "hbar = ", "lambda = ", "gamma = ", "epsilon = "}) {
    CAPTURE(key);
    CHECK(report.find(key) != std::string::npos);
  }
}

TEST_CASE("cli: compare scenario stays within the cross-solver bound") {
  const fs::path dir = scratch("compare");
  REQUIRE(cli("compare --config " + (kScenarios / "compare_free_gaussian.yaml").string() + " --out " + dir.string(),
              dir / "log")
              .code == 0);
  std::ifstream in(dir / "l2_series.txt");
  std::string line;
  double t = 0.0, last = 1.0;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream(line) >> t >> last;
    ++rows;
  }
  CHECK(rows >= 5);
  CHECK(last <= 1e-3);
  const std::string manifest = slurp(dir / "manifest.txt");
  CHECK(manifest.find("l2_series.txt") != std::string::npos);
  CHECK(manifest.find(sha256_file(dir / "l2_series.txt")) != std::string::npos);
}

TEST_CASE("cli: fast verify tier passes") {
  const fs::path dir = scratch("verify");
  const CliRun r = cli("verify --tier fast --out " + dir.string(), dir / "log");
  CHECK(r.code == 0);
  const std::string report = slurp(dir / "verify_report.txt");
  CHECK(report.find("FAIL") == std::string::npos);
  CHECK(report.find("registered 25 of 25") != std::string::npos);
}

TEST_CASE("cli: drift sign flip is caught by the stationary-density check") {
  const fs::path dir = scratch("mutation");
  const CliRun r = cli("verify --inject-drift-sign-flip", dir / "log");
  CHECK(r.code == 3);
  CHECK(r.output.find("FAIL microdynamics.fokker_planck_stationarity") != std::string::npos);
  CHECK(r.output.find("# failed check: microdynamics.fokker_planck_stationarity") != std::string::npos);
}

TEST_CASE("scratch cleanup") { fs::remove_all(fs::temp_directory_path() / ("emq_test_app_" + std::to_string(::getpid()))); }
