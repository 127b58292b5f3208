#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "emq/app/config.hpp"
#include "emq/app/scenarios.hpp"
#include "emq/app/verify.hpp"
#include "emq/errors.hpp"

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  std::optional<std::string> tier;
  bool flip_drift = false;
};

void add_common(CLI::App* sub, Flags& f, bool config_required) {
  auto* c = sub->add_option("--config", f.config, "scenario file (YAML)");
  if (config_required) c->required();
  sub->add_option("--seed", f.seed, "override the scenario seed");
  sub->add_option("--out", f.out, "output directory")->capture_default_str();
  sub->add_option("--tier", f.tier, "verify tier")->check(CLI::IsMember({"fast", "full"}));
}

int run(const std::string& name, const Flags& f) {
  using namespace emq::app;
  const Subcommand cmd = subcommand_from_string(name);
  Scenario s;
  if (!f.config.empty()) {
    s = load_scenario(f.config);
  } else {
    s.kind = ScenarioKind::verify;
  }
  RunOptions opt{f.out, f.seed, f.tier};
  if (cmd == Subcommand::verify && f.flip_drift) {
    // Mutation smoke test; bypasses the scenario runner.
    VerifyOptions vo;
    vo.tier = f.tier.value_or(s.tier);
    vo.flip_drift_sign = true;
    const auto results = verify_suite(vo);
    write_verify_report(std::cout, results, vo);
    for (const auto& r : results) {
      if (!r.passed) return kInvariant;
    }
    return kOk;
  }
  const RunResult r = run_scenario(s, cmd, opt);
  std::cout << r.summary;
  if (r.exit_code != kOk) std::cerr << "emq: invariant check failed, see " << f.out << "/report.txt\n";
  return r.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"emq: emergent-quantum learning dynamics toolkit"};
  app.require_subcommand(1);
  Flags flags;
  for (const char* name : {"simulate", "solve", "thermo", "measure", "compare"}) {
    add_common(app.add_subcommand(name, std::string(name) + " a scenario"), flags, true);
  }
  auto* verify = app.add_subcommand("verify", "run the registered invariant checks");
  add_common(verify, flags, false);
  verify->add_flag("--inject-drift-sign-flip", flags.flip_drift)->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : emq::app::kConfig;
  }
  const std::string name = app.get_subcommands().front()->get_name();
  try {
    return run(name, flags);
  } catch (const emq::app::ConfigError& e) {
    std::cerr << "emq: config error: " << e.what() << '\n';
    return emq::app::kConfig;
  } catch (const emq::NumericalError& e) {
    std::cerr << "emq: numerical failure: " << e.what() << '\n';
    return emq::app::kNumerical;
  } catch (const emq::InvalidArgument& e) {
    std::cerr << "emq: numerical failure (invalid input): " << e.what() << '\n';
    return emq::app::kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "emq: " << e.what() << '\n';
    return emq::app::kNumerical;
  }
}
