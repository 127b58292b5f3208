#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace emq::app {

struct VerifyOptions {
  std::string tier = "fast";  // fast | full
  /// Mutation smoke test: runs the drift-diffusion checks with F -> -F in the dynamics.
  bool flip_drift_sign = false;
};

struct InvariantResult {
  std::string id;
  std::string module;
  double measured = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

struct InvariantCheck {
  std::string id;
  std::string module;
  std::string description;
  std::function<InvariantResult(const VerifyOptions&)> run;
};

/// Number of module invariants documented for grid, microdynamics, thermo,
/// action, madelung, schrodinger and measurement.
inline constexpr std::size_t kDocumentedInvariants = 25;

const std::vector<InvariantCheck>& invariant_registry();

std::vector<InvariantResult> verify_suite(const VerifyOptions& options);

void write_verify_report(std::ostream& os, const std::vector<InvariantResult>& results, const VerifyOptions& options);

}  // namespace emq::app
