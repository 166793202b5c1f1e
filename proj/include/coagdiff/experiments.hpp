#pragma once

#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "coagdiff/config.hpp"
#include "coagdiff/duality.hpp"

namespace coagdiff {

struct Check {
  std::string name;
  double value;
  std::string relation;  // "<=", ">=", "<", ">"
  double threshold;
  bool pass;
};

Check make_check(std::string name, double value, const std::string& relation, double threshold);

struct RunResult {
  std::string command;
  nlohmann::json summary;  // always carries "schema", "command" and "checks"
  std::vector<Check> checks;
  std::vector<std::pair<std::string, std::string>> files;  // relative name, contents

  bool passed() const;
  /// Copies the checks into summary["checks"] and sets "passed".
  void finalize();
};

/// Full diffusion-reaction run from the simulator sections.
RunResult run_simulate(const Config& cfg);
/// Same with N = 1 (no diffusion).
RunResult run_homogeneous(const Config& cfg);
/// Homogeneous runs over [scan] ns; retained mass sum_{i<=n/2} i c_i at T.
RunResult run_gelation_scan(const Config& cfg);
/// ||rho_k||_{L^p} over [moments] ns plus the small-species sup cascade.
RunResult run_moments(const Config& cfg);
/// Weak-form and mass-nullity sweep over all kernel families.
RunResult run_weakform_test(const Config& cfg);
/// K estimate from [duality] m, q, nx, nt, T, samples, seed.
RunResult run_duality_k(const Config& cfg);
/// Closeness verdict from [closeness] a, b, p.
RunResult run_closeness(const Config& cfg);
/// Contraction solve from [dual].
RunResult run_dual_solve(const Config& cfg);

/// Built-in defaults for E1..E6; throws ConfigError for unknown ids.
Config experiment_defaults(const std::string& id);
/// Runs experiment `id` with `overrides` applied on top of its defaults.
RunResult run_experiment(const std::string& id, const Config& overrides);

}  // namespace coagdiff
