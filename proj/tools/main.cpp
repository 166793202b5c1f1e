#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "coagdiff/config.hpp"
#include "coagdiff/duality.hpp"
#include "coagdiff/experiments.hpp"
#include "coagdiff/io.hpp"
#include "coagdiff/simulator.hpp"

namespace fs = std::filesystem;
using namespace coagdiff;

namespace {

enum Exit { kPass = 0, kCheckFailed = 1, kUsage = 2, kAbort = 3 };

struct Invocation {
  std::string command;
  std::string config_path;
  std::string out_dir;
  std::string manifest;
  std::string experiment;
  bool config_required = false;
  std::map<std::string, std::string> flag_values;  // config key -> value
};

void write_outputs(const RunResult& r, const fs::path& dir, const std::string& experiment) {
  fs::create_directories(dir);
  nlohmann::json layout = nlohmann::json::array({"summary.json", "manifest.json"});
  for (const auto& [name, text] : r.files) {
    write_text(dir / name, text);
    layout.push_back(name);
  }
  write_json(dir / "summary.json", r.summary);
  nlohmann::json manifest{{"schema", summary_schema},
                          {"tool_version", tool_version},
                          {"command", r.command},
                          {"config", r.summary.value("config", nlohmann::json::object())},
                          {"outputs", layout}};
  if (!experiment.empty()) manifest["experiment"] = experiment;
  nlohmann::json seeds = nlohmann::json::object();
  for (const auto& [k, v] : manifest["config"].items()) {
    if (k.size() >= 5 && k.compare(k.size() - 5, 5, ".seed") == 0) seeds[k] = v;
  }
  manifest["seeds"] = seeds;
  write_json(dir / "manifest.json", manifest);
}

void print_checks(const RunResult& r) {
  for (const auto& c : r.checks) {
    std::printf("%-4s %-40s %.6g %s %.6g\n", c.pass ? "ok" : "FAIL", c.name.c_str(), c.value, c.relation.c_str(),
                c.threshold);
  }
}

RunResult dispatch(const std::string& command, const std::string& experiment, const Config& cfg) {
  if (command == "simulate") return run_simulate(cfg);
  if (command == "homogeneous") return run_homogeneous(cfg);
  if (command == "gelation-scan") return run_gelation_scan(cfg);
  if (command == "moments") return run_moments(cfg);
  if (command == "weakform-test") return run_weakform_test(cfg);
  if (command == "duality-k") return run_duality_k(cfg);
  if (command == "closeness") return run_closeness(cfg);
  if (command == "dual-solve") return run_dual_solve(cfg);
  if (command == "experiment") return run_experiment(experiment, cfg);
  throw ConfigError("unknown command '" + command + "'");
}

Config config_from_manifest(const fs::path& path, std::string& command, std::string& experiment) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open manifest " + path.string());
  nlohmann::json m;
  try {
    in >> m;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  Config cfg;
  const nlohmann::json entries = m.value("config", nlohmann::json::object());
  for (const auto& [k, v] : entries.items()) {
    cfg.set(k, v.is_string() ? v.get<std::string>() : v.dump());
  }
  if (m.contains("experiment")) {
    command = "experiment";
    experiment = m["experiment"].get<std::string>();
  } else {
    command = m.value("command", std::string());
  }
  return cfg;
}

int execute(const Invocation& inv, const std::vector<std::string>& extras) {
  std::string command = inv.command;
  std::string experiment = inv.experiment;
  Config cfg;
  if (!inv.manifest.empty()) {
    cfg = config_from_manifest(inv.manifest, command, experiment);
  } else if (!inv.config_path.empty()) {
    cfg = Config::load(inv.config_path);
    if (cfg.empty()) throw ConfigError(inv.config_path + ": config is empty");
  } else if (inv.config_required) {
    throw ConfigError(command + " needs --config FILE");
  }
  for (const auto& [key, value] : inv.flag_values) cfg.set(key, value);
  cfg.merge(overrides_from_args(extras));

  const fs::path out = inv.out_dir.empty() ? fs::path("coagdiff-out") / (experiment.empty() ? command : experiment)
                                           : fs::path(inv.out_dir);
  try {
    const RunResult r = dispatch(command, experiment, cfg);
    write_outputs(r, out, experiment);
    if (command == "duality-k" || command == "closeness" || command == "dual-solve") {
      std::cout << r.summary.dump(2) << "\n";
    } else {
      print_checks(r);
    }
    std::printf("%s -> %s\n", r.passed() ? "pass" : "FAIL", out.string().c_str());
    return r.passed() ? kPass : kCheckFailed;
  } catch (const SolverAbort& e) {
    RunResult partial;
    partial.command = command;
    partial.summary["config"] = config_json(cfg);
    partial.summary["aborted"] = true;
    partial.summary["error"] = e.what();
    if (e.partial()) {
      partial.summary["trajectory"] = trajectory_json(*e.partial());
      partial.files.emplace_back("trajectory.csv", trajectory_csv(*e.partial()));
    }
    partial.finalize();
    partial.summary["passed"] = false;
    write_outputs(partial, out, experiment);
    std::fprintf(stderr, "coagdiff: %s (partial output in %s)\n", e.what(), out.string().c_str());
    return kAbort;
  } catch (const ContractionDiverged& e) {
    std::fprintf(stderr, "coagdiff: %s (observed update ratio %.6g)\n", e.what(), e.observed_ratio);
    return kAbort;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"coagulation-diffusion solver and duality toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", tool_version);

  Invocation inv;
  struct Sub {
    const char* name;
    const char* help;
    bool config_required;
  };
  const std::vector<Sub> subs{
      {"simulate", "diffusion-reaction run from a config file", true},
      {"homogeneous", "space-homogeneous run (no diffusion)", true},
      {"gelation-scan", "retained mass over an n-doubling sequence", true},
      {"moments", "moment norms across truncation sizes", true},
      {"weakform-test", "random weak-form and mass-nullity sweep", false},
      {"duality-k", "lower-bound estimate of the duality constant", false},
      {"closeness", "closeness verdict for coefficient bounds", false},
      {"dual-solve", "contraction solve of the non-divergence heat problem", true},
      {"experiment", "built-in experiment E1..E6", false},
  };
  std::map<std::string, CLI::App*> apps;
  // numeric shortcut flags, each mapped onto one config key
  const std::map<std::string, std::vector<std::pair<std::string, std::string>>> shortcuts{
      {"duality-k",
       {{"m", "duality.m"}, {"q", "duality.q"}, {"nx", "duality.nx"}, {"nt", "duality.nt"},
        {"samples", "duality.samples"}, {"seed", "duality.seed"}, {"T", "duality.T"}}},
      {"closeness", {{"a", "closeness.a"}, {"b", "closeness.b"}, {"p", "closeness.p"}, {"samples", "closeness.samples"}}},
  };
  for (const auto& s : subs) {
    auto* sub = app.add_subcommand(s.name, s.help);
    sub->allow_extras();
    sub->add_option("--config", inv.config_path, "sectioned key-value config file");
    sub->add_option("--out", inv.out_dir, "output directory (default coagdiff-out/<command>)");
    if (auto it = shortcuts.find(s.name); it != shortcuts.end()) {
      for (const auto& [flag, key] : it->second) {
        sub->add_option_function<std::string>(
            "--" + flag, [&inv, key = key](const std::string& v) { inv.flag_values[key] = v; },
            "sets " + key);
      }
    }
    if (std::string(s.name) == "experiment") {
      sub->add_option("id", inv.experiment, "E1..E6");
      sub->add_option("--manifest", inv.manifest, "re-run from a manifest.json");
    }
    apps[s.name] = sub;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kUsage;
  }

  for (const auto& s : subs) {
    if (apps[s.name]->parsed()) {
      inv.command = s.name;
      inv.config_required = s.config_required;
    }
  }
  if (inv.command == "experiment" && inv.experiment.empty() && inv.manifest.empty()) {
    std::fprintf(stderr, "coagdiff: experiment needs an id (E1..E6) or --manifest\n");
    return kUsage;
  }
  try {
    return execute(inv, apps[inv.command]->remaining());
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "coagdiff: %s\n", e.what());
    return kUsage;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "coagdiff: invalid configuration: %s\n", e.what());
    return kUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "coagdiff: %s\n", e.what());
    return kAbort;
  }
}
