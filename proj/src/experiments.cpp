#include "coagdiff/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <limits>
#include <random>

#include "coagdiff/coagulation.hpp"
#include "coagdiff/io.hpp"
#include "coagdiff/simulator.hpp"

namespace coagdiff {

Check make_check(std::string name, double value, const std::string& relation, double threshold) {
  bool pass = false;
  if (relation == "<=") pass = value <= threshold;
  else if (relation == ">=") pass = value >= threshold;
  else if (relation == "<") pass = value < threshold;
  else if (relation == ">") pass = value > threshold;
  else throw std::invalid_argument("make_check: unknown relation " + relation);
  return {std::move(name), value, relation, threshold, pass};
}

bool RunResult::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

void RunResult::finalize() {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& c : checks) {
    arr.push_back({{"name", c.name}, {"value", c.value}, {"relation", c.relation},
                   {"threshold", c.threshold}, {"pass", c.pass}});
  }
  summary["schema"] = summary_schema;
  summary["command"] = command;
  summary["checks"] = arr;
  summary["passed"] = passed();
}

namespace {

RunResult start(const std::string& command, const Config& cfg) {
  RunResult r;
  r.command = command;
  r.summary["config"] = config_json(cfg);
  return r;
}

std::string order_tag(double k) { return format_number(k); }

void add_trajectory_files(const TrajectoryRecord& rec, RunResult& r, const std::string& prefix) {
  r.files.emplace_back(prefix + "trajectory.csv", trajectory_csv(rec));
  if (rec.cells > 1) {
    for (const auto& [k, frames] : rec.moment_frames) {
      r.files.emplace_back(prefix + "rho_" + order_tag(k) + ".csv", frames_csv(rec.moment_series(k)));
    }
  }
}

double retained_mass(const TrajectoryRecord& rec) { return rec.mass.back() - rec.tail_mass.back(); }

SimConfig homogeneous(SimConfig sc) {
  sc.cells = 1;
  return sc;
}

}  // namespace

RunResult run_simulate(const Config& in) {
  Config cfg = in;
  const SimConfig sc = sim_config_from(cfg);
  const double tol = cfg.get_double("checks.mass_drift_tol", 1e-8);
  cfg.require_all_used();
  RunResult r = start("simulate", cfg);
  const auto rec = run(sc);
  r.summary["trajectory"] = trajectory_json(rec);
  r.summary["mass_drift_rel"] = rec.mass_drift_relative();
  r.checks.push_back(make_check("mass_drift_rel", rec.mass_drift_relative(), "<=", tol));
  add_trajectory_files(rec, r, "");
  r.finalize();
  return r;
}

RunResult run_homogeneous(const Config& in) {
  Config cfg = in;
  const SimConfig sc = homogeneous(sim_config_from(cfg));
  const double tol = cfg.get_double("checks.mass_drift_tol", 1e-8);
  cfg.require_all_used();
  RunResult r = start("homogeneous", cfg);
  const auto rec = run(sc);
  r.summary["trajectory"] = trajectory_json(rec);
  nlohmann::json moments = nlohmann::json::object();
  for (const auto& [k, series] : rec.moment_integrals) moments[order_tag(k)] = series.back();
  r.summary["moments_final"] = moments;
  r.summary["mass_drift_rel"] = rec.mass_drift_relative();
  r.checks.push_back(make_check("mass_drift_rel", rec.mass_drift_relative(), "<=", tol));
  add_trajectory_files(rec, r, "");
  r.finalize();
  return r;
}

RunResult run_gelation_scan(const Config& in) {
  Config cfg = in;
  const SimConfig base = homogeneous(sim_config_from(cfg));
  const auto ns = cfg.get_size_list("scan.ns", {250, 500, 1000, 2000});
  const double margin = cfg.get_double("scan.drop_margin", 0.05);
  const double fraction = cfg.get_double("scan.trend_fraction", 0.25);
  cfg.require_all_used();
  if (ns.size() < 2) throw ConfigError("[scan] ns: need at least two sizes");
  RunResult r = start("gelation-scan", cfg);

  std::vector<double> retained, tail, total;
  std::vector<std::vector<double>> rows;
  nlohmann::json runs = nlohmann::json::array();
  for (std::size_t n : ns) {
    SimConfig sc = base;
    sc.n = n;
    const auto rec = run(sc);
    retained.push_back(retained_mass(rec));
    tail.push_back(rec.tail_mass.back());
    total.push_back(rec.mass.back());
    rows.push_back({static_cast<double>(n), rec.mass.front(), rec.mass.back(), retained.back(), tail.back()});
    runs.push_back({{"n", n},
                    {"mass_initial", rec.mass.front()},
                    {"mass_final", rec.mass.back()},
                    {"retained_mass", retained.back()},
                    {"tail_mass", tail.back()},
                    {"mass_drift_rel", rec.mass_drift_relative()},
                    {"rejected_steps", rec.rejected_steps},
                    {"wall_seconds", rec.wall_seconds}});
  }
  const double m0 = rows.front()[1];
  r.summary["runs"] = runs;
  r.summary["initial_mass"] = m0;

  // retained mass must drop by margin * m0 between the smallest and largest n
  r.checks.push_back(make_check("retained_mass_drop", (retained.front() - retained.back()) / m0, ">", margin));
  // each doubling must lose at least `fraction` of the previous doubling's loss
  std::vector<double> losses;
  for (std::size_t k = 0; k + 1 < retained.size(); ++k) losses.push_back(retained[k] - retained[k + 1]);
  nlohmann::json trend = nlohmann::json::array();
  for (std::size_t k = 1; k < losses.size(); ++k) {
    const double need = fraction * losses[k - 1];
    Check c{"doubling_loss_" + std::to_string(ns[k]) + "_" + std::to_string(ns[k + 1]), losses[k] / m0,
            ">= (and > 0)", std::max(need, 0.0) / m0, losses[k] > 0.0 && losses[k] >= need};
    r.checks.push_back(c);
    trend.push_back({{"loss", losses[k]}, {"previous_loss", losses[k - 1]},
                     {"magnitude_ratio", losses[k - 1] != 0.0 ? std::abs(losses[k] / losses[k - 1]) : 0.0}});
  }
  r.summary["doubling_losses"] = losses;
  r.summary["trend"] = trend;
  std::vector<double> deficit;
  for (double v : retained) deficit.push_back(1.0 - v / m0);
  r.summary["retained_deficit"] = deficit;
  r.files.emplace_back("scan.csv", table_csv({"n", "mass_initial", "mass_final", "retained_mass", "tail_mass"}, rows));
  r.finalize();
  return r;
}

RunResult run_moments(const Config& in) {
  Config cfg = in;
  const SimConfig base = sim_config_from(cfg);
  const auto ns = cfg.get_size_list("moments.ns", {50, 100, 200, 400});
  const double k = cfg.get_double("moments.k", 2.0);
  const double p = cfg.get_double("moments.p", 2.0);
  const double bound = cfg.get_double("moments.ratio_bound", 1.5);
  const auto cascade_ns = cfg.get_size_list("moments.cascade_ns", {64, 128, 256});
  const double cascade_tol = cfg.get_double("moments.cascade_tol", 0.01);
  cfg.require_all_used();
  if (ns.empty()) throw ConfigError("[moments] ns: need at least one size");
  RunResult r = start("moments", cfg);

  std::vector<double> norms;
  std::vector<std::vector<double>> rows;
  nlohmann::json runs = nlohmann::json::array();
  for (std::size_t n : ns) {
    SimConfig sc = base;
    sc.n = n;
    if (std::find(sc.moment_orders.begin(), sc.moment_orders.end(), k) == sc.moment_orders.end()) {
      sc.moment_orders.push_back(k);
    }
    sc.norm_exponents = {p};
    const auto rec = run(sc);
    norms.push_back(rec.moment_norms.at({k, p}));
    rows.push_back({static_cast<double>(n), norms.back()});
    runs.push_back({{"n", n}, {"norm", norms.back()}, {"mass_drift_rel", rec.mass_drift_relative()},
                    {"wall_seconds", rec.wall_seconds}});
  }
  const auto [lo, hi] = std::minmax_element(norms.begin(), norms.end());
  r.summary["runs"] = runs;
  r.summary["k"] = k;
  r.summary["p"] = p;
  r.summary["norm_ratio"] = *hi / *lo;
  r.checks.push_back(make_check("norm_ratio", *hi / *lo, "<=", bound));
  r.files.emplace_back("moment_norms.csv", table_csv({"n", "norm"}, rows));

  if (!cascade_ns.empty()) {
    std::vector<std::vector<double>> sups;
    for (std::size_t n : cascade_ns) {
      SimConfig sc = base;
      sc.n = n;
      sups.push_back(run(sc).species_sup);
    }
    const std::size_t tracked = std::min_element(sups.begin(), sups.end(), [](const auto& a, const auto& b) {
                                  return a.size() < b.size();
                                })->size();
    double worst = 0.0;
    std::vector<std::vector<double>> crow;
    for (std::size_t i = 0; i < tracked; ++i) {
      double mn = sups[0][i], mx = sups[0][i];
      std::vector<double> row{static_cast<double>(i + 1)};
      for (const auto& s : sups) {
        mn = std::min(mn, s[i]);
        mx = std::max(mx, s[i]);
        row.push_back(s[i]);
      }
      const double var = mx > 0.0 ? (mx - mn) / mx : 0.0;
      worst = std::max(worst, var);
      row.push_back(var);
      crow.push_back(std::move(row));
    }
    std::vector<std::string> header{"i"};
    for (std::size_t n : cascade_ns) header.push_back("sup_n" + std::to_string(n));
    header.push_back("variation");
    r.files.emplace_back("cascade.csv", table_csv(header, crow));
    r.summary["cascade_variation"] = worst;
    r.checks.push_back(make_check("cascade_variation", worst, "<", cascade_tol));
  }
  r.finalize();
  return r;
}

RunResult run_weakform_test(const Config& in) {
  Config cfg = in;
  const auto ns = cfg.get_size_list("weakform.ns", {8, 64, 256});
  const std::size_t trials = cfg.get_size("weakform.trials", 100);
  const std::uint64_t seed = cfg.get_seed("weakform.seed", 1);
  const double tol = cfg.get_double("weakform.tol", 1e-10);
  const double mass_tol = cfg.get_double("weakform.mass_tol", 1e-10);
  cfg.require_all_used();
  if (ns.empty()) throw ConfigError("[weakform] ns: need at least one size");
  RunResult r = start("weakform-test", cfg);

  const std::size_t nmax = *std::max_element(ns.begin(), ns.end());
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal;
  std::vector<double> table(nmax * nmax);
  for (std::size_t i = 0; i < nmax; ++i)
    for (std::size_t j = 0; j <= i; ++j) table[i * nmax + j] = table[j * nmax + i] = unit(rng);
  const std::vector<KernelSpec> kernels{KernelSpec::constant(2.0), KernelSpec::sum_power(1.0, 0.5),
                                        KernelSpec::product_power(1.0, 0.3, 0.6), KernelSpec::multiplicative(),
                                        KernelSpec::table(nmax, table)};
  double worst_weak = 0.0, worst_mass = 0.0;
  nlohmann::json per = nlohmann::json::array();
  for (const auto& k : kernels) {
    double kw = 0.0, km = 0.0;
    for (std::size_t n : ns) {
      std::vector<double> c(n), phi(n), ids(n);
      for (std::size_t i = 0; i < n; ++i) ids[i] = static_cast<double>(i + 1);
      for (std::size_t t = 0; t < trials; ++t) {
        for (auto& v : c) v = unit(rng);
        for (auto& v : phi) v = normal(rng);
        const double lhs = weak_form_lhs(c, k, phi);
        const double rhs = weak_form_rhs(c, k, phi);
        const double scale = weak_form_scale(c, k, phi);
        kw = std::max(kw, scale > 0.0 ? std::abs(lhs - rhs) / scale : std::abs(lhs - rhs));
        const double mass = weak_form_lhs(c, k, ids);
        const double mscale = weak_form_scale(c, k, ids);
        km = std::max(km, mscale > 0.0 ? std::abs(mass) / mscale : std::abs(mass));
      }
    }
    per.push_back({{"kernel", k.name()}, {"weak_form_rel", kw}, {"mass_nullity_rel", km}});
    worst_weak = std::max(worst_weak, kw);
    worst_mass = std::max(worst_mass, km);
  }
  r.summary["kernels"] = per;
  r.summary["weak_form_rel"] = worst_weak;
  r.summary["mass_nullity_rel"] = worst_mass;
  r.checks.push_back(make_check("weak_form_rel", worst_weak, "<=", tol));
  r.checks.push_back(make_check("mass_nullity_rel", worst_mass, "<=", mass_tol));
  r.finalize();
  return r;
}

namespace {

SamplerConfig sampler_from(const Config& cfg, const std::string& sec) {
  SamplerConfig s;
  s.cells = cfg.get_size(sec + ".nx", s.cells);
  s.steps = cfg.get_size(sec + ".nt", s.steps);
  s.T = cfg.get_double(sec + ".T", s.T);
  s.samples = cfg.get_size(sec + ".samples", s.samples);
  s.seed = cfg.get_seed(sec + ".seed", s.seed);
  s.power_iterations = cfg.get_size(sec + ".power_iterations", s.power_iterations);
  return s;
}

SpaceTimeSeries forcing_from(const TimeMesh& mesh, const std::string& kind, std::uint64_t seed) {
  if (kind == "cos") return sample_field(mesh, [](double, double x) { return std::cos(std::numbers::pi * x); });
  if (kind == "constant") return sample_field(mesh, [](double, double) { return 1.0; });
  if (kind == "random") return random_forcing(mesh, seed, 0);
  throw ConfigError("[dual] forcing: expected cos, constant or random (got '" + kind + "')");
}

SpaceTimeSeries initial_from(const TimeMesh& mesh, const std::string& kind, const SpaceTimeSeries& f,
                             std::uint64_t seed) {
  if (kind == "zero") return zero_field(mesh);
  SpaceTimeSeries v(mesh.grid);
  if (kind == "scaled") {
    for (std::size_t m = 0; m <= mesh.steps; ++m) {
      std::vector<double> fr(f.frame(m).begin(), f.frame(m).end());
      for (double& x : fr) x *= mesh.t(m);
      v.push(mesh.t(m), std::move(fr));
    }
    return v;
  }
  if (kind == "random") {
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    std::normal_distribution<double> normal;
    for (std::size_t m = 0; m <= mesh.steps; ++m) {
      std::vector<double> fr(mesh.grid.size(), 0.0);
      if (m > 0)
        for (double& x : fr) x = normal(rng);
      v.push(mesh.t(m), std::move(fr));
    }
    return v;
  }
  throw ConfigError("[dual] initial: expected zero, scaled or random (got '" + kind + "')");
}

struct DualSetup {
  DualProblem prob;
  ContractionOptions opt;
  TimeMesh mesh;
  std::string initial;
  std::uint64_t seed;
};

DualSetup dual_setup(const Config& cfg) {
  const TimeMesh mesh(cfg.get_size("dual.nx", 32), cfg.get_size("dual.nt", 32), cfg.get_double("dual.T", 1.0));
  const double a = cfg.get_double("dual.a", 0.8);
  const double b = cfg.get_double("dual.b", 1.2);
  const double q = cfg.get_double("dual.q", 2.0);
  const std::uint64_t seed = cfg.get_seed("dual.seed", 1);
  const auto pattern = [&] {
    try {
      return parse_pattern(cfg.get_string("dual.pattern", "checkerboard"));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("[dual] pattern: ") + e.what());
    }
  }();
  const std::size_t block = cfg.get_size("dual.block", 1);
  auto M = make_coefficient(mesh, pattern, a, b, block, seed);
  auto f = forcing_from(mesh, cfg.get_string("dual.forcing", "cos"), seed);
  ContractionOptions opt;
  opt.max_iterations = cfg.get_size("dual.max_iterations", opt.max_iterations);
  opt.rtol = cfg.get_double("dual.rtol", opt.rtol);
  if (cfg.has("dual.k_hat")) opt.k_hat = cfg.get_double("dual.k_hat", 1.0);
  opt.sampler = sampler_from(cfg, "dual");
  DualSetup s{DualProblem{std::move(M), std::move(f), q, a, b}, opt, mesh, cfg.get_string("dual.initial", "zero"),
              seed};
  return s;
}

double max_abs_diff(const SpaceTimeSeries& u, const SpaceTimeSeries& v) {
  double d = 0.0;
  for (std::size_t m = 0; m < u.frames(); ++m)
    for (std::size_t j = 0; j < u.grid().size(); ++j) d = std::max(d, std::abs(u.frame(m)[j] - v.frame(m)[j]));
  return d;
}

double max_abs(const SpaceTimeSeries& u) {
  double d = 0.0;
  for (std::size_t m = 0; m < u.frames(); ++m)
    for (double x : u.frame(m)) d = std::max(d, std::abs(x));
  return d;
}

}  // namespace

RunResult run_duality_k(const Config& in) {
  Config cfg = in;
  const double m = cfg.get_double("duality.m", 1.0);
  const double q = cfg.get_double("duality.q", 2.0);
  const SamplerConfig s = sampler_from(cfg, "duality");
  cfg.require_all_used();
  RunResult r = start("duality-k", cfg);
  const auto est = estimate_K(m, q, s);
  r.summary["estimate"] = k_estimate_json(est);
  r.summary["k_estimate"] = est.estimate;
  r.finalize();
  return r;
}

RunResult run_closeness(const Config& in) {
  Config cfg = in;
  const double a = cfg.get_double("closeness.a", 1.0);
  const double b = cfg.get_double("closeness.b", 1.0);
  const double p = cfg.get_double("closeness.p", 2.0);
  const SamplerConfig s = sampler_from(cfg, "closeness");
  cfg.require_all_used();
  RunResult r = start("closeness", cfg);
  const auto rep = check_closeness(a, b, p, s);
  r.summary["closeness"] = closeness_json(rep);
  r.checks.push_back(make_check("closeness_lhs", rep.lhs, "<", 1.0));
  r.finalize();
  return r;
}

RunResult run_dual_solve(const Config& in) {
  Config cfg = in;
  DualSetup s = dual_setup(cfg);
  const double residual_tol = cfg.get_double("dual.residual_tol", 1e-8);
  const double ratio_slack = cfg.get_double("dual.ratio_slack", 0.05);
  cfg.require_all_used();
  RunResult r = start("dual-solve", cfg);
  if (s.initial != "zero") s.opt.initial = initial_from(s.mesh, s.initial, s.prob.f, s.seed);
  const auto res = solve_dual_contraction(s.prob, s.opt);
  r.summary["contraction"] = contraction_json(res);
  r.checks.push_back(make_check("residual_relative", res.residual_relative, "<=", residual_tol));
  r.checks.push_back(make_check("observed_ratio", res.observed_ratio, "<=", res.contraction_bound + ratio_slack));
  r.files.emplace_back("solution.csv", frames_csv(res.u));
  r.finalize();
  return r;
}

namespace {

RunResult run_e2(const Config& in) {
  Config cfg = in;
  SimConfig base;
  base.cells = 1;
  base.initial.family = InitialData::Family::Monodisperse;
  base.initial.rho0 = cfg.get_double("e2.rho0", 1.0);
  base.dt = cfg.get_double("e2.dt", 1e-3);
  base.moment_orders = {0.0, 1.0, 2.0};
  base.tracked_species = 0;
  const double c0 = cfg.get_double("e2.constant_c0", 2.0);
  const std::size_t n_const = cfg.get_size("e2.constant_n", 512);
  const double T_const = cfg.get_double("e2.constant_T", 1.0);
  const std::size_t n_mult = cfg.get_size("e2.multiplicative_n", 2000);
  const double T_mult = cfg.get_double("e2.multiplicative_T", 0.5);
  const double tol0 = cfg.get_double("e2.rho0_tol", 1e-4);
  const double tol2 = cfg.get_double("e2.rho2_rel_tol", 0.02);
  cfg.require_all_used();
  RunResult r = start("E2", cfg);

  SimConfig sc = base;
  sc.kernel = KernelSpec::constant(c0);
  sc.n = n_const;
  sc.T = T_const;
  const auto rc = run(sc);
  const double r00 = rc.moment_integrals.at(0.0).front();
  auto oracle0 = [&](double t) { return r00 / (1.0 + 0.5 * c0 * r00 * t); };
  std::vector<std::vector<double>> rows;
  for (std::size_t s = 0; s < rc.times.size(); ++s) {
    rows.push_back({rc.times[s], rc.moment_integrals.at(0.0)[s], oracle0(rc.times[s])});
  }
  r.files.emplace_back("constant_rho0.csv", table_csv({"t", "rho_0", "oracle"}, rows));
  const double rho0_T = rc.moment_integrals.at(0.0).back();

  sc = base;
  sc.kernel = KernelSpec::multiplicative();
  sc.n = n_mult;
  sc.T = T_mult;
  const auto rm = run(sc);
  const double r20 = rm.moment_integrals.at(2.0).front();
  auto oracle2 = [&](double t) { return r20 / (1.0 - r20 * t); };
  rows.clear();
  for (std::size_t s = 0; s < rm.times.size(); ++s) {
    rows.push_back({rm.times[s], rm.moment_integrals.at(2.0)[s], oracle2(rm.times[s])});
  }
  r.files.emplace_back("multiplicative_rho2.csv", table_csv({"t", "rho_2", "oracle"}, rows));
  const double rho2_T = rm.moment_integrals.at(2.0).back();

  r.summary["constant"] = {{"n", n_const}, {"T", T_const}, {"rho0_T", rho0_T}, {"oracle", oracle0(T_const)},
                           {"mass_drift_rel", rc.mass_drift_relative()}, {"wall_seconds", rc.wall_seconds}};
  r.summary["multiplicative"] = {{"n", n_mult}, {"T", T_mult}, {"rho2_T", rho2_T}, {"oracle", oracle2(T_mult)},
                                 {"mass_drift_rel", rm.mass_drift_relative()}, {"wall_seconds", rm.wall_seconds}};
  r.checks.push_back(make_check("constant_rho0_abs_err", std::abs(rho0_T - oracle0(T_const)), "<=", tol0));
  r.checks.push_back(
      make_check("multiplicative_rho2_rel_err", std::abs(rho2_T - oracle2(T_mult)) / oracle2(T_mult), "<=", tol2));
  r.finalize();
  return r;
}

RunResult run_e5(const Config& in) {
  Config cfg = in;
  const auto ms = cfg.get_list("e5.ms", {0.5, 1.0, 2.0});
  const double q = cfg.get_double("e5.q", 2.0);
  const SamplerConfig s = sampler_from(cfg, "e5");
  const double slack = cfg.get_double("e5.ratio_slack", 1e-12);
  const double witness_tol = cfg.get_double("e5.witness_tol", 1e-6);
  const double refine_tol = cfg.get_double("e5.refine_tol", 1e-6);
  const std::size_t trials = cfg.get_size("e5.energy_trials", 50);
  cfg.require_all_used();
  RunResult r = start("E5", cfg);

  double max_ratio = 0.0, min_estimate = std::numeric_limits<double>::infinity(), max_refine = 0.0;
  nlohmann::json per = nlohmann::json::array();
  for (double m : ms) {
    const auto est = estimate_K(m, q, s);
    SamplerConfig fine = s;
    fine.steps *= 2;
    const auto est_fine = estimate_K(m, q, fine);
    const double mr = *std::max_element(est.ratios.begin(), est.ratios.end());
    max_ratio = std::max({max_ratio, mr, est.power_iteration_ratio.value_or(0.0)});
    min_estimate = std::min(min_estimate, est.estimate);
    max_refine = std::max(max_refine, std::abs(est_fine.estimate - est.estimate));
    auto j = k_estimate_json(est);
    j.erase("ratios");
    j["max_sample_ratio"] = mr;
    j["estimate_refined_dt"] = est_fine.estimate;
    per.push_back(j);
  }
  const TimeMesh mesh(s.cells, s.steps, s.T);
  double max_lhs = -std::numeric_limits<double>::infinity(), max_identity_gap = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    const auto f = random_forcing(mesh, s.seed + 1, t);
    const auto e = energy_identity_check(ms.empty() ? 1.0 : ms[t % ms.size()], f);
    max_lhs = std::max(max_lhs, e.lhs);
    max_identity_gap = std::max(max_identity_gap, std::abs(e.lhs - e.matched) / std::max(std::abs(e.matched), 1e-300));
  }
  r.summary["per_m"] = per;
  r.summary["k_estimate"] = min_estimate;
  r.summary["max_ratio"] = max_ratio;
  r.summary["energy"] = {{"trials", trials}, {"max_lhs", trials ? max_lhs : 0.0},
                         {"max_identity_gap_rel", max_identity_gap}};
  r.checks.push_back(make_check("max_ratio", max_ratio, "<=", 1.0 + slack));
  r.checks.push_back(make_check("k_estimate", min_estimate, ">=", 1.0 - witness_tol));
  r.checks.push_back(make_check("refine_change", max_refine, "<=", refine_tol));
  if (trials) r.checks.push_back(make_check("energy_max_lhs", max_lhs, "<=", 0.0));
  r.finalize();
  return r;
}

RunResult run_e6(const Config& in) {
  Config cfg = in;
  DualSetup s = dual_setup(cfg);
  const double residual_tol = cfg.get_double("dual.residual_tol", 1e-8);
  const double ratio_slack = cfg.get_double("dual.ratio_slack", 0.05);
  const double independence_tol = cfg.get_double("e6.independence_tol", 1e-8);
  cfg.require_all_used();
  RunResult r = start("E6", cfg);

  const auto base = solve_dual_contraction(s.prob, s.opt);
  r.summary["contraction"] = contraction_json(base);
  r.checks.push_back(make_check("residual_relative", base.residual_relative, "<=", residual_tol));
  r.checks.push_back(make_check("observed_ratio", base.observed_ratio, "<=", base.contraction_bound + ratio_slack));

  double worst = 0.0;
  const double scale = std::max(max_abs(base.u), 1e-300);
  nlohmann::json starts = nlohmann::json::array();
  for (const std::string kind : {"scaled", "random"}) {
    ContractionOptions opt = s.opt;
    opt.initial = initial_from(s.mesh, kind, s.prob.f, s.seed);
    const auto res = solve_dual_contraction(s.prob, opt);
    const double d = max_abs_diff(res.u, base.u) / scale;
    worst = std::max(worst, d);
    starts.push_back({{"initial", kind}, {"iterations", res.iterations}, {"difference_rel", d},
                      {"observed_ratio", res.observed_ratio}});
  }
  r.summary["initial_iterates"] = starts;
  r.checks.push_back(make_check("initial_independence", worst, "<=", independence_tol));

  DualProblem flat = s.prob;
  flat.M = make_coefficient(s.mesh, CoefficientPattern::Constant, s.prob.a, s.prob.b);
  const auto one = solve_dual_contraction(flat, s.opt);
  r.summary["constant_coefficient_iterations"] = one.iterations;
  r.checks.push_back(make_check("constant_coefficient_iterations", static_cast<double>(one.iterations), "<=", 1.0));
  r.files.emplace_back("solution.csv", frames_csv(base.u));
  r.finalize();
  return r;
}

}  // namespace

Config experiment_defaults(const std::string& id) {
  Config c;
  if (id == "E1") {
    c.set("kernel.family", "sum_power");
    c.set("kernel.C", "1");
    c.set("kernel.gamma", "0.5");
    c.set("diffusion.family", "limit");
    c.set("diffusion.d_inf", "1");
    c.set("diffusion.A", "1");
    c.set("diffusion.r", "1");
    c.set("grid.n", "256");
    c.set("grid.N", "64");
    c.set("time.dt", "1e-3");
    c.set("time.T", "2");
    c.set("initial.family", "geometric");
    c.set("initial.ratio", "0.5");
    c.set("initial.rho0", "1");
    c.set("initial.amplitude", "0.5");
    c.set("output.stride", "100");
    c.set("checks.mass_drift_tol", "1e-8");
  } else if (id == "E2") {
    c.set("e2.constant_c0", "2");
    c.set("e2.constant_n", "512");
    c.set("e2.constant_T", "1");
    c.set("e2.multiplicative_n", "2000");
    c.set("e2.multiplicative_T", "0.5");
    c.set("e2.dt", "1e-3");
    c.set("e2.rho0_tol", "1e-4");
    c.set("e2.rho2_rel_tol", "0.02");
  } else if (id == "E3") {
    c.set("kernel.family", "product_power");
    c.set("kernel.C", "1");
    c.set("kernel.alpha", "0.6");
    c.set("kernel.beta", "0.6");
    c.set("initial.family", "monodisperse");
    c.set("initial.rho0", "1");
    c.set("time.T", "5");
    c.set("time.dt", "0.004");
    c.set("scan.ns", "250,500,1000,2000");
    c.set("scan.drop_margin", "0.05");
    c.set("scan.trend_fraction", "0.25");
  } else if (id == "E4") {
    c.set("kernel.family", "sum_power");
    c.set("kernel.C", "1");
    c.set("kernel.gamma", "0.5");
    c.set("diffusion.family", "limit");
    c.set("diffusion.d_inf", "1");
    c.set("diffusion.A", "1");
    c.set("diffusion.r", "1");
    c.set("grid.N", "32");
    c.set("time.dt", "2e-3");
    c.set("time.T", "1");
    c.set("initial.family", "geometric");
    c.set("initial.ratio", "0.5");
    c.set("initial.rho0", "1");
    c.set("initial.amplitude", "0.5");
    c.set("moments.ns", "50,100,200,400");
    c.set("moments.k", "2");
    c.set("moments.p", "2");
    c.set("moments.ratio_bound", "1.5");
    c.set("moments.cascade_ns", "64,128,256");
    c.set("moments.cascade_tol", "0.01");
  } else if (id == "E5") {
    c.set("e5.ms", "0.5,1,2");
    c.set("e5.q", "2");
    c.set("e5.nx", "32");
    c.set("e5.nt", "32");
    c.set("e5.T", "1");
    c.set("e5.samples", "100");
    c.set("e5.seed", "1");
    c.set("e5.ratio_slack", "1e-12");
    c.set("e5.witness_tol", "1e-6");
    c.set("e5.refine_tol", "1e-6");
    c.set("e5.energy_trials", "50");
  } else if (id == "E6") {
    c.set("dual.nx", "32");
    c.set("dual.nt", "32");
    c.set("dual.T", "1");
    c.set("dual.a", "0.8");
    c.set("dual.b", "1.2");
    c.set("dual.q", "2");
    c.set("dual.pattern", "checkerboard");
    c.set("dual.forcing", "cos");
    c.set("dual.seed", "1");
    c.set("dual.residual_tol", "1e-8");
    c.set("dual.ratio_slack", "0.05");
    c.set("e6.independence_tol", "1e-8");
  } else {
    throw ConfigError("unknown experiment '" + id + "' (expected E1..E6)");
  }
  return c;
}

RunResult run_experiment(const std::string& id, const Config& overrides) {
  Config cfg = experiment_defaults(id);
  cfg.merge(overrides);
  RunResult r;
  if (id == "E1") r = run_simulate(cfg);
  else if (id == "E2") r = run_e2(cfg);
  else if (id == "E3") r = run_gelation_scan(cfg);
  else if (id == "E4") r = run_moments(cfg);
  else if (id == "E5") r = run_e5(cfg);
  else r = run_e6(cfg);
  r.summary["experiment"] = id;
  r.command = "experiment " + id;
  r.finalize();
  return r;
}

}  // namespace coagdiff
