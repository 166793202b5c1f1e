#include "coagdiff/simulator.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <numbers>
#include <sstream>

namespace coagdiff {

ClusterField::ClusterField(std::size_t n, std::size_t cells)
    : n_(n), cells_(cells), data_(n * cells, 0.0) {
  if (n_ == 0 || cells_ == 0) throw std::invalid_argument("ClusterField: need n >= 1 and cells >= 1");
}

double InitialData::profile(double x) const {
  return rho0 + amplitude * std::cos(std::numbers::pi * x);
}

namespace {

void validate(const SimConfig& cfg) {
  auto fail = [](const std::string& m) { throw std::invalid_argument("config: " + m); };
  if (cfg.n == 0) fail("n must be >= 1");
  if (cfg.cells == 0) fail("cells must be >= 1");
  if (!(cfg.dt > 0.0)) fail("dt must be > 0");
  if (!(cfg.T >= 0.0)) fail("T must be >= 0");
  if (cfg.output_stride == 0) fail("output_stride must be >= 1");
  if (!(cfg.rk4_rate_cap > 0.0)) fail("rk4_rate_cap must be > 0");
  if (cfg.tail_index && (*cfg.tail_index == 0 || *cfg.tail_index > cfg.n)) {
    fail("tail_index must lie in [1, n]");
  }
  for (double k : cfg.moment_orders)
    if (!(k >= 0.0)) fail("moment orders must be >= 0");
  for (double p : cfg.norm_exponents)
    if (!(p >= 1.0)) fail("norm exponents must be >= 1");
}

void load_table_init(const InitialData& init, ClusterField& s) {
  std::ifstream in(init.table);
  if (!in) throw std::runtime_error("cannot open initial table " + init.table.string());
  std::string line;
  std::getline(in, line);
  if (line.rfind("i,cell,c", 0) != 0) {
    throw std::runtime_error(init.table.string() + ":1: expected header \"i,cell,c\"");
  }
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::size_t i = 0, j = 0;
    double v = 0.0;
    char c1 = 0, c2 = 0;
    const std::string where = init.table.string() + ":" + std::to_string(lineno);
    if (!(ss >> i >> c1 >> j >> c2 >> v) || c1 != ',' || c2 != ',') {
      throw std::runtime_error(where + ": malformed row");
    }
    if (i == 0 || i > s.species() || j >= s.cells()) throw std::runtime_error(where + ": index out of range");
    s.at(i, j) = v;
  }
}

}  // namespace

ClusterField make_initial_state(const SimConfig& cfg) {
  validate(cfg);
  ClusterField s(cfg.n, cfg.cells);
  const auto& init = cfg.initial;
  const double h = s.cell_width();
  for (std::size_t j = 0; j < s.cells(); ++j) {
    const double rho = init.profile((static_cast<double>(j) + 0.5) * h);
    switch (init.family) {
      case InitialData::Family::Monodisperse:
        s.at(1, j) = rho;
        break;
      case InitialData::Family::Geometric: {
        const double r = init.ratio;
        if (!(r > 0.0 && r < 1.0)) throw std::invalid_argument("config: geometric ratio must lie in (0,1)");
        // scaled so that the truncated mass sum_{i<=n} i c_i equals rho
        const double norm = (1.0 - r) / (1.0 - std::pow(r, static_cast<double>(cfg.n)));
        double rp = 1.0;
        for (std::size_t i = 1; i <= cfg.n; ++i) {
          s.at(i, j) = rho * norm * rp / static_cast<double>(i);
          rp *= r;
        }
        break;
      }
      case InitialData::Family::Table:
        break;
    }
  }
  if (init.family == InitialData::Family::Table) load_table_init(init, s);
  for (double v : s.values()) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument("config: initial concentrations must be finite and >= 0");
    }
  }
  return s;
}

ReactionWorkspace::ReactionWorkspace(const CoagulationOperator& op)
    : coag(op.make_workspace()) {
  const std::size_t n = op.size();
  for (auto* v : {&k1, &k2, &k3, &k4, &stage, &gain, &rate, &start}) v->assign(n, 0.0);
}

void reaction_step_cell(std::span<double> c, const CoagulationOperator& op, double dt,
                        ReactionScheme scheme, double tol, ReactionWorkspace& ws) {
  const std::size_t n = c.size();
  if (scheme == ReactionScheme::SemiImplicitLoss) {
    op.gain_and_rate(c, ws.gain, ws.rate, ws.coag);
    for (std::size_t i = 0; i < n; ++i) c[i] = (c[i] + dt * ws.gain[i]) / (1.0 + dt * ws.rate[i]);
    return;
  }
  op.apply(c, ws.k1, ws.coag);
  for (std::size_t i = 0; i < n; ++i) ws.stage[i] = c[i] + 0.5 * dt * ws.k1[i];
  op.apply(ws.stage, ws.k2, ws.coag);
  for (std::size_t i = 0; i < n; ++i) ws.stage[i] = c[i] + 0.5 * dt * ws.k2[i];
  op.apply(ws.stage, ws.k3, ws.coag);
  for (std::size_t i = 0; i < n; ++i) ws.stage[i] = c[i] + dt * ws.k3[i];
  op.apply(ws.stage, ws.k4, ws.coag);
  double scale = 0.0;
  for (double v : c) scale = std::max(scale, std::abs(v));
  const double floor = -tol * scale;
  for (std::size_t i = 0; i < n; ++i) {
    ws.stage[i] = c[i] + dt / 6.0 * ((ws.k1[i] + 2.0 * ws.k2[i]) + (2.0 * ws.k3[i] + ws.k4[i]));
    if (!(ws.stage[i] >= floor)) {
      std::ostringstream msg;
      msg << "RK4 step produced c_" << i + 1 << " = " << ws.stage[i] << " (dt = " << dt << ")";
      throw StepRejected(msg.str());
    }
  }
  std::copy(ws.stage.begin(), ws.stage.end(), c.begin());
}

namespace {

struct CellStats {
  std::size_t rejected = 0;
  std::size_t substeps = 0;
};

void advance_cell(std::span<double> c, const CoagulationOperator& op, double dt,
                  const SimConfig& cfg, ReactionWorkspace& ws, int depth, CellStats& stats) {
  std::size_t m = 1;
  if (cfg.scheme == ReactionScheme::ExplicitRK4) {
    const double lam = op.max_rate(c, ws.coag);
    m = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(dt * lam / cfg.rk4_rate_cap)));
  }
  const double h = dt / static_cast<double>(m);
  std::vector<double> saved;
  for (std::size_t s = 0; s < m; ++s) {
    saved.assign(c.begin(), c.end());
    try {
      reaction_step_cell(c, op, h, cfg.scheme, cfg.negativity_tolerance, ws);
      ++stats.substeps;
    } catch (const StepRejected& e) {
      ++stats.rejected;
      std::copy(saved.begin(), saved.end(), c.begin());
      if (depth >= cfg.max_halvings) {
        throw std::runtime_error(std::string("reaction step failed after ") +
                                 std::to_string(depth) + " halvings: " + e.what());
      }
      advance_cell(c, op, 0.5 * h, cfg, ws, depth + 1, stats);
      advance_cell(c, op, 0.5 * h, cfg, ws, depth + 1, stats);
    }
  }
}

}  // namespace

std::size_t reaction_substep(ClusterField& state, const CoagulationOperator& op, double dt,
                             const SimConfig& cfg, std::size_t* substeps) {
  if (op.size() != state.species()) throw std::invalid_argument("reaction_substep: size mismatch");
  std::size_t rejected = 0;
  std::size_t steps = 0;
  std::exception_ptr failure;
  const long cells = static_cast<long>(state.cells());
#pragma omp parallel reduction(+ : rejected, steps)
  {
    ReactionWorkspace ws(op);
#pragma omp for schedule(static)
    for (long j = 0; j < cells; ++j) {
      try {
        CellStats stats;
        advance_cell(state.cell(static_cast<std::size_t>(j)), op, dt, cfg, ws, 0, stats);
        rejected += stats.rejected;
        steps += stats.substeps;
      } catch (...) {
#pragma omp critical(coagdiff_reaction_failure)
        if (!failure) failure = std::current_exception();
      }
    }
  }
  if (failure) std::rethrow_exception(failure);
  if (substeps) *substeps += steps;
  return rejected;
}

void diffusion_substep(ClusterField& state, const Grid1D& grid, const DiffusionProfile& d,
                       double dt) {
  if (grid.size() != state.cells()) throw std::invalid_argument("diffusion_substep: grid mismatch");
  const std::size_t N = grid.size();
  const long n = static_cast<long>(state.species());
#pragma omp parallel
  {
    std::vector<double> column(N), scratch(N);
#pragma omp for schedule(static)
    for (long s = 0; s < n; ++s) {
      const std::size_t i = static_cast<std::size_t>(s) + 1;
      for (std::size_t j = 0; j < N; ++j) column[j] = state.at(i, j);
      solve_shifted_laplacian(grid, d(i) * dt, column, scratch);
      for (std::size_t j = 0; j < N; ++j) state.at(i, j) = column[j];
    }
  }
}

std::size_t strang_step(ClusterField& state, const CoagulationOperator& op, const SimConfig& cfg,
                        const RunHooks* hooks, std::size_t* substeps) {
  const double dt = cfg.dt;
  if (state.cells() == 1) {
    const std::size_t rej = reaction_substep(state, op, dt, cfg, substeps);
    state.t += dt;
    return rej;
  }
  const Grid1D grid(state.cells());
  diffusion_substep(state, grid, cfg.diffusion, 0.5 * dt);
  if (hooks && hooks->after_diffusion) hooks->after_diffusion(state);
  const std::size_t rej = reaction_substep(state, op, dt, cfg, substeps);
  diffusion_substep(state, grid, cfg.diffusion, 0.5 * dt);
  state.t += dt;
  if (hooks && hooks->after_diffusion) hooks->after_diffusion(state);
  return rej;
}

std::vector<double> moment_field(const ClusterField& s, double k) {
  return tail_moment_field(s, k, 1);
}

std::vector<double> tail_moment_field(const ClusterField& s, double k, std::size_t I) {
  if (I == 0 || I > s.species()) throw std::invalid_argument("tail_moment_field: need 1 <= I <= n");
  std::vector<double> weight(s.species() + 1, 0.0);
  for (std::size_t i = I; i <= s.species(); ++i) weight[i] = std::pow(static_cast<double>(i), k);
  std::vector<double> out(s.cells(), 0.0);
  for (std::size_t j = 0; j < s.cells(); ++j) {
    const auto c = s.cell(j);
    double m = 0.0;
    for (std::size_t i = I; i <= s.species(); ++i) m += weight[i] * c[i - 1];
    out[j] = m;
  }
  return out;
}

std::vector<double> averaged_diffusivity_field(const ClusterField& s, const DiffusionProfile& d,
                                               double k, std::size_t I) {
  if (I == 0 || I > s.species()) {
    throw std::invalid_argument("averaged_diffusivity_field: need 1 <= I <= n");
  }
  std::vector<double> weight(s.species() + 1, 0.0), rate(s.species() + 1, 0.0);
  for (std::size_t i = I; i <= s.species(); ++i) {
    weight[i] = std::pow(static_cast<double>(i), k);
    rate[i] = d(i);
  }
  std::vector<double> out(s.cells(), d.limit_value());
  for (std::size_t j = 0; j < s.cells(); ++j) {
    const auto c = s.cell(j);
    double num = 0.0, den = 0.0;
    for (std::size_t i = I; i <= s.species(); ++i) {
      const double w = weight[i] * c[i - 1];
      num += w * rate[i];
      den += w;
    }
    if (den > 0.0) out[j] = num / den;
  }
  return out;
}

PsiBounds psi_bounds(const ClusterField& s, std::size_t I, double C) {
  if (I < 2) throw std::invalid_argument("psi_bounds: need I >= 2");
  PsiBounds b{0.0, 0.0};
  const std::size_t top = std::min(I - 1, s.species());
  for (std::size_t j = 0; j < s.cells(); ++j) {
    const auto c = s.cell(j);
    double second = 0.0, first = 0.0;
    for (std::size_t i = 1; i <= top; ++i) {
      const double x = static_cast<double>(i);
      second += x * x * c[i - 1];
      first += x * c[i - 1];
    }
    const double psi1 = 2.0 * C * second;
    b.mu1 = std::max(b.mu1, psi1);
    b.mu2 = std::max(b.mu2, psi1 * first);
  }
  return b;
}

double domain_integral(const ClusterField& s, std::span<const double> field) {
  double sum = 0.0;
  for (double v : field) sum += v;
  return sum * s.cell_width();
}

double TrajectoryRecord::mass_drift_relative() const {
  if (mass.empty() || mass.front() == 0.0) return 0.0;
  double worst = 0.0;
  for (double m : mass) worst = std::max(worst, std::abs(m - mass.front()));
  return worst / std::abs(mass.front());
}

SpaceTimeSeries TrajectoryRecord::moment_series(double k) const {
  auto it = moment_frames.find(k);
  if (it == moment_frames.end()) throw std::out_of_range("moment order not recorded");
  SpaceTimeSeries s{Grid1D(cells)};
  for (std::size_t m = 0; m < output_times.size(); ++m) s.push(output_times[m], it->second[m]);
  return s;
}

namespace {

double frame_norm(const std::vector<double>& times, const std::vector<std::vector<double>>& frames,
                  double cell_width, double p) {
  const std::size_t m = times.size();
  if (std::isinf(p)) {
    double mx = 0.0;
    for (const auto& f : frames)
      for (double v : f) mx = std::max(mx, std::abs(v));
    return mx;
  }
  double total = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    double w = 0.0;
    if (k > 0) w += 0.5 * (times[k] - times[k - 1]);
    if (k + 1 < m) w += 0.5 * (times[k + 1] - times[k]);
    double sp = 0.0;
    for (double v : frames[k]) sp += std::pow(std::abs(v), p);
    total += w * sp * cell_width;
  }
  return std::pow(total, 1.0 / p);
}

void record_step(const ClusterField& s, const SimConfig& cfg, TrajectoryRecord& rec) {
  rec.times.push_back(s.t);
  rec.mass.push_back(domain_integral(s, moment_field(s, 1.0)));
  const std::size_t half = s.species() / 2 + 1;
  rec.tail_mass.push_back(half <= s.species() ? domain_integral(s, tail_moment_field(s, 1.0, half)) : 0.0);
  for (double k : cfg.moment_orders) rec.moment_integrals[k].push_back(domain_integral(s, moment_field(s, k)));
  for (std::size_t i = 1; i <= rec.species_sup.size(); ++i) {
    for (std::size_t j = 0; j < s.cells(); ++j) rec.species_sup[i - 1] = std::max(rec.species_sup[i - 1], s.at(i, j));
  }
}

void record_output(const ClusterField& s, const SimConfig& cfg, TrajectoryRecord& rec) {
  rec.output_times.push_back(s.t);
  for (double k : cfg.moment_orders) rec.moment_frames[k].push_back(moment_field(s, k));
  if (cfg.store_states) rec.states.push_back(s);
}

void finish(const SimConfig& cfg, TrajectoryRecord& rec) {
  for (double k : cfg.moment_orders) {
    for (double p : cfg.norm_exponents) {
      rec.moment_norms[{k, p}] =
          frame_norm(rec.output_times, rec.moment_frames[k], 1.0 / static_cast<double>(rec.cells), p);
    }
  }
}

}  // namespace

TrajectoryRecord run(const SimConfig& cfg, const RunHooks* hooks) {
  const auto t0 = std::chrono::steady_clock::now();
  ClusterField state = make_initial_state(cfg);
  const CoagulationOperator op(cfg.kernel, cfg.n, cfg.evaluator);

  auto rec = std::make_shared<TrajectoryRecord>();
  rec->n = cfg.n;
  rec->cells = cfg.cells;
  rec->tail_index = cfg.tail_index.value_or(cfg.diffusion.default_tail_index(cfg.tail_closeness, cfg.n));
  rec->species_sup.assign(std::min(cfg.tracked_species, cfg.n), 0.0);

  const std::size_t steps =
      cfg.T > 0.0 ? static_cast<std::size_t>(std::ceil(cfg.T / cfg.dt - 1e-9)) : 0;
  SimConfig step_cfg = cfg;
  if (steps > 0) step_cfg.dt = cfg.T / static_cast<double>(steps);

  record_step(state, cfg, *rec);
  record_output(state, cfg, *rec);
  if (hooks && hooks->after_diffusion) hooks->after_diffusion(state);
  try {
    for (std::size_t s = 1; s <= steps; ++s) {
      rec->rejected_steps += strang_step(state, op, step_cfg, hooks, &rec->reaction_substeps);
      if (s == steps) state.t = cfg.T;
      record_step(state, cfg, *rec);
      if (s % cfg.output_stride == 0 || s == steps) record_output(state, cfg, *rec);
    }
  } catch (const std::exception& e) {
    finish(cfg, *rec);
    rec->wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    throw SolverAbort(std::string("solver abort at t = ") + std::to_string(state.t) + ": " + e.what(), rec);
  }
  finish(cfg, *rec);
  rec->wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return std::move(*rec);
}

}  // namespace coagdiff
