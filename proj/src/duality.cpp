#include "coagdiff/duality.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace coagdiff {

namespace {

using Frames = std::vector<std::vector<double>>;

void check_exponent(double q) {
  if (!(q > 1.0) || std::isinf(q)) throw std::invalid_argument("duality: need finite q > 1");
}

SpaceTimeSeries to_series(const TimeMesh& mesh, Frames frames) {
  SpaceTimeSeries s(mesh.grid);
  for (std::size_t m = 0; m <= mesh.steps; ++m) s.push(mesh.t(m), std::move(frames[m]));
  return s;
}

Frames frames_of(const SpaceTimeSeries& s) {
  Frames out(s.frames());
  for (std::size_t m = 0; m < s.frames(); ++m) out[m].assign(s.frame(m).begin(), s.frame(m).end());
  return out;
}

void require_same_mesh(const SpaceTimeSeries& a, const SpaceTimeSeries& b, const char* what) {
  if (a.frames() != b.frames() || a.grid().size() != b.grid().size()) {
    throw std::invalid_argument(std::string(what) + ": fields live on different meshes");
  }
}

// Backward Euler on the raw frames; frame 0 of f is ignored.
struct RawHeat {
  Frames v, dvdt, lap;
};

RawHeat heat_raw(const TimeMesh& mesh, double m, const Frames& f) {
  const std::size_t n = mesh.grid.size();
  const double dt = mesh.dt();
  RawHeat r;
  r.v.assign(mesh.steps + 1, std::vector<double>(n, 0.0));
  r.dvdt.assign(mesh.steps + 1, std::vector<double>(n, 0.0));
  r.lap.assign(mesh.steps + 1, std::vector<double>(n, 0.0));
  std::vector<double> scratch(n);
  for (std::size_t k = 1; k <= mesh.steps; ++k) {
    auto& v = r.v[k];
    for (std::size_t j = 0; j < n; ++j) v[j] = r.v[k - 1][j] + dt * f[k][j];
    solve_shifted_laplacian(mesh.grid, dt * m, v, scratch);
    for (std::size_t j = 0; j < n; ++j) r.dvdt[k][j] = (v[j] - r.v[k - 1][j]) / dt;
    laplacian_apply(mesh.grid, v, r.lap[k]);
  }
  return r;
}

double lq_frames(const TimeMesh& mesh, const Frames& g, double q) {
  double s = 0.0;
  for (std::size_t k = 1; k <= mesh.steps; ++k)
    for (double x : g[k]) s += std::pow(std::abs(x), q);
  return std::pow(s * mesh.grid.h() * mesh.dt(), 1.0 / q);
}

double z_frames(const TimeMesh& mesh, const Frames& dvdt, const Frames& lap, double m, double q) {
  const double a = lq_frames(mesh, dvdt, q);
  const double b = lq_frames(mesh, lap, q);
  return std::pow(std::pow(a, q) + std::pow(m, q) * std::pow(b, q), 1.0 / q);
}

double ratio_frames(const TimeMesh& mesh, double m, double q, const Frames& f) {
  const double fn = lq_frames(mesh, f, q);
  if (!(fn > 0.0)) throw std::invalid_argument("k_ratio: forcing vanishes");
  const auto r = heat_raw(mesh, m, f);
  return z_frames(mesh, r.dvdt, r.lap, m, q) / fn;
}

Frames random_smooth(const TimeMesh& mesh, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  constexpr int kx = 6, kt = 4;
  double coef[kx][kt];
  for (auto& row : coef)
    for (double& c : row) c = normal(rng);
  Frames f(mesh.steps + 1, std::vector<double>(mesh.grid.size()));
  for (std::size_t m = 0; m <= mesh.steps; ++m) {
    const double t = mesh.t(m) / mesh.T;
    for (std::size_t j = 0; j < mesh.grid.size(); ++j) {
      const double x = mesh.grid.x(j);
      double s = 0.0;
      for (int a = 0; a < kx; ++a)
        for (int b = 0; b < kt; ++b)
          s += coef[a][b] * std::cos(a * std::numbers::pi * x) * std::cos(b * std::numbers::pi * t);
      f[m][j] = s;
    }
  }
  return f;
}

Frames random_blocks(const TimeMesh& mesh, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  std::uniform_int_distribution<int> pick(0, 3);
  const std::size_t bx = std::size_t{1} << pick(rng);
  const std::size_t bt = std::size_t{1} << pick(rng);
  const std::size_t nbx = (mesh.grid.size() + bx - 1) / bx;
  const std::size_t nbt = (mesh.steps + bt - 1) / bt;
  std::vector<double> vals(nbx * nbt);
  for (double& v : vals) v = normal(rng);
  Frames f(mesh.steps + 1, std::vector<double>(mesh.grid.size(), 0.0));
  for (std::size_t m = 1; m <= mesh.steps; ++m)
    for (std::size_t j = 0; j < mesh.grid.size(); ++j) f[m][j] = vals[((m - 1) / bt) * nbx + j / bx];
  return f;
}

// Adjoint of f -> (dv/dt, m Lv) with respect to the plain Euclidean product
// over frames 1..steps.
Frames heat_adjoint(const TimeMesh& mesh, double m, const Frames& g, const Frames& w) {
  const std::size_t n = mesh.grid.size();
  const std::size_t K = mesh.steps;
  const double dt = mesh.dt();
  Frames out(K + 1, std::vector<double>(n, 0.0));
  std::vector<double> z(n, 0.0), lw(n), scratch(n);
  for (std::size_t k = K; k >= 1; --k) {
    laplacian_apply(mesh.grid, w[k], lw);
    for (std::size_t j = 0; j < n; ++j) {
      const double gnext = k < K ? g[k + 1][j] : 0.0;
      z[j] += (g[k][j] - gnext) / dt + m * lw[j];
    }
    solve_shifted_laplacian(mesh.grid, dt * m, z, scratch);
    for (std::size_t j = 0; j < n; ++j) out[k][j] = dt * z[j];
  }
  return out;
}

double sum_sq(const Frames& f) {
  double s = 0.0;
  for (std::size_t k = 1; k < f.size(); ++k)
    for (double x : f[k]) s += x * x;
  return s;
}

double power_iteration(const TimeMesh& mesh, double m, std::size_t iters, std::mt19937_64& rng) {
  Frames f = random_blocks(mesh, rng);
  auto smooth = random_smooth(mesh, rng);
  for (std::size_t k = 1; k <= mesh.steps; ++k)
    for (std::size_t j = 0; j < f[k].size(); ++j) f[k][j] += smooth[k][j];
  double best = 0.0;
  for (std::size_t it = 0; it < iters; ++it) {
    const double nf = std::sqrt(sum_sq(f));
    for (auto& fr : f)
      for (double& x : fr) x /= nf;
    auto r = heat_raw(mesh, m, f);
    for (auto& fr : r.lap)
      for (double& x : fr) x *= m;
    const double rayleigh = std::sqrt(sum_sq(r.dvdt) + sum_sq(r.lap));
    const double prev = best;
    best = std::max(best, rayleigh);
    f = heat_adjoint(mesh, m, r.dvdt, r.lap);
    if (it > 0 && std::abs(best - prev) <= 1e-14 * best) break;
  }
  return best;
}

}  // namespace

TimeMesh::TimeMesh(std::size_t cells, std::size_t steps_, double T_) : grid(cells), steps(steps_), T(T_) {
  if (steps == 0) throw std::invalid_argument("TimeMesh: need at least one step");
  if (!(T > 0.0)) throw std::invalid_argument("TimeMesh: need T > 0");
}

SpaceTimeSeries sample_field(const TimeMesh& mesh, const std::function<double(double, double)>& fn) {
  Frames f(mesh.steps + 1, std::vector<double>(mesh.grid.size()));
  for (std::size_t m = 0; m <= mesh.steps; ++m)
    for (std::size_t j = 0; j < mesh.grid.size(); ++j) f[m][j] = fn(mesh.t(m), mesh.grid.x(j));
  return to_series(mesh, std::move(f));
}

SpaceTimeSeries zero_field(const TimeMesh& mesh) {
  return to_series(mesh, Frames(mesh.steps + 1, std::vector<double>(mesh.grid.size(), 0.0)));
}

TimeMesh mesh_of(const SpaceTimeSeries& s) {
  if (s.frames() < 2) throw std::invalid_argument("mesh_of: need at least two frames");
  const auto& t = s.times();
  if (std::abs(t[0]) > 0.0) throw std::invalid_argument("mesh_of: first frame must be at t = 0");
  const std::size_t steps = s.frames() - 1;
  const double T = t.back();
  const double dt = T / static_cast<double>(steps);
  for (std::size_t m = 1; m <= steps; ++m) {
    if (std::abs((t[m] - t[m - 1]) - dt) > 1e-9 * dt) {
      throw std::invalid_argument("mesh_of: time steps are not uniform");
    }
  }
  return TimeMesh(s.grid().size(), steps, T);
}

SpaceTimeSeries random_forcing(const TimeMesh& mesh, std::uint64_t seed, std::size_t index) {
  std::mt19937_64 rng(seed);
  rng.discard(index);
  std::mt19937_64 stream(rng());
  return to_series(mesh, index % 2 == 0 ? random_smooth(mesh, stream) : random_blocks(mesh, stream));
}

double lq_norm(const SpaceTimeSeries& g, double q) {
  check_exponent(q);
  return lp_norm_spacetime(g, q, TimeQuadrature::RightPoint);
}

HeatSolution solve_heat_forced(double m, const SpaceTimeSeries& f) {
  if (!(m > 0.0)) throw std::invalid_argument("solve_heat_forced: need m > 0");
  const TimeMesh mesh = mesh_of(f);
  auto r = heat_raw(mesh, m, frames_of(f));
  return {to_series(mesh, std::move(r.v)), to_series(mesh, std::move(r.dvdt)),
          to_series(mesh, std::move(r.lap))};
}

double z_norm(const SpaceTimeSeries& dvdt, const SpaceTimeSeries& lap, double m, double q) {
  check_exponent(q);
  require_same_mesh(dvdt, lap, "z_norm");
  const double a = lq_norm(dvdt, q);
  const double b = lq_norm(lap, q);
  return std::pow(std::pow(a, q) + std::pow(m, q) * std::pow(b, q), 1.0 / q);
}

double k_ratio(double m, double q, const SpaceTimeSeries& f) {
  check_exponent(q);
  if (!(m > 0.0)) throw std::invalid_argument("k_ratio: need m > 0");
  return ratio_frames(mesh_of(f), m, q, frames_of(f));
}

KEstimate estimate_K(double m, double q, const SamplerConfig& cfg) {
  check_exponent(q);
  if (!(m > 0.0)) throw std::invalid_argument("estimate_K: need m > 0");
  const TimeMesh mesh(cfg.cells, cfg.steps, cfg.T);
  KEstimate est;
  est.m = m;
  est.q = q;
  est.cells = cfg.cells;
  est.steps = cfg.steps;
  est.T = cfg.T;

  Frames witness(mesh.steps + 1, std::vector<double>(mesh.grid.size(), 1.0));
  est.witness_ratio = ratio_frames(mesh, m, q, witness);
  est.ratios.push_back(est.witness_ratio);

  std::mt19937_64 rng(cfg.seed);
  for (std::size_t s = 0; s < cfg.samples; ++s) {
    const Frames f = s % 2 == 0 ? random_smooth(mesh, rng) : random_blocks(mesh, rng);
    est.ratios.push_back(ratio_frames(mesh, m, q, f));
  }
  est.sample_count = est.ratios.size();
  est.estimate = *std::max_element(est.ratios.begin(), est.ratios.end());
  if (q == 2.0 && cfg.power_iterations > 0) {
    est.power_iteration_ratio = power_iteration(mesh, m, cfg.power_iterations, rng);
    est.estimate = std::max(est.estimate, *est.power_iteration_ratio);
  }
  return est;
}

ClosenessReport check_closeness(double a, double b, double p, const SamplerConfig& cfg) {
  if (!(a > 0.0) || !(b >= a)) throw std::invalid_argument("check_closeness: need 0 < a <= b");
  if (!(p > 1.0) || std::isinf(p)) throw std::invalid_argument("check_closeness: need 1 < p < inf");
  ClosenessReport r{};
  r.a = a;
  r.b = b;
  r.p = p;
  r.p_conjugate = p / (p - 1.0);
  r.m = 0.5 * (a + b);
  r.heuristic = std::abs(r.p_conjugate - 2.0) > 1e-12;
  r.k_estimate = estimate_K(r.m, r.p_conjugate, cfg).estimate;
  r.k_hat = r.heuristic ? r.k_estimate : 1.0;
  r.lhs = (b - a) / (b + a) * r.k_hat;
  r.satisfied = r.lhs < 1.0;
  return r;
}

EnergyReport energy_identity_check(double m, const SpaceTimeSeries& f) {
  const auto sol = solve_heat_forced(m, f);
  const Grid1D& g = f.grid();
  const double dt = mesh_of(f).dt();
  EnergyReport r{};
  std::vector<double> inc(g.size());
  for (std::size_t k = 1; k < sol.v.frames(); ++k) {
    r.lhs += inner_product(g, sol.dvdt.frame(k), sol.laplacian.frame(k)) * dt;
    for (std::size_t j = 0; j < g.size(); ++j) inc[j] = sol.v.frame(k)[j] - sol.v.frame(k - 1)[j];
    r.increment_term -= 0.5 * gradient_norm_sq(g, inc);
  }
  r.final_gradient = -0.5 * gradient_norm_sq(g, sol.v.frame(sol.v.frames() - 1));
  r.matched = r.final_gradient + r.increment_term;
  r.sign_ok = r.lhs <= 0.0;
  return r;
}

ContractionResult solve_dual_contraction(const DualProblem& prob, const ContractionOptions& opt) {
  check_exponent(prob.q);
  if (!(prob.a > 0.0) || !(prob.b >= prob.a)) {
    throw std::invalid_argument("solve_dual_contraction: need 0 < a <= b");
  }
  require_same_mesh(prob.M, prob.f, "solve_dual_contraction");
  const TimeMesh mesh = mesh_of(prob.f);
  const std::size_t n = mesh.grid.size();
  const std::size_t K = mesh.steps;
  const double slack = 1e-12 * prob.b;
  for (std::size_t k = 1; k <= K; ++k) {
    for (double x : prob.M.frame(k)) {
      if (x < prob.a - slack || x > prob.b + slack) {
        throw std::invalid_argument("solve_dual_contraction: M outside [a, b]");
      }
    }
  }
  const double mbar = 0.5 * (prob.a + prob.b);
  const Frames M = frames_of(prob.M);
  const Frames f = frames_of(prob.f);
  const double fnorm = lq_frames(mesh, f, prob.q);

  ContractionResult res{zero_field(mesh), 0, {}, 0.0, 0.0, 0.0, 0.0, false};
  res.closeness_heuristic = prob.q != 2.0;
  double k_hat = 1.0;
  if (opt.k_hat) {
    k_hat = *opt.k_hat;
  } else if (prob.q != 2.0) {
    SamplerConfig sc = opt.sampler;
    sc.cells = n;
    sc.steps = K;
    sc.T = mesh.T;
    k_hat = estimate_K(mbar, prob.q, sc).estimate;
  }
  res.contraction_bound = (prob.b - prob.a) / (2.0 * mbar) * k_hat;

  // current iterate with its time differences and Laplacians
  RawHeat cur;
  cur.v.assign(K + 1, std::vector<double>(n, 0.0));
  cur.dvdt = cur.v;
  cur.lap = cur.v;
  if (opt.initial) {
    if (opt.initial->frames() != K + 1 || opt.initial->grid().size() != n) {
      throw std::invalid_argument("solve_dual_contraction: initial iterate on a different mesh");
    }
    cur.v = frames_of(*opt.initial);
    for (double x : cur.v[0]) {
      if (x != 0.0) throw std::invalid_argument("solve_dual_contraction: initial iterate must vanish at t = 0");
    }
    for (std::size_t k = 1; k <= K; ++k) {
      for (std::size_t j = 0; j < n; ++j) cur.dvdt[k][j] = (cur.v[k][j] - cur.v[k - 1][j]) / mesh.dt();
      laplacian_apply(mesh.grid, cur.v[k], cur.lap[k]);
    }
  }

  auto residual_of = [&](const RawHeat& s) {
    Frames r(K + 1, std::vector<double>(n, 0.0));
    for (std::size_t k = 1; k <= K; ++k)
      for (std::size_t j = 0; j < n; ++j) r[k][j] = s.dvdt[k][j] - M[k][j] * s.lap[k][j] - f[k][j];
    return lq_frames(mesh, r, prob.q);
  };

  const double noise = 1e-9 * std::max(fnorm, 1e-300);
  Frames forcing(K + 1, std::vector<double>(n, 0.0));
  Frames dd(K + 1, std::vector<double>(n, 0.0)), dl = dd;
  bool converged = false;
  for (std::size_t it = 1; it <= opt.max_iterations; ++it) {
    for (std::size_t k = 1; k <= K; ++k)
      for (std::size_t j = 0; j < n; ++j) forcing[k][j] = f[k][j] - (mbar - M[k][j]) * cur.lap[k][j];
    RawHeat next = heat_raw(mesh, mbar, forcing);
    for (std::size_t k = 1; k <= K; ++k) {
      for (std::size_t j = 0; j < n; ++j) {
        dd[k][j] = next.dvdt[k][j] - cur.dvdt[k][j];
        dl[k][j] = next.lap[k][j] - cur.lap[k][j];
      }
    }
    const double upd = z_frames(mesh, dd, dl, mbar, prob.q);
    if (!res.update_norms.empty() && res.update_norms.back() > noise) {
      res.observed_ratio = std::max(res.observed_ratio, upd / res.update_norms.back());
    }
    res.update_norms.push_back(upd);
    cur = std::move(next);
    res.iterations = it;
    res.residual = residual_of(cur);
    if (!std::isfinite(upd) || (res.update_norms.size() > 1 && upd > 1e8 * res.update_norms.front() + noise)) {
      throw ContractionDiverged("solve_dual_contraction: iteration diverges", res.observed_ratio);
    }
    if (res.residual <= opt.rtol * fnorm || upd == 0.0) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    throw ContractionDiverged("solve_dual_contraction: no convergence within " +
                                  std::to_string(opt.max_iterations) + " iterations",
                              res.observed_ratio);
  }
  res.residual_relative = fnorm > 0.0 ? res.residual / fnorm : res.residual;
  res.u = to_series(mesh, std::move(cur.v));
  return res;
}

CoefficientPattern parse_pattern(const std::string& name) {
  if (name == "constant") return CoefficientPattern::Constant;
  if (name == "checkerboard") return CoefficientPattern::Checkerboard;
  if (name == "random-two-valued" || name == "random") return CoefficientPattern::RandomTwoValued;
  throw std::invalid_argument("unknown coefficient pattern '" + name +
                              "' (expected constant, checkerboard or random-two-valued)");
}

SpaceTimeSeries make_coefficient(const TimeMesh& mesh, CoefficientPattern pattern, double a,
                                 double b, std::size_t block, std::uint64_t seed) {
  if (!(a > 0.0) || !(b >= a)) throw std::invalid_argument("make_coefficient: need 0 < a <= b");
  if (block == 0) throw std::invalid_argument("make_coefficient: block must be >= 1");
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(0.5);
  Frames M(mesh.steps + 1, std::vector<double>(mesh.grid.size(), a));
  for (std::size_t m = 1; m <= mesh.steps; ++m) {
    for (std::size_t j = 0; j < mesh.grid.size(); ++j) {
      switch (pattern) {
        case CoefficientPattern::Constant:
          M[m][j] = 0.5 * (a + b);
          break;
        case CoefficientPattern::Checkerboard:
          M[m][j] = ((m - 1) / block + j / block) % 2 == 0 ? a : b;
          break;
        case CoefficientPattern::RandomTwoValued:
          M[m][j] = coin(rng) ? b : a;
          break;
      }
    }
  }
  return to_series(mesh, std::move(M));
}

PairingReport dual_pairing_check(const SpaceTimeSeries& rho, const SpaceTimeSeries& M,
                                 const SpaceTimeSeries& phi) {
  require_same_mesh(rho, M, "dual_pairing_check");
  require_same_mesh(rho, phi, "dual_pairing_check");
  const TimeMesh mesh = mesh_of(rho);
  const std::size_t K = mesh.steps;
  const double tau = mesh.dt();

  double a = M.frame(1)[0], b = a;
  for (std::size_t k = 1; k <= K; ++k) {
    for (double x : M.frame(k)) {
      a = std::min(a, x);
      b = std::max(b, x);
    }
  }
  // time reversal: frame m of the forward problem is index K + 1 - m
  Frames Mr(K + 1, std::vector<double>(mesh.grid.size(), a));
  Frames fr(K + 1, std::vector<double>(mesh.grid.size(), 0.0));
  for (std::size_t m = 1; m <= K; ++m) {
    const auto mk = M.frame(K + 1 - m);
    const auto pk = phi.frame(K + 1 - m);
    Mr[m].assign(mk.begin(), mk.end());
    fr[m].assign(pk.begin(), pk.end());
  }
  DualProblem prob{to_series(mesh, std::move(Mr)), to_series(mesh, std::move(fr)), 2.0, a, b};
  ContractionOptions opt;
  opt.max_iterations = 2000;
  const auto sol = solve_dual_contraction(prob, opt);

  PairingReport r{};
  for (std::size_t k = 1; k <= K; ++k) r.lhs += tau * inner_product(mesh.grid, rho.frame(k), phi.frame(k));
  r.rhs = inner_product(mesh.grid, rho.frame(0), sol.u.frame(K));
  r.relative_error = std::abs(r.lhs - r.rhs) / std::max({std::abs(r.lhs), std::abs(r.rhs), 1e-300});
  r.iterations = sol.iterations;
  return r;
}

}  // namespace coagdiff
