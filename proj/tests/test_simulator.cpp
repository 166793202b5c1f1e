#include <omp.h>

#include <cmath>
#include <numbers>

#include "doctest.h"

#include "coagdiff/simulator.hpp"

using namespace coagdiff;

namespace {

SimConfig homogeneous_constant(double c0, std::size_t n, double T, double dt) {
  SimConfig cfg;
  cfg.kernel = KernelSpec::constant(c0);
  cfg.n = n;
  cfg.cells = 1;
  cfg.T = T;
  cfg.dt = dt;
  cfg.initial.family = InitialData::Family::Monodisperse;
  cfg.initial.rho0 = 1.0;
  cfg.store_states = true;
  cfg.output_stride = 1000000;
  return cfg;
}

SimConfig small_spatial() {
  SimConfig cfg;
  cfg.kernel = KernelSpec::sum_power(1.0, 0.5);
  cfg.diffusion = DiffusionProfile::limit(0.5, 1.0, 1.0);
  cfg.n = 48;
  cfg.cells = 16;
  cfg.T = 0.2;
  cfg.dt = 2e-3;
  cfg.initial.family = InitialData::Family::Geometric;
  cfg.initial.amplitude = 0.6;
  cfg.store_states = true;
  cfg.output_stride = 10;
  return cfg;
}

}  // namespace

TEST_CASE("zero state is a fixed point") {
  SimConfig cfg = small_spatial();
  const CoagulationOperator op(cfg.kernel, cfg.n);
  ClusterField s(cfg.n, cfg.cells);
  strang_step(s, op, cfg);
  for (double v : s.values()) CHECK(v == 0.0);
}

TEST_CASE("rk4 single-pair step matches the Riccati solution") {
  const double a = 3.0;
  const CoagulationOperator op(KernelSpec::constant(a), 2);
  ReactionWorkspace ws(op);
  std::vector<double> c{1.0, 0.0};
  const double dt = 0.01;
  for (int s = 0; s < 100; ++s) reaction_step_cell(c, op, dt, ReactionScheme::ExplicitRK4, 1e-14, ws);
  CHECK(c[0] == doctest::Approx(1.0 / (1.0 + a)).epsilon(1e-8));
  CHECK(c[0] + 2.0 * c[1] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("rk4 step rejection") {
  const CoagulationOperator op(KernelSpec::constant(50.0), 4);
  ReactionWorkspace ws(op);
  std::vector<double> c{1.0, 0.0, 0.0, 0.0};
  CHECK_THROWS_AS(reaction_step_cell(c, op, 0.5, ReactionScheme::ExplicitRK4, 1e-14, ws), StepRejected);
}

TEST_CASE("homogeneous constant kernel matches the exact solution") {
  const auto cfg = homogeneous_constant(2.0, 512, 1.0, 1e-3);
  const auto rec = run(cfg);
  const auto& last = rec.states.back();
  CHECK(last.t == 1.0);
  const double t = 1.0;
  const double rho0 = 1.0 / (1.0 + t);
  double num0 = 0.0;
  for (double v : last.cell(0)) num0 += v;
  CHECK(std::abs(num0 - rho0) <= 1e-9);
  for (std::size_t k = 1; k <= 10; ++k) {
    const double exact = std::pow(t, double(k - 1)) / std::pow(1.0 + t, double(k + 1));
    CHECK(last.at(k, 0) == doctest::Approx(exact).epsilon(1e-8));
  }
  CHECK(rec.mass_drift_relative() <= 1e-12);
  for (std::size_t s = 1; s < rec.moment_integrals.at(0.0).size(); ++s)
    CHECK(rec.moment_integrals.at(0.0)[s] <= rec.moment_integrals.at(0.0)[s - 1]);
}

TEST_CASE("semi-implicit scheme conserves mass and stays positive on stiff steps") {
  auto cfg = homogeneous_constant(50.0, 32, 1.0, 0.25);
  cfg.scheme = ReactionScheme::SemiImplicitLoss;
  const auto rec = run(cfg);
  CHECK(rec.mass_drift_relative() <= 1e-12);
  for (double v : rec.states.back().values()) CHECK(v >= 0.0);
}

TEST_CASE("geometric initial data") {
  SimConfig cfg;
  cfg.n = 10000;
  cfg.cells = 1;
  cfg.initial.family = InitialData::Family::Geometric;
  cfg.initial.ratio = 0.5;
  const auto s = make_initial_state(cfg);
  CHECK(moment_field(s, 1.0)[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(moment_field(s, 2.0)[0] == doctest::Approx(2.0).epsilon(1e-12));
  cfg.initial.ratio = 1.0;
  CHECK_THROWS_AS(make_initial_state(cfg), std::invalid_argument);
}

TEST_CASE("zero kernel reduces to independent heat equations") {
  SimConfig cfg;
  cfg.kernel = KernelSpec::constant(0.0);
  cfg.diffusion = DiffusionProfile::constant(0.8);
  cfg.n = 4;
  cfg.cells = 32;
  cfg.dt = 1e-3;
  cfg.T = 0.1;
  cfg.initial.family = InitialData::Family::Monodisperse;
  cfg.initial.rho0 = 1.0;
  cfg.initial.amplitude = 0.3;
  cfg.store_states = true;
  cfg.output_stride = 1000;
  const auto rec = run(cfg);
  const Grid1D g(cfg.cells);
  const double lam = laplacian_eigenvalue(g, 1);
  const double factor = std::pow(1.0 + 0.5 * cfg.dt * 0.8 * lam, -2.0);
  const double amp = 0.3 * std::pow(factor, 100.0);
  const auto& last = rec.states.back();
  for (std::size_t j = 0; j < cfg.cells; ++j) {
    CHECK(last.at(1, j) == doctest::Approx(1.0 + amp * std::cos(std::numbers::pi * g.x(j))).epsilon(1e-12));
    CHECK(last.at(2, j) == 0.0);
  }
}

TEST_CASE("spatially uniform data reproduces the homogeneous run") {
  SimConfig cfg = small_spatial();
  cfg.initial.amplitude = 0.0;
  const auto spatial = run(cfg);
  cfg.cells = 1;
  const auto homog = run(cfg);
  const auto& a = spatial.states.back();
  const auto& b = homog.states.back();
  for (std::size_t j = 0; j < a.cells(); ++j)
    for (std::size_t i = 1; i <= cfg.n; ++i)
      REQUIRE(std::abs(a.at(i, j) - b.at(i, 0)) <= 1e-12 * (b.at(1, 0) + 1e-300));
}

TEST_CASE("spatial run invariants") {
  const auto cfg = small_spatial();
  const auto rec = run(cfg);
  CHECK(rec.mass_drift_relative() <= 1e-12);
  CHECK(rec.times.size() == 101);
  CHECK(rec.times.back() == cfg.T);
  CHECK(rec.output_times.size() == 11);
  for (const auto& s : rec.states)
    for (double v : s.values()) CHECK(v >= -1e-14);
  for (std::size_t s = 1; s < rec.moment_integrals.at(0.0).size(); ++s)
    CHECK(rec.moment_integrals.at(0.0)[s] <= rec.moment_integrals.at(0.0)[s - 1] * (1 + 1e-14));
  CHECK(rec.moment_norms.count({1.0, 2.0}) == 1);
  CHECK(rec.species_sup.size() == 8);
  const auto series = rec.moment_series(1.0);
  CHECK(series.frames() == rec.output_times.size());
  CHECK_THROWS_AS(rec.moment_series(7.0), std::out_of_range);
}

TEST_CASE("T = 0 returns the initial state") {
  auto cfg = small_spatial();
  cfg.T = 0.0;
  const auto rec = run(cfg);
  REQUIRE(rec.states.size() == 1);
  const auto init = make_initial_state(cfg);
  for (std::size_t k = 0; k < init.values().size(); ++k) CHECK(rec.states[0].values()[k] == init.values()[k]);
  CHECK(rec.times == std::vector<double>{0.0});
}

TEST_CASE("results do not depend on the thread count") {
  const auto cfg = small_spatial();
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const auto one = run(cfg);
  omp_set_num_threads(4);
  const auto four = run(cfg);
  omp_set_num_threads(saved);
  const auto a = one.states.back().values();
  const auto b = four.states.back().values();
  REQUIRE(a.size() == b.size());
  for (std::size_t k = 0; k < a.size(); ++k) REQUIRE(a[k] == b[k]);
  CHECK(one.mass == four.mass);
}

TEST_CASE("solver abort carries the partial record") {
  auto cfg = homogeneous_constant(50.0, 16, 1.0, 0.5);
  cfg.cells = 4;
  cfg.rk4_rate_cap = 1e9;
  cfg.max_halvings = 0;
  try {
    run(cfg);
    FAIL("expected SolverAbort");
  } catch (const SolverAbort& e) {
    REQUIRE(e.partial());
    CHECK(e.partial()->times.size() == 1);
    CHECK(std::string(e.what()).find("solver abort") != std::string::npos);
  }
}

TEST_CASE("halving rescues stiff steps") {
  auto cfg = homogeneous_constant(50.0, 16, 1.0, 0.5);
  cfg.rk4_rate_cap = 1e9;
  const auto rec = run(cfg);
  CHECK(rec.rejected_steps > 0);
  CHECK(rec.mass_drift_relative() <= 1e-12);
}

TEST_CASE("moment fields and averaged diffusivity") {
  ClusterField s(4, 2);
  s.at(1, 0) = 1.0;
  s.at(2, 0) = 2.0;
  s.at(4, 0) = 1.0;
  CHECK(moment_field(s, 0.0) == std::vector<double>{4.0, 0.0});
  CHECK(moment_field(s, 1.0) == std::vector<double>{9.0, 0.0});
  CHECK(tail_moment_field(s, 1.0, 2) == std::vector<double>{8.0, 0.0});
  CHECK_THROWS(tail_moment_field(s, 1.0, 5));

  const auto d = DiffusionProfile::limit(1.0, 2.0, 1.0);
  const auto m = averaged_diffusivity_field(s, d, 1.0, 2);
  CHECK(m[0] == doctest::Approx((4.0 * 2.0 + 4.0 * 1.5) / 8.0));
  CHECK(m[1] == d.limit_value());
  const auto flat = averaged_diffusivity_field(s, DiffusionProfile::constant(0.3), 2.0, 1);
  CHECK(flat[0] == doctest::Approx(0.3));
  for (double v : averaged_diffusivity_field(s, d, 1.0, 1)) {
    CHECK(v >= d.tail_inf(1) - 1e-15);
    CHECK(v <= d.tail_sup(1) + 1e-15);
  }
  CHECK(domain_integral(s, moment_field(s, 1.0)) == 4.5);
}

TEST_CASE("psi bounds") {
  ClusterField s(4, 1);
  s.at(1, 0) = 1.0;
  s.at(2, 0) = 1.0;
  s.at(3, 0) = 5.0;
  const auto b = psi_bounds(s, 3, 1.0);
  CHECK(b.mu1 == 10.0);
  CHECK(b.mu2 == 30.0);
  CHECK_THROWS(psi_bounds(s, 1, 1.0));
}

TEST_CASE("diffusion profiles") {
  const auto d = DiffusionProfile::limit(1.0, 1.0, 1.0);
  CHECK(d(1) == 2.0);
  CHECK(d(4) == 1.25);
  CHECK(d.limit_value() == 1.0);
  CHECK(d.delta() == 1.0);
  CHECK(d.D() == 2.0);
  CHECK(d.default_tail_index(0.05, 1000) == 10);
  CHECK(DiffusionProfile::constant(2.0).default_tail_index(0.05, 10) == 1);
  CHECK_THROWS(DiffusionProfile::constant(0.0));
}

TEST_CASE("config validation") {
  auto cfg = small_spatial();
  cfg.dt = 0.0;
  CHECK_THROWS_AS(run(cfg), std::invalid_argument);
  cfg = small_spatial();
  cfg.tail_index = 0;
  CHECK_THROWS_AS(run(cfg), std::invalid_argument);
  cfg = small_spatial();
  cfg.norm_exponents = {0.5};
  CHECK_THROWS_AS(run(cfg), std::invalid_argument);
}
