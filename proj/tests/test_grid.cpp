#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"

#include "coagdiff/grid.hpp"

using namespace coagdiff;
using std::numbers::pi;

namespace {

std::vector<double> random_vec(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

std::vector<double> cos_mode(const Grid1D& g, int k) {
  std::vector<double> v(g.size());
  for (std::size_t j = 0; j < g.size(); ++j) v[j] = std::cos(k * pi * g.x(j));
  return v;
}

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

TEST_CASE("grid geometry") {
  const Grid1D g(4);
  CHECK(g.h() == 0.25);
  CHECK(g.x(0) == 0.125);
  CHECK(g.x(3) == 0.875);
  CHECK(g.nodes().size() == 4);
  CHECK_THROWS(Grid1D(1));
}

TEST_CASE("laplacian of constants vanishes") {
  const Grid1D g(10);
  const std::vector<double> one(10, 3.5);
  CHECK(max_abs(laplacian_apply(g, one)) == 0.0);
}

TEST_CASE("laplacian hand example") {
  const Grid1D g(3);
  const auto l = laplacian_apply(g, std::vector<double>{1.0, 0.0, 0.0});
  CHECK(l[0] == doctest::Approx(-9.0));
  CHECK(l[1] == doctest::Approx(9.0));
  CHECK(l[2] == 0.0);
}

TEST_CASE("cosine modes are eigenvectors") {
  for (std::size_t n : {5, 16, 64}) {
    const Grid1D g(n);
    for (int k = 0; k < int(n); ++k) {
      const auto v = cos_mode(g, k);
      const auto l = laplacian_apply(g, v);
      const double lam = laplacian_eigenvalue(g, k);
      CHECK(lam == doctest::Approx(2.0 / (g.h() * g.h()) * (1.0 - std::cos(k * pi * g.h()))));
      for (std::size_t j = 0; j < n; ++j) REQUIRE(std::abs(l[j] + lam * v[j]) <= 1e-10 * (1.0 + lam));
    }
  }
}

TEST_CASE("laplacian is symmetric with zero column sums") {
  const std::size_t n = 9;
  const Grid1D g(n);
  std::vector<double> matrix(n * n);
  for (std::size_t c = 0; c < n; ++c) {
    std::vector<double> e(n, 0.0);
    e[c] = 1.0;
    const auto col = laplacian_apply(g, e);
    for (std::size_t r = 0; r < n; ++r) matrix[r * n + c] = col[r];
  }
  for (std::size_t r = 0; r < n; ++r) {
    double row = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      CHECK(matrix[r * n + c] == matrix[c * n + r]);
      row += matrix[r * n + c];
    }
    CHECK(std::abs(row) <= 1e-12);
  }
}

TEST_CASE("summation by parts") {
  const Grid1D g(37);
  const auto u = random_vec(37, 1), v = random_vec(37, 2);
  const auto lu = laplacian_apply(g, u), lv = laplacian_apply(g, v);
  CHECK(inner_product(g, lu, v) == doctest::Approx(inner_product(g, u, lv)).epsilon(1e-12));
  CHECK(inner_product(g, lu, u) == doctest::Approx(-gradient_norm_sq(g, u)).epsilon(1e-12));
}

TEST_CASE("shifted solve inverts I - kL") {
  const Grid1D g(50);
  const auto x = random_vec(50, 3);
  const double k = 0.01;
  const auto lx = laplacian_apply(g, x);
  std::vector<double> rhs(50), scratch(50);
  for (std::size_t j = 0; j < 50; ++j) rhs[j] = x[j] - k * lx[j];
  solve_shifted_laplacian(g, k, rhs, scratch);
  for (std::size_t j = 0; j < 50; ++j) CHECK(rhs[j] == doctest::Approx(x[j]).epsilon(1e-10));
}

TEST_CASE("backward Euler heat step") {
  const Grid1D g(32);
  const std::vector<double> c(32, 2.0);
  for (double v : heat_step_be(g, c, 1.5, 0.1)) CHECK(v == doctest::Approx(2.0).epsilon(1e-14));

  const auto m = cos_mode(g, 3);
  const double d = 0.7, dt = 0.01;
  const auto next = heat_step_be(g, m, d, dt);
  const double factor = 1.0 / (1.0 + dt * d * laplacian_eigenvalue(g, 3));
  for (std::size_t j = 0; j < 32; ++j) CHECK(next[j] == doctest::Approx(factor * m[j]).epsilon(1e-10));

  auto u = random_vec(32, 4);
  for (auto& x : u) x = std::abs(x);
  double before = 0.0;
  for (double x : u) before += x * g.h();
  double sup = max_abs(u);
  for (int s = 0; s < 20; ++s) {
    u = heat_step_be(g, u, 1.0, 1e-3);
    double after = 0.0;
    for (double x : u) after += x * g.h();
    CHECK(std::abs(after - before) <= 1e-13);
    CHECK(max_abs(u) <= sup * (1 + 1e-15));
    sup = max_abs(u);
    for (double x : u) CHECK(x >= 0.0);
  }
}

TEST_CASE("heat step converges at second order with dt ~ h^2") {
  const double T = 0.05;
  std::vector<double> errs;
  for (std::size_t n : {16, 32, 64}) {
    const Grid1D g(n);
    const double h = g.h();
    const std::size_t steps = std::size_t(std::llround(T / (h * h)));
    const double dt = T / double(steps);
    auto u = cos_mode(g, 1);
    for (std::size_t s = 0; s < steps; ++s) u = heat_step_be(g, u, 1.0, dt);
    double err = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      err = std::max(err, std::abs(u[j] - std::exp(-pi * pi * T) * std::cos(pi * g.x(j))));
    errs.push_back(err);
  }
  for (std::size_t r = 1; r < errs.size(); ++r) CHECK(std::log2(errs[r - 1] / errs[r]) >= 1.9);
}

TEST_CASE("spatial norms") {
  const Grid1D g(8);
  const std::vector<double> one(8, 1.0);
  CHECK(lp_norm_space(g, one, 1.0) == doctest::Approx(1.0));
  CHECK(lp_norm_space(g, one, 3.0) == doctest::Approx(1.0));
  CHECK(lp_norm_space(g, one, p_infinity) == 1.0);
  std::vector<double> spike(8, 0.0);
  spike[5] = 2.0;
  CHECK(lp_norm_space(g, spike, 2.0) == doctest::Approx(2.0 * std::sqrt(g.h())));
  CHECK(lp_norm_space(g, spike, p_infinity) == 2.0);
  auto neg = spike;
  neg[5] = -2.0;
  CHECK(lp_norm_space(g, neg, 2.0) == lp_norm_space(g, spike, 2.0));
}

TEST_CASE("space-time norms") {
  const Grid1D g(400);
  SpaceTimeSeries s(g);
  std::vector<double> x(400);
  for (std::size_t j = 0; j < 400; ++j) x[j] = g.x(j);
  for (int m = 0; m <= 10; ++m) s.push(0.1 * m, x);
  CHECK(lp_norm_spacetime(s, 2.0) == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-5));
  CHECK(lp_norm_spacetime(s, 2.0, TimeQuadrature::RightPoint) == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-5));
  CHECK(lp_norm_spacetime(s, p_infinity) == doctest::Approx(g.x(399)));
  CHECK_THROWS(s.push(0.5, x));
  CHECK_THROWS(s.push(2.0, std::vector<double>(3, 0.0)));
}

TEST_CASE("quadrature weights") {
  const Grid1D g(2);
  SpaceTimeSeries s(g);
  s.push(0.0, {5.0, 5.0});
  s.push(1.0, {1.0, 1.0});
  s.push(3.0, {2.0, 2.0});
  CHECK(lp_norm_spacetime(s, 1.0) == doctest::Approx(0.5 * 5 + 1.5 * 1 + 1.0 * 2));
  CHECK(lp_norm_spacetime(s, 1.0, TimeQuadrature::RightPoint) == doctest::Approx(1.0 * 1 + 2.0 * 2));
}
