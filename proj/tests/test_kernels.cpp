#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"

#include "coagdiff/kernels.hpp"

using namespace coagdiff;

namespace {

std::vector<KernelSpec> closed_form_kernels() {
  return {KernelSpec::constant(2.0), KernelSpec::sum_power(1.5, 0.5), KernelSpec::sum_power(1.0, 1.0),
          KernelSpec::product_power(0.7, 0.3, 0.6), KernelSpec::product_power(1.0, 0.6, 0.6),
          KernelSpec::multiplicative()};
}

KernelSpec random_table(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  std::vector<double> r(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j) r[i * n + j] = r[j * n + i] = u(rng);
  return KernelSpec::table(n, r);
}

}  // namespace

TEST_CASE("closed-form values") {
  CHECK(KernelSpec::constant(2.0).eval(3, 7) == 2.0);
  CHECK(KernelSpec::sum_power(1.0, 1.0).eval(2, 3) == 5.0);
  CHECK(KernelSpec::product_power(1.0, 0.5, 0.5).eval(4, 9) == doctest::Approx(12.0).epsilon(1e-15));
  CHECK(KernelSpec::multiplicative().eval(3, 4) == 12.0);
  const auto k = KernelSpec::sum_power(1.5, 0.3);
  CHECK(k.eval(5, 11) == doctest::Approx(1.5 * (std::pow(5.0, 0.3) + std::pow(11.0, 0.3))).epsilon(1e-15));
  const auto p = KernelSpec::product_power(0.7, 0.2, 0.9);
  const double expect = 0.7 * (std::pow(6.0, 0.2) * std::pow(10.0, 0.9) + std::pow(6.0, 0.9) * std::pow(10.0, 0.2));
  CHECK(p.eval(6, 10) == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("symmetry is exact for every family") {
  auto ks = closed_form_kernels();
  ks.push_back(KernelSpec::product_power(1.3, 0.1, 0.95));
  ks.push_back(random_table(64, 3));
  std::mt19937_64 rng(11);
  for (const auto& k : ks) {
    const std::size_t top = std::min<std::size_t>(512, k.n_max());
    std::uniform_int_distribution<std::size_t> pick(1, top);
    for (int t = 0; t < 2000; ++t) {
      const std::size_t i = pick(rng), j = pick(rng);
      REQUIRE(k.eval(i, j) == k.eval(j, i));
      REQUIRE(k.eval(i, j) >= 0.0);
    }
  }
}

TEST_CASE("separable terms reproduce eval") {
  for (const auto& k : closed_form_kernels()) {
    REQUIRE(k.is_separable());
    for (std::size_t i = 1; i <= 40; ++i) {
      for (std::size_t j = 1; j <= 40; ++j) {
        double s = 0.0;
        for (const auto& t : k.separable_terms()) s += t.weight * std::pow(double(i), t.e1) * std::pow(double(j), t.e2);
        REQUIRE(s == doctest::Approx(k.eval(i, j)).epsilon(1e-13));
      }
    }
  }
  CHECK_FALSE(random_table(4, 1).is_separable());
}

TEST_CASE("growth bounds") {
  const auto s = KernelSpec::sum_power(2.0, 0.4);
  const auto p = KernelSpec::product_power(1.1, 0.3, 0.6);
  for (std::size_t i = 1; i <= 200; i += 7) {
    for (std::size_t j = 1; j <= 200; j += 5) {
      CHECK(s.eval(i, j) <= 2.0 * (std::pow(double(i), 0.4) + std::pow(double(j), 0.4)) * (1 + 1e-15));
      CHECK(p.eval(i, j) <= 1.1 * 2.0 * std::pow(double(i * j), 0.6) * (1 + 1e-15));
    }
  }
}

TEST_CASE("validation") {
  CHECK_NOTHROW(KernelSpec::constant(0.0));
  CHECK_THROWS_AS(KernelSpec::constant(-1.0), std::invalid_argument);
  CHECK_THROWS_AS(KernelSpec::sum_power(0.0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(KernelSpec::sum_power(1.0, 1.5), std::invalid_argument);
  CHECK_THROWS_AS(KernelSpec::sum_power(1.0, -0.1), std::invalid_argument);
  CHECK_THROWS_AS(KernelSpec::product_power(1.0, 1.0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(KernelSpec::product_power(1.0, 0.5, -0.5), std::invalid_argument);
  CHECK_THROWS_AS(KernelSpec::table(2, {1, 2, 3, 4}), std::invalid_argument);
  CHECK_THROWS_AS(KernelSpec::table(2, {1, -2, -2, 4}), std::invalid_argument);
  CHECK_THROWS_AS(KernelSpec::table(2, {1, 2, 2}), std::invalid_argument);
}

TEST_CASE("table bounds") {
  const auto t = random_table(8, 5);
  CHECK(t.n_max() == 8);
  CHECK_NOTHROW(t.eval(8, 8));
  CHECK_THROWS_AS(t.eval(9, 1), std::out_of_range);
  CHECK_THROWS_AS(t.eval(0, 1), std::out_of_range);
  CHECK_THROWS_AS(KernelSpec::constant(1.0).eval(1, 0), std::out_of_range);
  CHECK(KernelSpec::constant(1.0).n_max() == KernelSpec::unbounded);
}

TEST_CASE("classification") {
  CHECK(classify(KernelSpec::sum_power(1, 0.5)) == GrowthClass::Sublinear);
  CHECK(classify(KernelSpec::sum_power(1, 1.0)) == GrowthClass::LinearBorderline);
  CHECK(classify(KernelSpec::constant(3)) == GrowthClass::Sublinear);
  CHECK(classify(KernelSpec::product_power(1, 0.3, 0.6)) == GrowthClass::Sublinear);
  CHECK(classify(KernelSpec::product_power(1, 0.5, 0.5)) == GrowthClass::LinearBorderline);
  CHECK(classify(KernelSpec::product_power(1, 0.6, 0.6)) == GrowthClass::Superlinear);
  CHECK(classify(KernelSpec::multiplicative()) == GrowthClass::Superlinear);
  CHECK_THROWS_AS(classify(random_table(3, 2)), std::invalid_argument);
  CHECK(std::string(to_string(GrowthClass::LinearBorderline)) == "linear_borderline");
}

TEST_CASE("sublinearity profile") {
  const auto c = sublinearity_profile(KernelSpec::constant(2), 1, 4);
  REQUIRE(c.size() == 4);
  CHECK(c[0] == 2.0);
  CHECK(c[1] == 1.0);
  CHECK(c[2] == doctest::Approx(2.0 / 3.0));
  CHECK(c[3] == 0.5);
  const auto s = sublinearity_profile(KernelSpec::sum_power(1, 0.5), 1, 10000);
  CHECK(s.back() == doctest::Approx(0.0101).epsilon(1e-12));
  for (double v : sublinearity_profile(KernelSpec::multiplicative(), 2, 50)) CHECK(v == 2.0);
  CHECK_THROWS_AS(sublinearity_profile(random_table(4, 1), 1, 5), std::out_of_range);
}

TEST_CASE("sublinear kernels decay along j") {
  for (const auto& k : closed_form_kernels()) {
    if (classify(k) != GrowthClass::Sublinear) continue;
    double far = 0.0, near = 0.0;
    for (std::size_t i = 1; i <= 64; ++i) {
      far = std::max(far, k.eval(i, 1 << 16) / double(1 << 16));
      near = std::max(near, k.eval(i, 1 << 8) / double(1 << 8));
    }
    CHECK(far < near);
  }
}

TEST_CASE("sublinear constant") {
  CHECK(KernelSpec::constant(2).sublinear_constant() == 1.0);
  CHECK(KernelSpec::sum_power(1.5, 0.5).sublinear_constant() == 1.5);
  CHECK(KernelSpec::product_power(0.5, 0.3, 0.6).sublinear_constant() == 1.0);
  CHECK(std::isnan(KernelSpec::product_power(1, 0.6, 0.6).sublinear_constant()));
  CHECK(std::isnan(KernelSpec::multiplicative().sublinear_constant()));
}

TEST_CASE("table csv") {
  const auto dir = std::filesystem::temp_directory_path() / "coagdiff_kernel_test";
  std::filesystem::create_directories(dir);
  const auto good = dir / "good.csv";
  {
    std::ofstream out(good);
    out << "i,j,a\n";
    for (int i = 1; i <= 3; ++i)
      for (int j = 1; j <= 3; ++j) out << i << ',' << j << ',' << i + j << '\n';
  }
  const auto k = KernelSpec::load_table_csv(good);
  CHECK(k.n_max() == 3);
  CHECK(k.eval(2, 3) == 5.0);
  CHECK(k.name() == "table");

  const auto bad = dir / "bad.csv";
  {
    std::ofstream out(bad);
    out << "x,y,z\n1,1,1\n";
  }
  CHECK_THROWS(KernelSpec::load_table_csv(bad));
  const auto short_file = dir / "short.csv";
  {
    std::ofstream out(short_file);
    out << "i,j,a\n1,1,1\n2,2,1\n";
  }
  CHECK_THROWS(KernelSpec::load_table_csv(short_file));
  CHECK_THROWS(KernelSpec::load_table_csv(dir / "missing.csv"));
}
