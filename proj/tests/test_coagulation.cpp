#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"

#include "coagdiff/coagulation.hpp"
#include "coagdiff/convolution.hpp"

using namespace coagdiff;

namespace {

std::vector<double> random_state(std::size_t n, std::uint64_t seed, double decay = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> c(n);
  for (std::size_t i = 0; i < n; ++i) c[i] = u(rng) / std::pow(double(i + 1), decay);
  return c;
}

double mass(const std::vector<double>& q) {
  double s = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) s += double(i + 1) * q[i];
  return s;
}

double abs_mass(const std::vector<double>& c, const std::vector<double>& g, const std::vector<double>& l) {
  double s = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) s += double(i + 1) * (std::abs(g[i]) + std::abs(l[i]));
  return s;
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double max_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// independent literal oracle over all pairs (i,j), no shared code with the library
std::vector<double> oracle_q(const std::vector<double>& c, const KernelSpec& k) {
  const std::size_t n = c.size();
  std::vector<double> q(n, 0.0);
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= n; ++j) {
      if (i + j > n) continue;
      const double r = k.eval(i, j) * c[i - 1] * c[j - 1];
      q[i + j - 1] += 0.5 * r;
      q[i - 1] -= 0.5 * r;
      q[j - 1] -= 0.5 * r;
    }
  }
  return q;
}

}  // namespace

TEST_CASE("hand examples, unit kernel") {
  const auto k = KernelSpec::constant(1.0);
  const std::vector<double> c2{1.0, 1.0};
  CHECK(gain(c2, k) == std::vector<double>{0.0, 0.5});
  CHECK(loss(c2, k) == std::vector<double>{1.0, 0.0});
  CHECK(q_truncated(c2, k) == std::vector<double>{-1.0, 0.5});
  const std::vector<double> c3{1.0, 1.0, 1.0};
  CHECK(gain(c3, k) == std::vector<double>{0.0, 0.5, 1.0});
  CHECK(loss(c3, k) == std::vector<double>{2.0, 1.0, 0.0});
  CHECK(q_truncated(c3, k) == std::vector<double>{-2.0, -0.5, 1.0});
}

TEST_CASE("weak form hand examples") {
  const auto k = KernelSpec::constant(1.0);
  const std::vector<double> c{1.0, 1.0};
  const std::vector<double> lin{1.0, 2.0};
  const std::vector<double> one{1.0, 1.0};
  CHECK(weak_form_lhs(c, k, lin) == 0.0);
  CHECK(weak_form_rhs(c, k, lin) == 0.0);
  CHECK(weak_form_lhs(c, k, one) == -0.5);
  CHECK(weak_form_rhs(c, k, one) == -0.5);
}

TEST_CASE("reference matches literal pair oracle") {
  for (const auto& k : {KernelSpec::constant(1.3), KernelSpec::sum_power(0.8, 0.7),
                        KernelSpec::product_power(1.0, 0.2, 0.9), KernelSpec::multiplicative()}) {
    const auto c = random_state(50, 4);
    const auto q = q_truncated(c, k);
    const auto o = oracle_q(c, k);
    CHECK(max_diff(q, o) <= 1e-13 * (1.0 + max_abs(o)));
  }
}

TEST_CASE("weak form holds for random data") {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> g(0.0, 1.0);
  const std::vector<KernelSpec> ks{KernelSpec::constant(2.0), KernelSpec::sum_power(1.0, 0.5),
                                   KernelSpec::product_power(1.0, 0.6, 0.6), KernelSpec::multiplicative()};
  for (const auto& k : ks) {
    for (int t = 0; t < 20; ++t) {
      const auto c = random_state(64, 100 + t);
      std::vector<double> phi(64);
      for (double& p : phi) p = g(rng);
      const double lhs = weak_form_lhs(c, k, phi);
      const double rhs = weak_form_rhs(c, k, phi);
      REQUIRE(std::abs(lhs - rhs) <= 1e-12 * weak_form_scale(c, k, phi));
    }
  }
}

TEST_CASE("truncated operator conserves mass") {
  const std::vector<KernelSpec> ks{KernelSpec::constant(1.0), KernelSpec::sum_power(2.0, 0.7),
                                   KernelSpec::product_power(1.0, 0.6, 0.6), KernelSpec::multiplicative()};
  for (const auto& k : ks) {
    for (std::size_t n : {2, 17, 128}) {
      const auto c = random_state(n, n, 0.5);
      const auto g = gain(c, k), l = loss(c, k);
      const auto q = q_truncated(c, k);
      REQUIRE(std::abs(mass(q)) <= 1e-13 * abs_mass(c, g, l));
    }
  }
}

TEST_CASE("positivity of gain and loss") {
  const auto k = KernelSpec::sum_power(1.0, 0.9);
  const auto c = random_state(100, 9);
  for (double v : gain(c, k)) CHECK(v >= 0.0);
  for (double v : loss(c, k)) CHECK(v >= 0.0);
  std::vector<double> z(100, 0.0);
  CHECK(max_abs(q_truncated(z, k)) == 0.0);
}

TEST_CASE("truncation is invisible for compact support") {
  const auto k = KernelSpec::sum_power(1.0, 0.5);
  const std::size_t n = 40;
  auto c = random_state(n, 3);
  for (std::size_t i = n / 2; i < n; ++i) c[i] = 0.0;
  std::vector<double> big(2 * n, 0.0);
  std::copy(c.begin(), c.end(), big.begin());
  const auto q = q_truncated(c, k);
  const auto qb = q_truncated(big, k);
  for (std::size_t i = 0; i < n; ++i) CHECK(q[i] == qb[i]);
}

TEST_CASE("fast gain hand example") {
  FftConvolver fft;
  const std::vector<double> c(4, 1.0);
  const auto g = gain_fast(c, KernelSpec::constant(2.0), fft);
  const std::vector<double> expect{0, 1, 2, 3};
  CHECK(max_diff(g, expect) <= 1e-14);
  CHECK_THROWS_AS(gain_fast(c, KernelSpec::table(1, {1.0}), fft), std::invalid_argument);
}

TEST_CASE("fast gain agrees with reference") {
  FftConvolver fft;
  const std::vector<KernelSpec> ks{KernelSpec::constant(1.0), KernelSpec::sum_power(1.0, 0.5),
                                   KernelSpec::product_power(1.0, 0.6, 0.6), KernelSpec::multiplicative()};
  for (const auto& k : ks) {
    for (std::size_t n : {256, 512, 4096}) {
      if (n == 4096 && k.name() != "product_power") continue;
      const auto c = random_state(n, n + 1);
      const auto ref = gain(c, k);
      const auto fast = gain_fast(c, k, fft);
      REQUIRE(max_diff(ref, fast) <= 1e-12 * max_abs(ref));
    }
  }
}

TEST_CASE("convolvers agree") {
  DirectConvolver direct;
  FftConvolver fft;
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1, 1);
  for (std::size_t n : {1, 3, 64, 1000}) {
    std::vector<double> a(n), b(n), o1(n), o2(n);
    for (auto& x : a) x = u(rng);
    for (auto& x : b) x = u(rng);
    direct.convolve(a, b, o1);
    fft.convolve(a, b, o2);
    CHECK(max_diff(o1, o2) <= 1e-12 * double(n));
    CHECK(fft.transform_size() >= 2 * n);
  }
  std::vector<double> a{1, 2}, b{3, 4}, o(3);
  direct.convolve(a, b, o);
  CHECK(o == std::vector<double>{3, 10, 8});
}

TEST_CASE("production operator agrees with reference") {
  const std::vector<KernelSpec> ks{KernelSpec::constant(1.5), KernelSpec::sum_power(1.0, 0.5),
                                   KernelSpec::product_power(1.0, 0.3, 0.6), KernelSpec::multiplicative()};
  for (const auto& k : ks) {
    for (auto ev : {GainEvaluator::Direct, GainEvaluator::Fft}) {
      const std::size_t n = 200;
      const CoagulationOperator op(k, n, ev);
      auto ws = op.make_workspace();
      const auto c = random_state(n, 77);
      std::vector<double> q(n), g(n), rate(n);
      op.apply(c, q, ws);
      const auto ref = q_truncated(c, k);
      CHECK(max_diff(q, ref) <= 1e-12 * max_abs(ref));
      op.gain_and_rate(c, g, rate, ws);
      const auto l = loss(c, k);
      const auto gr = gain(c, k);
      CHECK(max_diff(g, gr) <= 1e-12 * max_abs(gr));
      std::vector<double> lr(n);
      for (std::size_t i = 0; i < n; ++i) lr[i] = c[i] * rate[i];
      CHECK(max_diff(lr, l) <= 1e-12 * max_abs(l));
      double mr = 0.0;
      for (double r : rate) mr = std::max(mr, r);
      CHECK(op.max_rate(c, ws) == doctest::Approx(mr).epsilon(1e-14));
    }
  }
}

TEST_CASE("production operator with table kernel") {
  const std::size_t n = 12;
  std::vector<double> r(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) r[i * n + j] = 1.0 + double((i + 1) * (j + 1) % 5);
  const auto k = KernelSpec::table(n, r);
  const CoagulationOperator op(k, n);
  auto ws = op.make_workspace();
  const auto c = random_state(n, 5);
  std::vector<double> q(n);
  op.apply(c, q, ws);
  CHECK(max_diff(q, oracle_q(c, k)) <= 1e-13);
  CHECK_THROWS(CoagulationOperator(k, n + 1));
}
