#include "coagdiff/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace coagdiff {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument("kernel: " + what);
}

}  // namespace

const char* to_string(GrowthClass g) {
  switch (g) {
    case GrowthClass::Sublinear: return "sublinear";
    case GrowthClass::LinearBorderline: return "linear_borderline";
    case GrowthClass::Superlinear: return "superlinear";
  }
  return "?";
}

KernelSpec::KernelSpec(Family family) : family_(std::move(family)) {
  std::visit(
      overloaded{
          [&](const kernel_family::Constant& k) {
            require(std::isfinite(k.c0) && k.c0 >= 0.0, "constant rate must be finite and >= 0");
            terms_ = {{k.c0, 0.0, 0.0}};
          },
          [&](const kernel_family::SumPower& k) {
            require(std::isfinite(k.C) && k.C > 0.0, "sum_power needs C > 0");
            require(k.gamma >= 0.0 && k.gamma <= 1.0, "sum_power needs gamma in [0, 1]");
            terms_ = {{k.C, k.gamma, 0.0}, {k.C, 0.0, k.gamma}};
          },
          [&](const kernel_family::ProductPower& k) {
            require(std::isfinite(k.C) && k.C > 0.0, "product_power needs C > 0");
            require(k.alpha >= 0.0 && k.alpha < 1.0 && k.beta >= 0.0 && k.beta < 1.0,
                    "product_power needs alpha, beta in [0, 1)");
            terms_ = {{k.C, k.alpha, k.beta}, {k.C, k.beta, k.alpha}};
          },
          [&](const kernel_family::Multiplicative&) { terms_ = {{1.0, 1.0, 1.0}}; },
          [&](const kernel_family::Table& k) {
            require(k.n >= 1, "table needs n >= 1");
            require(k.rates.size() == k.n * k.n, "table needs n*n rates");
            for (std::size_t i = 0; i < k.n; ++i) {
              for (std::size_t j = 0; j < k.n; ++j) {
                const double a = k.rates[i * k.n + j];
                require(std::isfinite(a) && a >= 0.0, "table rates must be finite and >= 0");
                require(a == k.rates[j * k.n + i], "table must be symmetric");
              }
            }
            n_max_ = k.n;
          },
      },
      family_);
}

KernelSpec KernelSpec::load_table_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open kernel table " + path.string());
  std::string line;
  std::getline(in, line);
  if (line.rfind("i,j,a", 0) != 0) {
    throw std::runtime_error(path.string() + ":1: expected header \"i,j,a\"");
  }
  std::vector<std::tuple<std::size_t, std::size_t, double>> rows;
  std::size_t max_index = 0;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::size_t i = 0, j = 0;
    double a = 0.0;
    char c1 = 0, c2 = 0;
    if (!(ss >> i >> c1 >> j >> c2 >> a) || c1 != ',' || c2 != ',' || i == 0 || j == 0) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": malformed row");
    }
    rows.emplace_back(i, j, a);
    max_index = std::max({max_index, i, j});
  }
  if (rows.size() != max_index * max_index) {
    throw std::runtime_error(path.string() + ": expected " + std::to_string(max_index * max_index) +
                             " entries, found " + std::to_string(rows.size()));
  }
  std::vector<double> rates(max_index * max_index, std::numeric_limits<double>::quiet_NaN());
  for (const auto& [i, j, a] : rows) rates[(i - 1) * max_index + (j - 1)] = a;
  return table(max_index, std::move(rates));
}

std::string KernelSpec::name() const {
  return std::visit(overloaded{
                        [](const kernel_family::Constant&) { return std::string("constant"); },
                        [](const kernel_family::SumPower&) { return std::string("sum_power"); },
                        [](const kernel_family::ProductPower&) { return std::string("product_power"); },
                        [](const kernel_family::Multiplicative&) { return std::string("multiplicative"); },
                        [](const kernel_family::Table&) { return std::string("table"); },
                    },
                    family_);
}

double KernelSpec::eval(std::size_t i, std::size_t j) const {
  if (i == 0 || j == 0) throw std::out_of_range("kernel: cluster sizes start at 1");
  const double x = static_cast<double>(i);
  const double y = static_cast<double>(j);
  return std::visit(
      overloaded{
          [](const kernel_family::Constant& k) { return k.c0; },
          [&](const kernel_family::SumPower& k) {
            return k.C * (std::pow(x, k.gamma) + std::pow(y, k.gamma));
          },
          [&](const kernel_family::ProductPower& k) {
            // Both orderings summed in a fixed order so eval(i,j) == eval(j,i) bitwise.
            const double p = std::pow(x, k.alpha) * std::pow(y, k.beta);
            const double q = std::pow(y, k.alpha) * std::pow(x, k.beta);
            return k.C * (std::min(p, q) + std::max(p, q));
          },
          [&](const kernel_family::Multiplicative&) { return x * y; },
          [&](const kernel_family::Table& k) {
            if (i > k.n || j > k.n) {
              throw std::out_of_range("kernel: index beyond table size " + std::to_string(k.n));
            }
            return k.rates[(i - 1) * k.n + (j - 1)];
          },
      },
      family_);
}

double KernelSpec::sublinear_constant() const {
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  return std::visit(overloaded{
                        [](const kernel_family::Constant& k) { return 0.5 * k.c0; },
                        [](const kernel_family::SumPower& k) { return k.C; },
                        [](const kernel_family::ProductPower& k) {
                          // i^a j^b <= i^(a+b) + j^(a+b)
                          return k.alpha + k.beta <= 1.0 ? 2.0 * k.C : nan;
                        },
                        [](const kernel_family::Multiplicative&) { return nan; },
                        [](const kernel_family::Table&) { return nan; },
                    },
                    family_);
}

GrowthClass classify(const KernelSpec& spec) {
  return std::visit(
      overloaded{
          [](const kernel_family::Constant&) { return GrowthClass::Sublinear; },
          [](const kernel_family::SumPower& k) {
            return k.gamma < 1.0 ? GrowthClass::Sublinear : GrowthClass::LinearBorderline;
          },
          [](const kernel_family::ProductPower& k) {
            const double s = k.alpha + k.beta;
            if (s < 1.0) return GrowthClass::Sublinear;
            if (s == 1.0) return GrowthClass::LinearBorderline;
            return GrowthClass::Superlinear;
          },
          [](const kernel_family::Multiplicative&) { return GrowthClass::Superlinear; },
          [](const kernel_family::Table&) -> GrowthClass {
            throw std::invalid_argument("kernel: growth class undefined for table kernels");
          },
      },
      spec.family());
}

std::vector<double> sublinearity_profile(const KernelSpec& spec, std::size_t i,
                                         std::size_t j_max) {
  if (j_max > spec.n_max() || i > spec.n_max()) {
    throw std::out_of_range("sublinearity_profile: index beyond n_max");
  }
  std::vector<double> out(j_max);
  for (std::size_t j = 1; j <= j_max; ++j) out[j - 1] = spec.eval(i, j) / static_cast<double>(j);
  return out;
}

}  // namespace coagdiff
