#pragma once

#include <cstddef>
#include <filesystem>
#include <limits>
#include <string>
#include <variant>
#include <vector>

namespace coagdiff {

// Coagulation rate families a(i,j), i,j >= 1.
namespace kernel_family {

struct Constant {
  double c0 = 1.0;
};

// a(i,j) = C (i^gamma + j^gamma)
struct SumPower {
  double C = 1.0;
  double gamma = 0.5;
};

// a(i,j) = C (i^alpha j^beta + i^beta j^alpha)
struct ProductPower {
  double C = 1.0;
  double alpha = 0.5;
  double beta = 0.5;
};

// a(i,j) = i j
struct Multiplicative {};

// Explicit symmetric rate matrix, row-major, n_max x n_max, entry (i-1, j-1).
struct Table {
  std::size_t n = 0;
  std::vector<double> rates;
};

}  // namespace kernel_family

enum class GrowthClass { Sublinear, LinearBorderline, Superlinear };

const char* to_string(GrowthClass g);

/// One term w * i^e1 * j^e2 of a separable rate a(i,j) = sum of such terms.
struct SeparableTerm {
  double weight;
  double e1;
  double e2;
};

/// Immutable coagulation kernel. Construction validates the family
/// parameters; Table rates are checked for symmetry and sign.
class KernelSpec {
 public:
  using Family = std::variant<kernel_family::Constant, kernel_family::SumPower,
                              kernel_family::ProductPower,
                              kernel_family::Multiplicative, kernel_family::Table>;

  static constexpr std::size_t unbounded = std::numeric_limits<std::size_t>::max();

  explicit KernelSpec(Family family);

  static KernelSpec constant(double c0) { return KernelSpec(kernel_family::Constant{c0}); }
  static KernelSpec sum_power(double C, double gamma) {
    return KernelSpec(kernel_family::SumPower{C, gamma});
  }
  static KernelSpec product_power(double C, double alpha, double beta) {
    return KernelSpec(kernel_family::ProductPower{C, alpha, beta});
  }
  static KernelSpec multiplicative() { return KernelSpec(kernel_family::Multiplicative{}); }
  static KernelSpec table(std::size_t n, std::vector<double> rates) {
    return KernelSpec(kernel_family::Table{n, std::move(rates)});
  }

  /// Loads a Table kernel from CSV with header "i,j,a" and n_max^2 rows.
  static KernelSpec load_table_csv(const std::filesystem::path& path);

  const Family& family() const { return family_; }
  std::size_t n_max() const { return n_max_; }
  std::string name() const;

  /// a(i,j). Throws std::out_of_range past n_max (Table only) or for index 0.
  double eval(std::size_t i, std::size_t j) const;

  /// Separable decomposition of a(i,j); empty for Table kernels.
  const std::vector<SeparableTerm>& separable_terms() const { return terms_; }
  bool is_separable() const { return !terms_.empty(); }

  /// Bound C in a(i,j) <= C (i^gamma + j^gamma) when one exists in closed form
  /// (used for the psi diagnostics). Returns NaN for Table and superlinear kernels.
  double sublinear_constant() const;

 private:
  Family family_;
  std::size_t n_max_ = unbounded;
  std::vector<SeparableTerm> terms_;
};

/// Growth class of a closed-form family. Throws std::invalid_argument for Table.
GrowthClass classify(const KernelSpec& spec);

/// a(i,j)/j for j = 1..j_max.
std::vector<double> sublinearity_profile(const KernelSpec& spec, std::size_t i,
                                         std::size_t j_max);

}  // namespace coagdiff
