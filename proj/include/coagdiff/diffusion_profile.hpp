#pragma once

#include <cstddef>
#include <variant>
#include <vector>

namespace coagdiff {

namespace diffusion_family {

struct Constant {
  double d = 1.0;
};

/// d_i = d_inf + A / i^r
struct Limit {
  double d_inf = 1.0;
  double A = 1.0;
  double r = 1.0;
};

/// d_1..d_L given explicitly, then a Limit tail for i > L.
struct ExplicitList {
  std::vector<double> values;
  Limit tail;
};

}  // namespace diffusion_family

/// Diffusion rates d_i > 0 with 0 < inf d_i and sup d_i < infinity.
class DiffusionProfile {
 public:
  using Family = std::variant<diffusion_family::Constant, diffusion_family::Limit,
                              diffusion_family::ExplicitList>;

  explicit DiffusionProfile(Family family);

  static DiffusionProfile constant(double d) { return DiffusionProfile(diffusion_family::Constant{d}); }
  static DiffusionProfile limit(double d_inf, double A, double r) {
    return DiffusionProfile(diffusion_family::Limit{d_inf, A, r});
  }

  const Family& family() const { return family_; }

  /// d_i for i >= 1.
  double operator()(std::size_t i) const;
  double limit_value() const;
  /// inf / sup of d_i over i >= from (the whole infinite tail).
  double tail_inf(std::size_t from = 1) const;
  double tail_sup(std::size_t from = 1) const;
  double delta() const { return tail_inf(1); }
  double D() const { return tail_sup(1); }

  /// Smallest I <= cap with (sup - inf)/(sup + inf) over i >= I at most `ratio`;
  /// returns cap when none qualifies.
  std::size_t default_tail_index(double ratio, std::size_t cap) const;

 private:
  Family family_;
};

}  // namespace coagdiff
