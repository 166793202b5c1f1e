#include "coagdiff/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace coagdiff {

namespace {

void check_size(const Grid1D& g, std::size_t n, const char* what) {
  if (n != g.size()) {
    throw std::invalid_argument(std::string(what) + ": expected " + std::to_string(g.size()) +
                                " values, got " + std::to_string(n));
  }
}

void check_p(double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("Lp norm needs p >= 1");
}

}  // namespace

Grid1D::Grid1D(std::size_t cells) : cells_(cells), h_(1.0 / static_cast<double>(cells)) {
  if (cells_ < 2) throw std::invalid_argument("Grid1D: need at least 2 cells");
}

std::vector<double> Grid1D::nodes() const {
  std::vector<double> xs(cells_);
  for (std::size_t j = 0; j < cells_; ++j) xs[j] = x(j);
  return xs;
}

void laplacian_apply(const Grid1D& g, std::span<const double> u, std::span<double> out) {
  check_size(g, u.size(), "laplacian_apply");
  check_size(g, out.size(), "laplacian_apply");
  const std::size_t n = g.size();
  const double inv_h2 = 1.0 / (g.h() * g.h());
  out[0] = (u[1] - u[0]) * inv_h2;
  for (std::size_t j = 1; j + 1 < n; ++j) out[j] = ((u[j - 1] - u[j]) + (u[j + 1] - u[j])) * inv_h2;
  out[n - 1] = (u[n - 2] - u[n - 1]) * inv_h2;
}

std::vector<double> laplacian_apply(const Grid1D& g, std::span<const double> u) {
  std::vector<double> out(g.size());
  laplacian_apply(g, u, out);
  return out;
}

double laplacian_eigenvalue(const Grid1D& g, int mode) {
  const double h = g.h();
  return 2.0 / (h * h) * (1.0 - std::cos(mode * std::numbers::pi * h));
}

void solve_shifted_laplacian(const Grid1D& g, double k, std::span<double> rhs,
                             std::span<double> scratch) {
  check_size(g, rhs.size(), "solve_shifted_laplacian");
  const std::size_t n = g.size();
  if (scratch.size() < n) throw std::invalid_argument("solve_shifted_laplacian: scratch too small");
  const double r = k / (g.h() * g.h());
  // Thomas algorithm: sub/super diagonal -r, diagonal 1+2r (1+r on the ends).
  double diag = 1.0 + r;
  scratch[0] = -r / diag;
  rhs[0] /= diag;
  for (std::size_t j = 1; j < n; ++j) {
    const double dj = (j + 1 < n ? 1.0 + 2.0 * r : 1.0 + r) + r * scratch[j - 1];
    scratch[j] = -r / dj;
    rhs[j] = (rhs[j] + r * rhs[j - 1]) / dj;
  }
  for (std::size_t j = n - 1; j-- > 0;) rhs[j] -= scratch[j] * rhs[j + 1];
}

std::vector<double> heat_step_be(const Grid1D& g, std::span<const double> u, double d, double dt) {
  if (!(d > 0.0) || !(dt > 0.0)) throw std::invalid_argument("heat_step_be: need d > 0, dt > 0");
  std::vector<double> out(u.begin(), u.end());
  std::vector<double> scratch(g.size());
  solve_shifted_laplacian(g, d * dt, out, scratch);
  return out;
}

double lp_norm_space(const Grid1D& g, std::span<const double> u, double p) {
  check_size(g, u.size(), "lp_norm_space");
  check_p(p);
  if (std::isinf(p)) {
    double m = 0.0;
    for (double v : u) m = std::max(m, std::abs(v));
    return m;
  }
  double s = 0.0;
  for (double v : u) s += std::pow(std::abs(v), p);
  return std::pow(s * g.h(), 1.0 / p);
}

double inner_product(const Grid1D& g, std::span<const double> u, std::span<const double> v) {
  check_size(g, u.size(), "inner_product");
  check_size(g, v.size(), "inner_product");
  double s = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) s += u[j] * v[j];
  return s * g.h();
}

double gradient_norm_sq(const Grid1D& g, std::span<const double> u) {
  check_size(g, u.size(), "gradient_norm_sq");
  double s = 0.0;
  for (std::size_t j = 0; j + 1 < u.size(); ++j) {
    const double du = (u[j + 1] - u[j]) / g.h();
    s += du * du;
  }
  return s * g.h();
}

void SpaceTimeSeries::push(double t, std::vector<double> values) {
  check_size(grid_, values.size(), "SpaceTimeSeries::push");
  if (!times_.empty() && !(t > times_.back())) {
    throw std::invalid_argument("SpaceTimeSeries: times must be strictly increasing");
  }
  times_.push_back(t);
  frames_.push_back(std::move(values));
}

double lp_norm_spacetime(const SpaceTimeSeries& s, double p, TimeQuadrature quad) {
  check_p(p);
  const std::size_t m = s.frames();
  if (m == 0) return 0.0;
  if (std::isinf(p)) {
    double mx = 0.0;
    for (std::size_t k = 0; k < m; ++k) mx = std::max(mx, lp_norm_space(s.grid(), s.frame(k), p));
    return mx;
  }
  const auto& t = s.times();
  double total = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    double w = 0.0;
    if (quad == TimeQuadrature::Trapezoid) {
      if (k > 0) w += 0.5 * (t[k] - t[k - 1]);
      if (k + 1 < m) w += 0.5 * (t[k + 1] - t[k]);
    } else if (k > 0) {
      w = t[k] - t[k - 1];
    }
    if (w == 0.0) continue;
    double sp = 0.0;
    for (double v : s.frame(k)) sp += std::pow(std::abs(v), p);
    total += w * sp * s.grid().h();
  }
  return std::pow(total, 1.0 / p);
}

}  // namespace coagdiff
