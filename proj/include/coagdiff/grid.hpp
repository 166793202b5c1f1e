#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace coagdiff {

/// Cell-centred grid on [0,1] with homogeneous Neumann boundaries
/// (reflecting ghost cells u_{-1} = u_0, u_N = u_{N-1}).
class Grid1D {
 public:
  explicit Grid1D(std::size_t cells);

  std::size_t size() const { return cells_; }
  double h() const { return h_; }
  double x(std::size_t j) const { return (static_cast<double>(j) + 0.5) * h_; }
  std::vector<double> nodes() const;

 private:
  std::size_t cells_;
  double h_;
};

inline constexpr double p_infinity = std::numeric_limits<double>::infinity();

/// (Lu)_j = (u_{j-1} - 2u_j + u_{j+1}) / h^2 with reflecting ghosts.
void laplacian_apply(const Grid1D& g, std::span<const double> u, std::span<double> out);
std::vector<double> laplacian_apply(const Grid1D& g, std::span<const double> u);

/// Eigenvalue of -L for the mode cos(k pi x): (2/h^2)(1 - cos(k pi h)).
double laplacian_eigenvalue(const Grid1D& g, int mode);

/// Solves (I - k L) x = rhs in place by tridiagonal elimination, k = dt * d.
/// scratch needs size() entries.
void solve_shifted_laplacian(const Grid1D& g, double k, std::span<double> rhs,
                             std::span<double> scratch);

/// One backward-Euler step of u_t = d u_xx.
std::vector<double> heat_step_be(const Grid1D& g, std::span<const double> u, double d, double dt);

/// (sum_j |u_j|^p h)^(1/p); p = p_infinity gives max |u_j|.
double lp_norm_space(const Grid1D& g, std::span<const double> u, double p);

/// sum_j u_j v_j h
double inner_product(const Grid1D& g, std::span<const double> u, std::span<const double> v);

/// sum_{j<N-1} ((u_{j+1} - u_j)/h)^2 h
double gradient_norm_sq(const Grid1D& g, std::span<const double> u);

enum class TimeQuadrature {
  Trapezoid,   // weights dt/2 at the ends, dt inside
  RightPoint,  // frame m > 0 carries t_m - t_{m-1}; frame 0 carries nothing
};

/// Time-stamped spatial frames on one grid: a function on [0,T] x [0,1].
class SpaceTimeSeries {
 public:
  explicit SpaceTimeSeries(Grid1D grid) : grid_(grid) {}

  const Grid1D& grid() const { return grid_; }
  std::size_t frames() const { return times_.size(); }
  const std::vector<double>& times() const { return times_; }
  std::span<const double> frame(std::size_t m) const { return frames_[m]; }
  std::span<double> frame(std::size_t m) { return frames_[m]; }

  /// Times must be strictly increasing; the frame must match the grid.
  void push(double t, std::vector<double> values);

 private:
  Grid1D grid_;
  std::vector<double> times_;
  std::vector<std::vector<double>> frames_;
};

double lp_norm_spacetime(const SpaceTimeSeries& s, double p,
                         TimeQuadrature quad = TimeQuadrature::Trapezoid);

}  // namespace coagdiff
