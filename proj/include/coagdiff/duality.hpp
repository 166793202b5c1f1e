#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "coagdiff/grid.hpp"

namespace coagdiff {

// Space-time fields in this module live on a uniform mesh t_m = m T / steps,
// m = 0..steps. Backward-Euler quantities (forcing, time differences,
// Laplacians) are attached to t_1..t_steps; frame 0 is carried but ignored by
// the norms (right-point quadrature).

struct TimeMesh {
  Grid1D grid;
  std::size_t steps;
  double T;

  TimeMesh(std::size_t cells, std::size_t steps, double T);
  double dt() const { return T / static_cast<double>(steps); }
  double t(std::size_t m) const { return dt() * static_cast<double>(m); }
};

/// Samples fn(t, x) on the mesh (frames 0..steps).
SpaceTimeSeries sample_field(const TimeMesh& mesh, const std::function<double(double, double)>& fn);
SpaceTimeSeries zero_field(const TimeMesh& mesh);
/// Recovers the uniform mesh a series lives on; throws for non-uniform times.
TimeMesh mesh_of(const SpaceTimeSeries& s);

/// Forcing number `index` of the sampler stream for `seed`: even indices are
/// smooth (low cosine modes in x and t), odd ones piecewise constant on
/// random blocks.
SpaceTimeSeries random_forcing(const TimeMesh& mesh, std::uint64_t seed, std::size_t index);

/// ||g||_{L^q} over frames 1..steps.
double lq_norm(const SpaceTimeSeries& g, double q);

struct HeatSolution {
  SpaceTimeSeries v;
  SpaceTimeSeries dvdt;
  SpaceTimeSeries laplacian;
};

/// Backward Euler for v_t - m Lv = f, v(0) = 0, Neumann.
HeatSolution solve_heat_forced(double m, const SpaceTimeSeries& f);

/// (||dv/dt||_q^q + m^q ||Lv||_q^q)^(1/q)
double z_norm(const SpaceTimeSeries& dvdt, const SpaceTimeSeries& lap, double m, double q);

/// ||v||_Z / ||f||_q for the solution of the forced heat problem.
double k_ratio(double m, double q, const SpaceTimeSeries& f);

struct SamplerConfig {
  std::size_t cells = 32;
  std::size_t steps = 32;
  double T = 1.0;
  std::size_t samples = 100;
  std::uint64_t seed = 1;
  std::size_t power_iterations = 200;
};

struct KEstimate {
  double m = 0.0;
  double q = 0.0;
  std::size_t cells = 0;
  std::size_t steps = 0;
  double T = 0.0;
  std::size_t sample_count = 0;
  double estimate = 0.0;  // lower bound of the discrete constant
  double witness_ratio = 0.0;
  std::optional<double> power_iteration_ratio;
  std::vector<double> ratios;  // witness first, then random samples
};

/// Maximum k_ratio over: the spatially uniform witness, random smooth and
/// random piecewise-constant forcings, and (q = 2) power iteration on the
/// normal operator.
KEstimate estimate_K(double m, double q, const SamplerConfig& cfg);

struct ClosenessReport {
  double a, b, p, p_conjugate, m;
  double k_hat;       // constant used in the verdict
  double k_estimate;  // sampler lower bound
  double lhs;
  bool satisfied;
  bool heuristic;  // true when p' != 2: k_hat is only a lower bound
};

/// ((b-a)/(b+a)) K_{(a+b)/2, p'} < 1 with p' = p/(p-1). For p' = 2 the proven
/// bound K = 1 is used.
ClosenessReport check_closeness(double a, double b, double p, const SamplerConfig& cfg);

struct EnergyReport {
  double lhs;                // sum (dv/dt) (Lv) h dt
  double final_gradient;     // -1/2 ||grad v(T)||^2
  double increment_term;     // -1/2 sum_m ||grad (v^m - v^{m-1})||^2
  double matched;            // final_gradient + increment_term
  bool sign_ok;              // lhs <= 0
};

EnergyReport energy_identity_check(double m, const SpaceTimeSeries& f);

struct DualProblem {
  SpaceTimeSeries M;
  SpaceTimeSeries f;
  double q = 2.0;
  double a = 1.0;
  double b = 1.0;
};

struct ContractionOptions {
  std::size_t max_iterations = 500;
  double rtol = 1e-11;                        // stop when residual <= rtol ||f||_q
  std::optional<SpaceTimeSeries> initial;     // v_0, frame 0 must vanish
  std::optional<double> k_hat;                // constant for the contraction bound
  SamplerConfig sampler;                      // used for k_hat when q != 2
};

struct ContractionResult {
  SpaceTimeSeries u;
  std::size_t iterations = 0;
  std::vector<double> update_norms;  // ||v_k - v_{k-1}||_Z
  double observed_ratio = 0.0;       // max successive update ratio above noise
  double contraction_bound = 0.0;    // (b-a)/2 K/m
  double residual = 0.0;             // ||u_t - M Lu - f||_q
  double residual_relative = 0.0;
  bool closeness_heuristic = false;
};

class ContractionDiverged : public std::runtime_error {
 public:
  ContractionDiverged(const std::string& what, double ratio)
      : std::runtime_error(what), observed_ratio(ratio) {}
  double observed_ratio;
};

/// Fixed point of v -> solution of (d_t - m L) w = -(m - M) Lv + f, m = (a+b)/2,
/// i.e. the backward-Euler solution of u_t - M Lu = f, u(0) = 0.
ContractionResult solve_dual_contraction(const DualProblem& prob, const ContractionOptions& opt = {});

enum class CoefficientPattern { Constant, Checkerboard, RandomTwoValued };
CoefficientPattern parse_pattern(const std::string& name);

/// Cellwise-constant M on the mesh: Constant = (a+b)/2, Checkerboard alternates
/// a/b over blocks of (block steps) x (block cells), RandomTwoValued draws a or b.
SpaceTimeSeries make_coefficient(const TimeMesh& mesh, CoefficientPattern pattern, double a,
                                 double b, std::size_t block = 1, std::uint64_t seed = 1);

struct PairingReport {
  double lhs;  // sum_{k>=1} <rho^k, phi^k> dt
  double rhs;  // <rho^0, v(0)>
  double relative_error;
  std::size_t iterations;
};

/// Duality audit for rho^k - dt L(M^k rho^k) = rho^{k-1}: solves the backward
/// dual v_t + M Lv = -phi, v(T) = 0 with the contraction solver and compares
/// both sides of sum <rho, phi> = <rho(0), v(0)>.
PairingReport dual_pairing_check(const SpaceTimeSeries& rho, const SpaceTimeSeries& M,
                                 const SpaceTimeSeries& phi);

}  // namespace coagdiff
