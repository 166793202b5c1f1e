#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "coagdiff/coagulation.hpp"
#include "coagdiff/diffusion_profile.hpp"
#include "coagdiff/grid.hpp"
#include "coagdiff/kernels.hpp"

namespace coagdiff {

/// Concentrations c_i(x_j), i = 1..n, on `cells` cells. Storage is cell-major:
/// the n species of one cell are contiguous. cells == 1 is the spatially
/// homogeneous system (no diffusion, unit cell width).
class ClusterField {
 public:
  ClusterField(std::size_t n, std::size_t cells);

  std::size_t species() const { return n_; }
  std::size_t cells() const { return cells_; }
  double cell_width() const { return 1.0 / static_cast<double>(cells_); }

  std::span<double> cell(std::size_t j) { return {data_.data() + j * n_, n_}; }
  std::span<const double> cell(std::size_t j) const { return {data_.data() + j * n_, n_}; }
  /// c_i at cell j, i >= 1.
  double& at(std::size_t i, std::size_t j) { return data_[j * n_ + (i - 1)]; }
  double at(std::size_t i, std::size_t j) const { return data_[j * n_ + (i - 1)]; }

  std::span<const double> values() const { return data_; }
  std::span<double> values() { return data_; }

  double t = 0.0;

 private:
  std::size_t n_;
  std::size_t cells_;
  std::vector<double> data_;
};

enum class ReactionScheme { ExplicitRK4, SemiImplicitLoss };

struct InitialData {
  enum class Family { Monodisperse, Geometric, Table };
  Family family = Family::Geometric;
  double rho0 = 1.0;       // spatial profile rho(x) = rho0 + amplitude cos(pi x)
  double amplitude = 0.0;
  double ratio = 0.5;      // geometric size ratio r
  std::filesystem::path table;  // CSV "i,cell,c"

  double profile(double x) const;
};

struct SimConfig {
  KernelSpec kernel = KernelSpec::sum_power(1.0, 0.5);
  DiffusionProfile diffusion = DiffusionProfile::limit(1.0, 1.0, 1.0);
  std::size_t n = 64;
  std::size_t cells = 32;  // 1 = homogeneous
  double dt = 1e-3;
  double T = 1.0;
  InitialData initial;
  ReactionScheme scheme = ReactionScheme::ExplicitRK4;
  GainEvaluator evaluator = GainEvaluator::Direct;

  double rk4_rate_cap = 2.0;          // substep so that dt_sub * max_i lambda_i <= cap
  double negativity_tolerance = 1e-14;  // relative to the cell's max concentration
  int max_halvings = 16;

  std::size_t output_stride = 1;
  bool store_states = false;
  std::vector<double> moment_orders{0.0, 1.0, 2.0};
  std::vector<double> norm_exponents{2.0};
  std::optional<std::size_t> tail_index;
  double tail_closeness = 0.05;
  std::size_t tracked_species = 8;
};

/// Thrown when an RK4 reaction step leaves the positivity band.
class StepRejected : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrajectoryRecord;

/// Solver failure; carries the trajectory recorded up to the failure.
class SolverAbort : public std::runtime_error {
 public:
  SolverAbort(const std::string& what, std::shared_ptr<TrajectoryRecord> partial)
      : std::runtime_error(what), partial_(std::move(partial)) {}
  const std::shared_ptr<TrajectoryRecord>& partial() const { return partial_; }

 private:
  std::shared_ptr<TrajectoryRecord> partial_;
};

struct TrajectoryRecord {
  std::size_t n = 0;
  std::size_t cells = 0;
  std::size_t tail_index = 1;
  std::vector<double> times;          // every accepted step, starting at 0
  std::vector<double> mass;           // integral of rho_1
  std::vector<double> tail_mass;      // integral of sum_{i > n/2} i c_i
  std::map<double, std::vector<double>> moment_integrals;  // k -> integral of rho_k per step
  std::vector<double> species_sup;    // max over space-time of c_i, i = 1..tracked
  std::vector<double> output_times;
  std::map<double, std::vector<std::vector<double>>> moment_frames;  // k -> frames at output times
  std::vector<ClusterField> states;   // at output times when requested
  std::map<std::pair<double, double>, double> moment_norms;  // (k, p) -> ||rho_k||_{L^p(Omega_T)}
  std::size_t rejected_steps = 0;
  std::size_t reaction_substeps = 0;
  double wall_seconds = 0.0;

  double mass_drift_relative() const;
  /// Moment frames as a space-time series (spatial runs only).
  SpaceTimeSeries moment_series(double k) const;
};

/// Callbacks used by audits; invoked on the calling thread.
struct RunHooks {
  /// After initialisation and after every diffusion half-step.
  std::function<void(const ClusterField&)> after_diffusion;
};

ClusterField make_initial_state(const SimConfig& cfg);

/// Per-worker scratch for reaction steps.
struct ReactionWorkspace {
  explicit ReactionWorkspace(const CoagulationOperator& op);
  CoagulationOperator::Workspace coag;
  std::vector<double> k1, k2, k3, k4, stage, gain, rate, start;
};

/// One reaction step of length dt on a single cell. ExplicitRK4 throws
/// StepRejected when an entry drops below -tol * max(c).
void reaction_step_cell(std::span<double> c, const CoagulationOperator& op, double dt,
                        ReactionScheme scheme, double tol, ReactionWorkspace& ws);

/// Reaction over all cells (parallel over cells). Each cell is sub-cycled to
/// respect the RK4 rate cap and halved on rejection; returns the number of
/// rejected attempts.
std::size_t reaction_substep(ClusterField& state, const CoagulationOperator& op, double dt,
                             const SimConfig& cfg, std::size_t* substeps = nullptr);

/// Backward-Euler diffusion of every species over dt (parallel over species).
void diffusion_substep(ClusterField& state, const Grid1D& grid, const DiffusionProfile& d,
                       double dt);

/// Diffusion(dt/2), reaction(dt), diffusion(dt/2). Homogeneous fields skip
/// the diffusion parts.
std::size_t strang_step(ClusterField& state, const CoagulationOperator& op, const SimConfig& cfg,
                        const RunHooks* hooks = nullptr, std::size_t* substeps = nullptr);

std::vector<double> moment_field(const ClusterField& s, double k);
std::vector<double> tail_moment_field(const ClusterField& s, double k, std::size_t I);
/// Tail-weighted mean of d_i; cells with zero tail moment get the limit d_inf.
std::vector<double> averaged_diffusivity_field(const ClusterField& s, const DiffusionProfile& d,
                                               double k, std::size_t I);

struct PsiBounds {
  double mu1;
  double mu2;
};
/// mu1 = max_x 2C sum_{i<I} i^2 c_i, mu2 = max_x psi1 sum_{j<I} j c_j.
PsiBounds psi_bounds(const ClusterField& s, std::size_t I, double C);

/// Integral over the domain of a cell field.
double domain_integral(const ClusterField& s, std::span<const double> field);

TrajectoryRecord run(const SimConfig& cfg, const RunHooks* hooks = nullptr);

}  // namespace coagdiff
