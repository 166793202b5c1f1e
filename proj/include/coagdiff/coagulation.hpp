#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "coagdiff/convolution.hpp"
#include "coagdiff/kernels.hpp"

namespace coagdiff {

// Truncated coagulation operator on one concentration vector c_1..c_n
// (c[0] holds c_1). Loss sums stop at j = n - i, so sum_i i Q_i = 0.
//
// The free functions below are the serial reference path: literal sums over
// the kernel, ascending j. CoagulationOperator is the production path used by
// the simulator.

std::vector<double> gain(std::span<const double> c, const KernelSpec& k);
std::vector<double> loss(std::span<const double> c, const KernelSpec& k);
std::vector<double> q_truncated(std::span<const double> c, const KernelSpec& k);

/// sum_{i<=n} phi_i Q_i^n(c); phi[0] holds phi_1, phi.size() >= n.
double weak_form_lhs(std::span<const double> c, const KernelSpec& k, std::span<const double> phi);
/// 1/2 sum_{i+j<=n} a_ij c_i c_j (phi_{i+j} - phi_i - phi_j)
double weak_form_rhs(std::span<const double> c, const KernelSpec& k, std::span<const double> phi);
/// sum_{i+j<=n} |1/2 a_ij c_i c_j| (|phi_{i+j}| + |phi_i| + |phi_j|), the size of the rhs summands.
double weak_form_scale(std::span<const double> c, const KernelSpec& k, std::span<const double> phi);

/// Gain term by fast convolution of the kernel's factor sequences.
/// Throws std::invalid_argument for non-separable (Table) kernels.
std::vector<double> gain_fast(std::span<const double> c, const KernelSpec& k, Convolver& conv);

enum class GainEvaluator { Direct, Fft };

/// Precomputed evaluator for Q^n at fixed n. Immutable and shareable across
/// threads; each worker passes its own Workspace.
class CoagulationOperator {
 public:
  struct Workspace {
    std::vector<std::vector<double>> factors;  // i^e c_i per distinct exponent
    std::vector<std::vector<double>> prefix;   // prefix sums of factors
    std::vector<double> conv;
    std::vector<double> gain;
    std::unique_ptr<FftConvolver> fft;
  };

  CoagulationOperator(const KernelSpec& kernel, std::size_t n,
                      GainEvaluator evaluator = GainEvaluator::Direct);

  std::size_t size() const { return n_; }
  const KernelSpec& kernel() const { return kernel_; }
  GainEvaluator evaluator() const { return evaluator_; }

  Workspace make_workspace() const;

  /// q = gain - loss
  void apply(std::span<const double> c, std::span<double> q, Workspace& ws) const;
  /// gain_i and loss rate lambda_i = sum_{j<=n-i} a_ij c_j (so loss_i = c_i lambda_i).
  void gain_and_rate(std::span<const double> c, std::span<double> gain,
                     std::span<double> rate, Workspace& ws) const;
  /// Loss rates lambda_i only.
  void rates(std::span<const double> c, std::span<double> rate, Workspace& ws) const;
  /// max_i lambda_i(c), the stiffness scale of the reaction step.
  double max_rate(std::span<const double> c, Workspace& ws) const;

 private:
  struct GainPair {
    double weight;
    std::size_t a;  // indices into exponents_
    std::size_t b;
  };
  struct LossTerm {
    double weight;
    std::size_t own;   // exponent index applied to i
    std::size_t other; // exponent index summed over j
  };

  void fill_factors(std::span<const double> c, Workspace& ws) const;
  void compute_gain(Workspace& ws, std::span<double> gain) const;

  KernelSpec kernel_;
  std::size_t n_;
  GainEvaluator evaluator_;
  bool separable_;
  std::vector<double> exponents_;
  std::vector<std::vector<double>> powers_;  // powers_[e][i-1] = i^exponents_[e]
  std::vector<GainPair> gain_pairs_;
  std::vector<LossTerm> loss_terms_;
  std::vector<double> table_;  // n x n rates when not separable
};

}  // namespace coagdiff
