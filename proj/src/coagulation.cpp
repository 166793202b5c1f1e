#include "coagdiff/coagulation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace coagdiff {

namespace {

void require_nonempty(std::span<const double> c) {
  if (c.empty()) throw std::invalid_argument("coagulation: need n >= 1");
}

void require_phi(std::span<const double> c, std::span<const double> phi) {
  if (phi.size() < c.size()) throw std::invalid_argument("coagulation: phi shorter than c");
}

struct GroupedPair {
  double weight;
  double e1;
  double e2;
};

// Merges (w, e1, e2) and (w, e2, e1): both give the same convolution.
std::vector<GroupedPair> group_gain_terms(const std::vector<SeparableTerm>& terms) {
  std::vector<GroupedPair> out;
  for (const auto& t : terms) {
    const double lo = std::min(t.e1, t.e2);
    const double hi = std::max(t.e1, t.e2);
    auto it = std::find_if(out.begin(), out.end(),
                           [&](const GroupedPair& g) { return g.e1 == lo && g.e2 == hi; });
    if (it == out.end()) {
      out.push_back({t.weight, lo, hi});
    } else {
      it->weight += t.weight;
    }
  }
  return out;
}

double ipow(std::size_t i, double e) {
  return e == 0.0 ? 1.0 : (e == 1.0 ? static_cast<double>(i) : std::pow(static_cast<double>(i), e));
}

}  // namespace

std::vector<double> gain(std::span<const double> c, const KernelSpec& k) {
  require_nonempty(c);
  const std::size_t n = c.size();
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 2; i <= n; ++i) {
    double s = 0.0;
    for (std::size_t j = 1; j < i; ++j) s += k.eval(i - j, j) * c[i - j - 1] * c[j - 1];
    out[i - 1] = 0.5 * s;
  }
  return out;
}

std::vector<double> loss(std::span<const double> c, const KernelSpec& k) {
  require_nonempty(c);
  const std::size_t n = c.size();
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 1; i <= n; ++i) {
    double s = 0.0;
    for (std::size_t j = 1; j + i <= n; ++j) s += k.eval(i, j) * c[j - 1];
    out[i - 1] = c[i - 1] * s;
  }
  return out;
}

std::vector<double> q_truncated(std::span<const double> c, const KernelSpec& k) {
  auto g = gain(c, k);
  const auto l = loss(c, k);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] -= l[i];
  return g;
}

double weak_form_lhs(std::span<const double> c, const KernelSpec& k, std::span<const double> phi) {
  require_phi(c, phi);
  const auto q = q_truncated(c, k);
  double s = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) s += phi[i] * q[i];
  return s;
}

double weak_form_rhs(std::span<const double> c, const KernelSpec& k, std::span<const double> phi) {
  require_nonempty(c);
  require_phi(c, phi);
  const std::size_t n = c.size();
  double s = 0.0;
  for (std::size_t i = 1; i < n; ++i) {
    for (std::size_t j = 1; i + j <= n; ++j) {
      s += k.eval(i, j) * c[i - 1] * c[j - 1] * (phi[i + j - 1] - phi[i - 1] - phi[j - 1]);
    }
  }
  return 0.5 * s;
}

double weak_form_scale(std::span<const double> c, const KernelSpec& k,
                       std::span<const double> phi) {
  require_nonempty(c);
  require_phi(c, phi);
  const std::size_t n = c.size();
  double s = 0.0;
  for (std::size_t i = 1; i < n; ++i) {
    for (std::size_t j = 1; i + j <= n; ++j) {
      s += std::abs(k.eval(i, j) * c[i - 1] * c[j - 1]) *
           (std::abs(phi[i + j - 1]) + std::abs(phi[i - 1]) + std::abs(phi[j - 1]));
    }
  }
  return 0.5 * s;
}

std::vector<double> gain_fast(std::span<const double> c, const KernelSpec& k, Convolver& conv) {
  require_nonempty(c);
  if (!k.is_separable()) {
    throw std::invalid_argument("gain_fast: kernel '" + k.name() + "' is not separable");
  }
  const std::size_t n = c.size();
  std::vector<double> out(n, 0.0);
  if (n < 2) return out;
  std::vector<double> ua(n), ub(n), tmp(n - 1);
  for (const auto& g : group_gain_terms(k.separable_terms())) {
    for (std::size_t i = 1; i <= n; ++i) {
      ua[i - 1] = ipow(i, g.e1) * c[i - 1];
      ub[i - 1] = ipow(i, g.e2) * c[i - 1];
    }
    conv.convolve(ua, ub, tmp);
    // (ua * ub)[i-2] = sum_{j=1}^{i-1} ua(i-j) ub(j)
    for (std::size_t i = 2; i <= n; ++i) out[i - 1] += 0.5 * g.weight * tmp[i - 2];
  }
  return out;
}

CoagulationOperator::CoagulationOperator(const KernelSpec& kernel, std::size_t n,
                                         GainEvaluator evaluator)
    : kernel_(kernel), n_(n), evaluator_(evaluator), separable_(kernel.is_separable()) {
  if (n_ == 0) throw std::invalid_argument("CoagulationOperator: need n >= 1");
  if (n_ > kernel_.n_max()) {
    throw std::out_of_range("CoagulationOperator: n exceeds kernel table size");
  }
  if (!separable_) {
    if (evaluator_ == GainEvaluator::Fft) {
      throw std::invalid_argument("CoagulationOperator: fft evaluator needs a separable kernel");
    }
    table_.resize(n_ * n_);
    for (std::size_t i = 1; i <= n_; ++i)
      for (std::size_t j = 1; j <= n_; ++j) table_[(i - 1) * n_ + (j - 1)] = kernel_.eval(i, j);
    return;
  }

  auto exponent_index = [&](double e) {
    auto it = std::find(exponents_.begin(), exponents_.end(), e);
    if (it != exponents_.end()) return static_cast<std::size_t>(it - exponents_.begin());
    exponents_.push_back(e);
    return exponents_.size() - 1;
  };
  for (const auto& g : group_gain_terms(kernel_.separable_terms())) {
    gain_pairs_.push_back({g.weight, exponent_index(g.e1), exponent_index(g.e2)});
  }
  for (const auto& t : kernel_.separable_terms()) {
    loss_terms_.push_back({t.weight, exponent_index(t.e1), exponent_index(t.e2)});
  }
  powers_.resize(exponents_.size());
  for (std::size_t e = 0; e < exponents_.size(); ++e) {
    powers_[e].resize(n_);
    for (std::size_t i = 1; i <= n_; ++i) powers_[e][i - 1] = ipow(i, exponents_[e]);
  }
}

CoagulationOperator::Workspace CoagulationOperator::make_workspace() const {
  Workspace ws;
  ws.factors.assign(exponents_.size(), std::vector<double>(n_));
  ws.prefix.assign(exponents_.size(), std::vector<double>(n_ + 1));
  ws.conv.resize(n_);
  ws.gain.resize(n_);
  if (evaluator_ == GainEvaluator::Fft) ws.fft = std::make_unique<FftConvolver>();
  return ws;
}

void CoagulationOperator::fill_factors(std::span<const double> c, Workspace& ws) const {
  for (std::size_t e = 0; e < exponents_.size(); ++e) {
    auto& f = ws.factors[e];
    auto& p = ws.prefix[e];
    const auto& pw = powers_[e];
    p[0] = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      f[i] = pw[i] * c[i];
      p[i + 1] = p[i] + f[i];
    }
  }
}

void CoagulationOperator::compute_gain(Workspace& ws, std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  if (n_ < 2) return;
  for (const auto& g : gain_pairs_) {
    const double* ua = ws.factors[g.a].data();
    const double* ub = ws.factors[g.b].data();
    const double w = 0.5 * g.weight;
    if (evaluator_ == GainEvaluator::Fft) {
      std::span<double> tmp(ws.conv.data(), n_ - 1);
      ws.fft->convolve(ws.factors[g.a], ws.factors[g.b], tmp);
      for (std::size_t i = 2; i <= n_; ++i) out[i - 1] += w * tmp[i - 2];
      continue;
    }
    for (std::size_t i = 2; i <= n_; ++i) {
      // sum_{j=1}^{i-1} ua(i-j) ub(j); four interleaved partial sums in a
      // fixed pattern, so the result does not depend on the thread count.
      const std::size_t m = i - 1;
      double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
      std::size_t j = 0;
      for (; j + 4 <= m; j += 4) {
        s0 += ua[m - 1 - j] * ub[j];
        s1 += ua[m - 2 - j] * ub[j + 1];
        s2 += ua[m - 3 - j] * ub[j + 2];
        s3 += ua[m - 4 - j] * ub[j + 3];
      }
      for (; j < m; ++j) s0 += ua[m - 1 - j] * ub[j];
      out[i - 1] += w * ((s0 + s1) + (s2 + s3));
    }
  }
}

void CoagulationOperator::gain_and_rate(std::span<const double> c, std::span<double> g,
                                        std::span<double> rate, Workspace& ws) const {
  if (c.size() != n_ || g.size() != n_ || rate.size() != n_) {
    throw std::invalid_argument("CoagulationOperator: size mismatch");
  }
  if (!separable_) {
    for (std::size_t i = 1; i <= n_; ++i) {
      double s = 0.0;
      for (std::size_t j = 1; j < i; ++j) s += table_[(i - j - 1) * n_ + (j - 1)] * c[i - j - 1] * c[j - 1];
      g[i - 1] = 0.5 * s;
      const double* row = &table_[(i - 1) * n_];
      double r = 0.0;
      for (std::size_t j = 1; j + i <= n_; ++j) r += row[j - 1] * c[j - 1];
      rate[i - 1] = r;
    }
    return;
  }
  rates(c, rate, ws);
  compute_gain(ws, g);
}

void CoagulationOperator::apply(std::span<const double> c, std::span<double> q,
                                Workspace& ws) const {
  if (q.size() != n_) throw std::invalid_argument("CoagulationOperator: size mismatch");
  ws.gain.resize(n_);
  gain_and_rate(c, q, ws.gain, ws);
  // q holds gain, ws.gain holds the rate
  for (std::size_t i = 0; i < n_; ++i) q[i] -= c[i] * ws.gain[i];
}

void CoagulationOperator::rates(std::span<const double> c, std::span<double> rate,
                                Workspace& ws) const {
  if (c.size() != n_ || rate.size() != n_) throw std::invalid_argument("CoagulationOperator: size mismatch");
  if (!separable_) {
    for (std::size_t i = 1; i <= n_; ++i) {
      const double* row = &table_[(i - 1) * n_];
      double r = 0.0;
      for (std::size_t j = 1; j + i <= n_; ++j) r += row[j - 1] * c[j - 1];
      rate[i - 1] = r;
    }
    return;
  }
  fill_factors(c, ws);
  for (std::size_t i = 1; i <= n_; ++i) {
    double r = 0.0;
    for (const auto& t : loss_terms_) r += t.weight * powers_[t.own][i - 1] * ws.prefix[t.other][n_ - i];
    rate[i - 1] = r;
  }
}

double CoagulationOperator::max_rate(std::span<const double> c, Workspace& ws) const {
  ws.gain.resize(n_);
  rates(c, ws.gain, ws);
  return *std::max_element(ws.gain.begin(), ws.gain.end());
}

}  // namespace coagdiff
