#include "coagdiff/diffusion_profile.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace coagdiff {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

double limit_at(const diffusion_family::Limit& f, std::size_t i) {
  return f.d_inf + f.A / std::pow(static_cast<double>(i), f.r);
}

void validate_limit(const diffusion_family::Limit& f) {
  if (!(f.d_inf > 0.0) || !std::isfinite(f.A) || !(f.r > 0.0)) {
    throw std::invalid_argument("diffusion: limit family needs d_inf > 0, finite A, r > 0");
  }
  if (f.d_inf + std::min(f.A, 0.0) <= 0.0) {
    throw std::invalid_argument("diffusion: limit family must stay positive (d_inf + A > 0)");
  }
}

// A Limit tail is monotone in i, so its bounds over i >= from are its value at
// `from` and the limit.
std::pair<double, double> limit_bounds(const diffusion_family::Limit& f, std::size_t from) {
  const double first = limit_at(f, from);
  return {std::min(first, f.d_inf), std::max(first, f.d_inf)};
}

}  // namespace

DiffusionProfile::DiffusionProfile(Family family) : family_(std::move(family)) {
  std::visit(overloaded{
                 [](const diffusion_family::Constant& f) {
                   if (!(f.d > 0.0) || !std::isfinite(f.d)) {
                     throw std::invalid_argument("diffusion: constant rate must be > 0");
                   }
                 },
                 [](const diffusion_family::Limit& f) { validate_limit(f); },
                 [](const diffusion_family::ExplicitList& f) {
                   validate_limit(f.tail);
                   for (double d : f.values) {
                     if (!(d > 0.0) || !std::isfinite(d)) {
                       throw std::invalid_argument("diffusion: explicit rates must be > 0");
                     }
                   }
                 },
             },
             family_);
}

double DiffusionProfile::operator()(std::size_t i) const {
  if (i == 0) throw std::out_of_range("diffusion: cluster sizes start at 1");
  return std::visit(overloaded{
                        [](const diffusion_family::Constant& f) { return f.d; },
                        [&](const diffusion_family::Limit& f) { return limit_at(f, i); },
                        [&](const diffusion_family::ExplicitList& f) {
                          return i <= f.values.size() ? f.values[i - 1] : limit_at(f.tail, i);
                        },
                    },
                    family_);
}

double DiffusionProfile::limit_value() const {
  return std::visit(overloaded{
                        [](const diffusion_family::Constant& f) { return f.d; },
                        [](const diffusion_family::Limit& f) { return f.d_inf; },
                        [](const diffusion_family::ExplicitList& f) { return f.tail.d_inf; },
                    },
                    family_);
}

double DiffusionProfile::tail_inf(std::size_t from) const {
  from = std::max<std::size_t>(from, 1);
  return std::visit(overloaded{
                        [](const diffusion_family::Constant& f) { return f.d; },
                        [&](const diffusion_family::Limit& f) { return limit_bounds(f, from).first; },
                        [&](const diffusion_family::ExplicitList& f) {
                          const std::size_t L = f.values.size();
                          double lo = limit_bounds(f.tail, std::max(from, L + 1)).first;
                          for (std::size_t i = from; i <= L; ++i) lo = std::min(lo, f.values[i - 1]);
                          return lo;
                        },
                    },
                    family_);
}

double DiffusionProfile::tail_sup(std::size_t from) const {
  from = std::max<std::size_t>(from, 1);
  return std::visit(overloaded{
                        [](const diffusion_family::Constant& f) { return f.d; },
                        [&](const diffusion_family::Limit& f) { return limit_bounds(f, from).second; },
                        [&](const diffusion_family::ExplicitList& f) {
                          const std::size_t L = f.values.size();
                          double hi = limit_bounds(f.tail, std::max(from, L + 1)).second;
                          for (std::size_t i = from; i <= L; ++i) hi = std::max(hi, f.values[i - 1]);
                          return hi;
                        },
                    },
                    family_);
}

std::size_t DiffusionProfile::default_tail_index(double ratio, std::size_t cap) const {
  for (std::size_t I = 1; I < cap; ++I) {
    const double lo = tail_inf(I);
    const double hi = tail_sup(I);
    if ((hi - lo) / (hi + lo) <= ratio) return I;
  }
  return std::max<std::size_t>(cap, 1);
}

}  // namespace coagdiff
