#include "coagdiff/convolution.hpp"

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <mutex>
#include <stdexcept>

namespace coagdiff {

void DirectConvolver::convolve(std::span<const double> a, std::span<const double> b,
                               std::span<double> out) {
  for (std::size_t m = 0; m < out.size(); ++m) {
    double s = 0.0;
    const std::size_t lo = m >= b.size() ? m - b.size() + 1 : 0;
    const std::size_t hi = std::min(m + 1, a.size());
    for (std::size_t p = lo; p < hi; ++p) s += a[p] * b[m - p];
    out[m] = s;
  }
}

namespace {
// FFTW planning is not thread-safe.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

struct FftConvolver::Plans {
  double* real_a = nullptr;
  double* real_b = nullptr;
  fftw_complex* spec_a = nullptr;
  fftw_complex* spec_b = nullptr;
  fftw_plan fwd_a = nullptr;
  fftw_plan fwd_b = nullptr;
  fftw_plan inv = nullptr;

  ~Plans() {
    std::lock_guard lock(planner_mutex());
    if (fwd_a) fftw_destroy_plan(fwd_a);
    if (fwd_b) fftw_destroy_plan(fwd_b);
    if (inv) fftw_destroy_plan(inv);
    fftw_free(real_a);
    fftw_free(real_b);
    fftw_free(spec_a);
    fftw_free(spec_b);
  }
};

FftConvolver::FftConvolver() = default;
FftConvolver::~FftConvolver() = default;

void FftConvolver::prepare(std::size_t size) {
  if (size <= size_) return;
  plans_.reset();
  auto p = std::make_unique<Plans>();
  const std::size_t nc = size / 2 + 1;
  {
    std::lock_guard lock(planner_mutex());
    p->real_a = fftw_alloc_real(size);
    p->real_b = fftw_alloc_real(size);
    p->spec_a = fftw_alloc_complex(nc);
    p->spec_b = fftw_alloc_complex(nc);
    if (!p->real_a || !p->real_b || !p->spec_a || !p->spec_b) throw std::bad_alloc();
    const int n = static_cast<int>(size);
    p->fwd_a = fftw_plan_dft_r2c_1d(n, p->real_a, p->spec_a, FFTW_ESTIMATE);
    p->fwd_b = fftw_plan_dft_r2c_1d(n, p->real_b, p->spec_b, FFTW_ESTIMATE);
    p->inv = fftw_plan_dft_c2r_1d(n, p->spec_a, p->real_a, FFTW_ESTIMATE);
  }
  plans_ = std::move(p);
  size_ = size;
}

void FftConvolver::convolve(std::span<const double> a, std::span<const double> b,
                            std::span<double> out) {
  if (out.empty()) return;
  if (a.empty() || b.empty()) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  const std::size_t need = std::max(a.size(), b.size());
  const std::size_t size = std::bit_ceil(std::max<std::size_t>(2 * need, 2));
  prepare(size);
  Plans& p = *plans_;
  std::fill(p.real_a, p.real_a + size_, 0.0);
  std::fill(p.real_b, p.real_b + size_, 0.0);
  std::copy(a.begin(), a.end(), p.real_a);
  std::copy(b.begin(), b.end(), p.real_b);
  fftw_execute(p.fwd_a);
  fftw_execute(p.fwd_b);
  const std::size_t nc = size_ / 2 + 1;
  for (std::size_t k = 0; k < nc; ++k) {
    const double re = p.spec_a[k][0] * p.spec_b[k][0] - p.spec_a[k][1] * p.spec_b[k][1];
    const double im = p.spec_a[k][0] * p.spec_b[k][1] + p.spec_a[k][1] * p.spec_b[k][0];
    p.spec_a[k][0] = re;
    p.spec_a[k][1] = im;
  }
  fftw_execute(p.inv);
  const double scale = 1.0 / static_cast<double>(size_);
  const std::size_t full = a.size() + b.size() - 1;
  for (std::size_t m = 0; m < out.size(); ++m) out[m] = m < full ? p.real_a[m] * scale : 0.0;
}

}  // namespace coagdiff
