#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace coagdiff {

/// Linear (acyclic) convolution provider, truncated to out.size() entries:
/// out[m] = sum_p a[p] b[m-p].
class Convolver {
 public:
  virtual ~Convolver() = default;
  virtual void convolve(std::span<const double> a, std::span<const double> b,
                        std::span<double> out) = 0;
};

/// O(n^2) reference, ascending summation order.
class DirectConvolver final : public Convolver {
 public:
  void convolve(std::span<const double> a, std::span<const double> b,
                std::span<double> out) override;
};

/// FFT convolution via FFTW real transforms with zero padding to a power of
/// two >= 2n. One instance per worker; plans are rebuilt when the size grows.
class FftConvolver final : public Convolver {
 public:
  FftConvolver();
  ~FftConvolver() override;
  FftConvolver(const FftConvolver&) = delete;
  FftConvolver& operator=(const FftConvolver&) = delete;

  void convolve(std::span<const double> a, std::span<const double> b,
                std::span<double> out) override;

  std::size_t transform_size() const { return size_; }

 private:
  void prepare(std::size_t size);

  struct Plans;
  std::unique_ptr<Plans> plans_;
  std::size_t size_ = 0;
};

}  // namespace coagdiff
