#pragma once

#include <fftw3.h>

#include <complex>

namespace s2opt::detail {

// FFTW plans for one ring length. Planning is serialized; execution through
// the new-array interface is thread safe.
struct FftPlans {
  explicit FftPlans(int n);
  ~FftPlans();
  FftPlans(const FftPlans&) = delete;
  FftPlans& operator=(const FftPlans&) = delete;

  /// out[k] = sum_p in[p] exp(-2 pi i k p / n)
  void forward(const std::complex<double>* in, std::complex<double>* out) const;
  /// out[p] = sum_k in[k] exp(+2 pi i k p / n)
  void backward(const std::complex<double>* in, std::complex<double>* out) const;

  int n;
  fftw_plan fwd = nullptr;
  fftw_plan bwd = nullptr;
};

}  // namespace s2opt::detail
