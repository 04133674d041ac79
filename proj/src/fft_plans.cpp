#include "fft_plans.hpp"

#include <mutex>
#include <vector>

namespace s2opt::detail {
namespace {
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

FftPlans::FftPlans(int len) : n(len) {
  std::lock_guard lock(planner_mutex());
  std::vector<std::complex<double>> a(n), b(n);
  auto* in = reinterpret_cast<fftw_complex*>(a.data());
  auto* out = reinterpret_cast<fftw_complex*>(b.data());
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  fwd = fftw_plan_dft_1d(n, in, out, FFTW_FORWARD, flags);
  bwd = fftw_plan_dft_1d(n, in, out, FFTW_BACKWARD, flags);
}

FftPlans::~FftPlans() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(fwd);
  fftw_destroy_plan(bwd);
}

void FftPlans::forward(const std::complex<double>* in, std::complex<double>* out) const {
  fftw_execute_dft(fwd, reinterpret_cast<fftw_complex*>(const_cast<std::complex<double>*>(in)),
                   reinterpret_cast<fftw_complex*>(out));
}

void FftPlans::backward(const std::complex<double>* in, std::complex<double>* out) const {
  fftw_execute_dft(bwd, reinterpret_cast<fftw_complex*>(const_cast<std::complex<double>*>(in)),
                   reinterpret_cast<fftw_complex*>(out));
}

}  // namespace s2opt::detail
