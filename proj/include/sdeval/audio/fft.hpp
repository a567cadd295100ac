#pragma once

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "sdeval/error.hpp"

namespace sdeval::audio {

// FFTW's planner is not thread-safe; execution on distinct plans is.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

// Real-input FFT of a fixed size n: forward gives n/2+1 bins, inverse is
// unnormalized (returns n * x for a forward/inverse round trip).
class RealFft {
 public:
  explicit RealFft(std::size_t n) : n_(n) {
    if (n == 0) fail(ErrorCode::kInvalidArgument, "fft size must be positive");
    time_.reset(fftw_alloc_real(n));
    freq_.reset(fftw_alloc_complex(n / 2 + 1));
    std::lock_guard lock(fftw_planner_mutex());
    fwd_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), time_.get(), freq_.get(), FFTW_ESTIMATE);
    inv_ = fftw_plan_dft_c2r_1d(static_cast<int>(n), freq_.get(), time_.get(), FFTW_ESTIMATE);
  }
  ~RealFft() {
    std::lock_guard lock(fftw_planner_mutex());
    if (fwd_) fftw_destroy_plan(fwd_);
    if (inv_) fftw_destroy_plan(inv_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::size_t size() const { return n_; }
  std::size_t bins() const { return n_ / 2 + 1; }

  // Zero-pads (or truncates) the input to n.
  void forward(std::span<const double> x, std::vector<std::complex<double>>& out) {
    for (std::size_t i = 0; i < n_; ++i) time_.get()[i] = i < x.size() ? x[i] : 0.0;
    fftw_execute(fwd_);
    out.resize(bins());
    for (std::size_t k = 0; k < bins(); ++k) out[k] = {freq_.get()[k][0], freq_.get()[k][1]};
  }

  void inverse(std::span<const std::complex<double>> spec, std::vector<double>& out) {
    for (std::size_t k = 0; k < bins(); ++k) {
      const auto v = k < spec.size() ? spec[k] : std::complex<double>{};
      freq_.get()[k][0] = v.real();
      freq_.get()[k][1] = v.imag();
    }
    fftw_execute(inv_);
    out.assign(time_.get(), time_.get() + n_);
  }

 private:
  struct RealFree {
    void operator()(double* p) const { fftw_free(p); }
  };
  struct ComplexFree {
    void operator()(fftw_complex* p) const { fftw_free(p); }
  };

  std::size_t n_;
  std::unique_ptr<double, RealFree> time_;
  std::unique_ptr<fftw_complex, ComplexFree> freq_;
  fftw_plan fwd_ = nullptr;
  fftw_plan inv_ = nullptr;
};

inline std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace sdeval::audio
