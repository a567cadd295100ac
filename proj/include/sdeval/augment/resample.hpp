#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "sdeval/audio/buffer.hpp"
#include "sdeval/error.hpp"

// Band-limited resampling with a Kaiser-windowed sinc kernel.
//
// Kernel: h(d) = c * sinc(c * d) * kaiser(c * d / Z), d in input samples,
// with c = kRolloff * min(1, fs_out / fs_in) the cutoff as a fraction of the
// input Nyquist rate and Z = kZeroCrossings. The passband therefore ends at
// 0.94 * min(fs_in, fs_out) / 2; Kaiser beta 8.6 puts the first stopband
// sidelobe near -86 dB.

namespace sdeval::augment {

inline constexpr double kResampleKaiserBeta = 8.6;
inline constexpr int kResampleZeroCrossings = 32;
inline constexpr double kResampleRolloff = 0.94;

namespace detail {

// Windowed sinc sampled on a fine grid over [0, Z] zero crossings.
class SincTable {
 public:
  static constexpr int kOversample = 512;

  static const SincTable& instance() {
    static const SincTable table;
    return table;
  }

  // u in zero-crossing units; 0 outside [-Z, Z].
  double eval(double u) const {
    u = std::fabs(u);
    const double pos = u * kOversample;
    const auto i = static_cast<std::size_t>(pos);
    if (i + 1 >= values_.size()) return 0.0;
    const double frac = pos - static_cast<double>(i);
    return values_[i] + frac * (values_[i + 1] - values_[i]);
  }

 private:
  SincTable() {
    const int n = kResampleZeroCrossings * kOversample + 2;
    values_.resize(n);
    const double i0_beta = std::cyl_bessel_i(0.0, kResampleKaiserBeta);
    for (int i = 0; i < n; ++i) {
      const double u = static_cast<double>(i) / kOversample;
      const double r = u / kResampleZeroCrossings;
      if (r >= 1.0) {
        values_[i] = 0.0;
        continue;
      }
      const double sinc = u == 0.0 ? 1.0 : std::sin(std::numbers::pi * u) / (std::numbers::pi * u);
      const double win =
          std::cyl_bessel_i(0.0, kResampleKaiserBeta * std::sqrt(1.0 - r * r)) / i0_beta;
      values_[i] = sinc * win;
    }
  }

  std::vector<double> values_;
};

}  // namespace detail

// Evaluates the band-limited interpolant of x at positions n * step for
// n in [0, out_len). `cutoff` is the normalized cutoff (fraction of the input
// Nyquist rate) in (0, 1]. Samples outside x are treated as zero.
inline std::vector<float> resample_at_step(std::span<const float> x, double step,
                                           std::size_t out_len, double cutoff) {
  const auto& table = detail::SincTable::instance();
  const double half_width = kResampleZeroCrossings / cutoff;
  const auto n_in = static_cast<long long>(x.size());
  std::vector<float> out(out_len);
  for (std::size_t n = 0; n < out_len; ++n) {
    const double t = static_cast<double>(n) * step;
    const auto lo = std::max<long long>(0, static_cast<long long>(std::ceil(t - half_width)));
    const auto hi = std::min<long long>(n_in - 1, static_cast<long long>(std::floor(t + half_width)));
    double acc = 0.0;
    for (long long k = lo; k <= hi; ++k) {
      acc += x[static_cast<std::size_t>(k)] * table.eval(cutoff * (t - static_cast<double>(k)));
    }
    out[n] = static_cast<float>(acc * cutoff);
  }
  return out;
}

// Resamples every channel to target_rate_hz. Same-rate requests return the
// input unchanged.
inline audio::AudioBuffer resample(const audio::AudioBuffer& buf, int target_rate_hz) {
  if (target_rate_hz < 1000) {
    fail(ErrorCode::kInvalidArgument, "target rate must be >= 1000 Hz, got " +
                                          std::to_string(target_rate_hz));
  }
  const int in_rate = buf.sample_rate_hz();
  if (target_rate_hz == in_rate) return buf;
  const double step = static_cast<double>(in_rate) / target_rate_hz;
  const double cutoff = kResampleRolloff * std::min(1.0, static_cast<double>(target_rate_hz) / in_rate);
  const auto out_len = static_cast<std::size_t>(
      std::llround(static_cast<double>(buf.frames()) * target_rate_hz / in_rate));
  std::vector<std::vector<float>> channels;
  for (std::size_t c = 0; c < buf.channel_count(); ++c) {
    channels.push_back(resample_at_step(buf.channel(c), step, out_len, cutoff));
  }
  return audio::AudioBuffer(std::move(channels), target_rate_hz);
}

}  // namespace sdeval::augment
