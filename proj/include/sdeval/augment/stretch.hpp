#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "sdeval/audio/buffer.hpp"
#include "sdeval/audio/fft.hpp"
#include "sdeval/augment/resample.hpp"
#include "sdeval/error.hpp"

namespace sdeval::augment {

// Analysis frame length for the phase vocoder: ~40 ms rounded up to a power of two.
inline std::size_t vocoder_frame_size(int sample_rate_hz) {
  return std::max<std::size_t>(256, audio::next_pow2(static_cast<std::size_t>(0.04 * sample_rate_hz)));
}

// Phase-vocoder time scaling of one channel. `speed` > 1 shortens the
// signal; the output has round(len / speed) samples and the same pitch.
inline std::vector<float> phase_vocoder(std::span<const float> x, double speed,
                                        int sample_rate_hz) {
  const std::size_t n_fft = vocoder_frame_size(sample_rate_hz);
  const std::size_t hop_out = n_fft / 4;
  const double hop_in = static_cast<double>(hop_out) * speed;
  const auto out_len = static_cast<std::size_t>(std::llround(static_cast<double>(x.size()) / speed));
  if (x.empty() || out_len == 0) return {};

  const std::size_t half = n_fft / 2;
  // Zero-padded copy so frame m can be read at padded[a_m, a_m + n_fft).
  std::vector<double> padded(half + x.size() + 2 * n_fft, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) padded[half + i] = x[i];

  std::vector<double> window(n_fft);
  for (std::size_t i = 0; i < n_fft; ++i) {
    window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / n_fft);
  }

  const std::size_t frames = (out_len + hop_out - 1) / hop_out + 2;
  std::vector<double> y(frames * hop_out + n_fft, 0.0);
  std::vector<double> wsum(y.size(), 0.0);

  audio::RealFft fft(n_fft);
  const std::size_t bins = fft.bins();
  std::vector<double> frame(n_fft);
  std::vector<std::complex<double>> spec;
  std::vector<double> prev_phase(bins, 0.0), out_phase(bins, 0.0);
  std::vector<double> synth;
  long long prev_pos = 0;

  for (std::size_t m = 0; m < frames; ++m) {
    const auto pos = std::llround(static_cast<double>(m) * hop_in);
    if (static_cast<std::size_t>(pos) + n_fft > padded.size()) break;
    for (std::size_t i = 0; i < n_fft; ++i) frame[i] = padded[static_cast<std::size_t>(pos) + i] * window[i];
    fft.forward(frame, spec);
    const double delta = static_cast<double>(pos - prev_pos);
    for (std::size_t k = 0; k < bins; ++k) {
      const double phase = std::arg(spec[k]);
      if (m == 0 || delta <= 0.0) {
        out_phase[k] = m == 0 ? phase : out_phase[k];
      } else {
        const double omega = 2.0 * std::numbers::pi * static_cast<double>(k) / n_fft;
        double dphi = phase - prev_phase[k] - omega * delta;
        dphi -= 2.0 * std::numbers::pi * std::round(dphi / (2.0 * std::numbers::pi));
        out_phase[k] += (omega + dphi / delta) * static_cast<double>(hop_out);
      }
      prev_phase[k] = phase;
      spec[k] = std::polar(std::abs(spec[k]), out_phase[k]);
    }
    prev_pos = pos;
    fft.inverse(spec, synth);
    const std::size_t base = m * hop_out;
    for (std::size_t i = 0; i < n_fft; ++i) {
      y[base + i] += synth[i] / static_cast<double>(n_fft) * window[i];
      wsum[base + i] += window[i] * window[i];
    }
  }

  std::vector<float> out(out_len);
  for (std::size_t i = 0; i < out_len; ++i) {
    const std::size_t j = half + i;
    out[i] = wsum[j] > 1e-6 ? static_cast<float>(y[j] / wsum[j]) : 0.0f;
  }
  return out;
}

struct TimeStretchLimits {
  static constexpr double kMin = 0.5;
  static constexpr double kMax = 2.0;
};

// Speeds audio up (factor > 1) or slows it down while keeping pitch.
// Multichannel input is downmixed first. Output is clip-guarded.
inline audio::AudioBuffer time_stretch(const audio::AudioBuffer& buf, double speed_factor,
                                       double* clip_fraction = nullptr) {
  if (!(speed_factor >= TimeStretchLimits::kMin && speed_factor <= TimeStretchLimits::kMax)) {
    fail(ErrorCode::kInvalidArgument, "speed factor must be in [0.5, 2.0]");
  }
  audio::AudioBuffer mono = audio::downmix(buf);
  if (speed_factor == 1.0) {
    if (clip_fraction) *clip_fraction = 0.0;
    return mono;
  }
  auto out = phase_vocoder(mono.channel(0), speed_factor, mono.sample_rate_hz());
  const double clipped = audio::hard_clip(out);
  if (clip_fraction) *clip_fraction = clipped;
  return audio::AudioBuffer::mono(std::move(out), mono.sample_rate_hz());
}

// Shifts pitch by `semitones` keeping duration: phase-vocoder stretch by the
// pitch ratio, then band-limited resampling back to the original length.
inline audio::AudioBuffer pitch_shift(const audio::AudioBuffer& buf, double semitones,
                                      double* clip_fraction = nullptr) {
  if (!(std::fabs(semitones) <= 12.0)) {
    fail(ErrorCode::kInvalidArgument, "pitch shift limited to +/-12 semitones");
  }
  audio::AudioBuffer mono = audio::downmix(buf);
  if (semitones == 0.0 || mono.frames() == 0) {
    if (clip_fraction) *clip_fraction = 0.0;
    return mono;
  }
  const double ratio = std::exp2(semitones / 12.0);
  const auto stretched = phase_vocoder(mono.channel(0), 1.0 / ratio, mono.sample_rate_hz());
  const double cutoff = kResampleRolloff * std::min(1.0, 1.0 / ratio);
  auto out = resample_at_step(stretched, ratio, mono.frames(), cutoff);
  const double clipped = audio::hard_clip(out);
  if (clip_fraction) *clip_fraction = clipped;
  return audio::AudioBuffer::mono(std::move(out), mono.sample_rate_hz());
}

}  // namespace sdeval::augment
