#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "sdeval/audio/buffer.hpp"
#include "sdeval/error.hpp"

namespace sdeval::augment {

// Second-order IIR section, transposed direct form II, double state.
struct Biquad {
  double b0 = 1, b1 = 0, b2 = 0, a1 = 0, a2 = 0;
  double z1 = 0, z2 = 0;

  double process(double x) {
    const double y = b0 * x + z1;
    z1 = b1 * x - a1 * y + z2;
    z2 = b2 * x - a2 * y;
    return y;
  }

  // Cookbook low/high-pass at f0 with quality q (bilinear, prewarped at f0).
  static Biquad lowpass(double f0, double q, double fs) {
    const double w0 = 2.0 * std::numbers::pi * f0 / fs;
    const double c = std::cos(w0), alpha = std::sin(w0) / (2.0 * q);
    const double a0 = 1.0 + alpha;
    Biquad s;
    s.b0 = (1.0 - c) / 2.0 / a0;
    s.b1 = (1.0 - c) / a0;
    s.b2 = s.b0;
    s.a1 = -2.0 * c / a0;
    s.a2 = (1.0 - alpha) / a0;
    return s;
  }
  static Biquad highpass(double f0, double q, double fs) {
    const double w0 = 2.0 * std::numbers::pi * f0 / fs;
    const double c = std::cos(w0), alpha = std::sin(w0) / (2.0 * q);
    const double a0 = 1.0 + alpha;
    Biquad s;
    s.b0 = (1.0 + c) / 2.0 / a0;
    s.b1 = -(1.0 + c) / a0;
    s.b2 = s.b0;
    s.a1 = -2.0 * c / a0;
    s.a2 = (1.0 - alpha) / a0;
    return s;
  }
};

// Even-order digital Butterworth as a cascade of biquads. The -3 dB corner
// is placed so the response at `edge_hz` is exactly `edge_loss_db` down,
// computed in the bilinear-warped frequency domain.
inline std::vector<Biquad> butterworth(bool highpass, int order, double edge_hz,
                                       double edge_loss_db, double fs) {
  const double eps = std::pow(10.0, edge_loss_db / 10.0) - 1.0;
  const double warped_edge = std::tan(std::numbers::pi * edge_hz / fs);
  const double shrink = std::pow(eps, 1.0 / (2.0 * order));
  const double warped_corner = highpass ? warped_edge * shrink : warped_edge / shrink;
  const double corner_hz = fs / std::numbers::pi * std::atan(warped_corner);
  std::vector<Biquad> sections;
  for (int k = 1; k <= order / 2; ++k) {
    const double q = 1.0 / (2.0 * std::cos((2.0 * k - 1.0) * std::numbers::pi / (2.0 * order)));
    sections.push_back(highpass ? Biquad::highpass(corner_hz, q, fs)
                                : Biquad::lowpass(corner_hz, q, fs));
  }
  return sections;
}

// Speech band-pass design: 50-7000 Hz with at most 1 dB loss at either edge.
// Orders are the smallest even orders that still give >= 20 dB at 25 Hz and
// at 10 kHz (about 30 dB and 32 dB at 48 kHz).
struct SpeechBand {
  static constexpr double kLowHz = 50.0;
  static constexpr double kHighHz = 7000.0;
  static constexpr double kEdgeLossDb = 1.0;
  static constexpr int kHighpassOrder = 6;
  static constexpr int kLowpassOrder = 10;
};

struct SpeechFilterResult {
  audio::AudioBuffer audio;
  double low_edge_hz = SpeechBand::kLowHz;
  double high_edge_hz = SpeechBand::kHighHz;
  // True when the sample rate cannot represent the 7 kHz edge and the
  // low-pass stage was dropped (Nyquist is the effective upper edge).
  bool upper_edge_clipped = false;
};

inline SpeechFilterResult speech_filter(const audio::AudioBuffer& buf,
                                        double low_hz = SpeechBand::kLowHz,
                                        double high_hz = SpeechBand::kHighHz) {
  if (!(low_hz > 0.0 && high_hz > low_hz)) {
    fail(ErrorCode::kInvalidArgument, "speech filter band edges must satisfy 0 < low < high");
  }
  audio::AudioBuffer mono = audio::downmix(buf);
  const double fs = mono.sample_rate_hz();
  std::vector<Biquad> chain =
      butterworth(true, SpeechBand::kHighpassOrder, low_hz, SpeechBand::kEdgeLossDb, fs);
  SpeechFilterResult r;
  r.low_edge_hz = low_hz;
  r.high_edge_hz = high_hz;
  if (high_hz < 0.5 * fs) {
    for (const auto& s : butterworth(false, SpeechBand::kLowpassOrder, high_hz,
                                     SpeechBand::kEdgeLossDb, fs)) {
      chain.push_back(s);
    }
  } else {
    r.upper_edge_clipped = true;
    r.high_edge_hz = 0.5 * fs;
  }
  std::vector<float> out(mono.frames());
  const auto x = mono.channel(0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    double v = x[i];
    for (auto& s : chain) v = s.process(v);
    out[i] = static_cast<float>(v);
  }
  audio::hard_clip(out);
  r.audio = audio::AudioBuffer::mono(std::move(out), mono.sample_rate_hz());
  return r;
}

}  // namespace sdeval::augment
