#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sdeval/error.hpp"

namespace sdeval::audio {

// Planar float audio: channels x frames, amplitudes nominally in [-1, 1].
class AudioBuffer {
 public:
  AudioBuffer() = default;
  AudioBuffer(std::vector<std::vector<float>> channels, int sample_rate_hz)
      : channels_(std::move(channels)), sample_rate_hz_(sample_rate_hz) {
    if (channels_.empty()) fail(ErrorCode::kInvalidArgument, "audio buffer needs >= 1 channel");
    if (sample_rate_hz_ <= 0) fail(ErrorCode::kInvalidArgument, "sample rate must be positive");
    const std::size_t n = channels_.front().size();
    for (const auto& c : channels_) {
      if (c.size() != n) fail(ErrorCode::kInvalidArgument, "ragged channel lengths");
    }
  }

  static AudioBuffer mono(std::vector<float> samples, int sample_rate_hz) {
    std::vector<std::vector<float>> ch;
    ch.push_back(std::move(samples));
    return AudioBuffer(std::move(ch), sample_rate_hz);
  }

  int sample_rate_hz() const { return sample_rate_hz_; }
  std::size_t channel_count() const { return channels_.size(); }
  std::size_t frames() const { return channels_.empty() ? 0 : channels_.front().size(); }
  double duration_s() const {
    return sample_rate_hz_ > 0 ? static_cast<double>(frames()) / sample_rate_hz_ : 0.0;
  }

  std::span<const float> channel(std::size_t i) const { return channels_.at(i); }
  std::span<float> channel(std::size_t i) { return channels_.at(i); }
  const std::vector<std::vector<float>>& channels() const { return channels_; }

  bool operator==(const AudioBuffer&) const = default;

 private:
  std::vector<std::vector<float>> channels_;
  int sample_rate_hz_ = 0;
};

// Mean over channels; a mono buffer is returned unchanged.
inline AudioBuffer downmix(const AudioBuffer& in) {
  if (in.channel_count() == 1) return in;
  std::vector<float> out(in.frames(), 0.0f);
  const double scale = 1.0 / static_cast<double>(in.channel_count());
  for (std::size_t i = 0; i < out.size(); ++i) {
    double acc = 0.0;
    for (std::size_t c = 0; c < in.channel_count(); ++c) acc += in.channel(c)[i];
    out[i] = static_cast<float>(acc * scale);
  }
  return AudioBuffer::mono(std::move(out), in.sample_rate_hz());
}

inline double mean_power(std::span<const float> x) {
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (float v : x) acc += static_cast<double>(v) * v;
  return acc / static_cast<double>(x.size());
}

inline double rms(std::span<const float> x) { return std::sqrt(mean_power(x)); }

inline float peak(std::span<const float> x) {
  float p = 0.0f;
  for (float v : x) p = std::max(p, std::fabs(v));
  return p;
}

// 10 log10(P_signal / P_noise) where noise = processed - clean.
inline double measured_snr_db(std::span<const float> clean, std::span<const float> processed) {
  const std::size_t n = std::min(clean.size(), processed.size());
  double ps = 0.0, pn = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = static_cast<double>(processed[i]) - clean[i];
    ps += static_cast<double>(clean[i]) * clean[i];
    pn += d * d;
  }
  return 10.0 * std::log10(ps / pn);
}

inline bool all_finite(const AudioBuffer& b) {
  for (const auto& c : b.channels()) {
    for (float v : c) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

// Hard-clips to [-1, 1] (non-finite values become 0) and returns the fraction
// of samples that were altered.
inline double hard_clip(std::span<float> x) {
  if (x.empty()) return 0.0;
  std::size_t clipped = 0;
  for (float& v : x) {
    if (!std::isfinite(v)) {
      v = 0.0f;
      ++clipped;
    } else if (v > 1.0f) {
      v = 1.0f;
      ++clipped;
    } else if (v < -1.0f) {
      v = -1.0f;
      ++clipped;
    }
  }
  return static_cast<double>(clipped) / static_cast<double>(x.size());
}

}  // namespace sdeval::audio
