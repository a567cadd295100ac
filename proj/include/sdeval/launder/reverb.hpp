#pragma once

#include <cmath>
#include <complex>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "sdeval/audio/buffer.hpp"
#include "sdeval/audio/fft.hpp"
#include "sdeval/audio/wav.hpp"
#include "sdeval/augment/resample.hpp"
#include "sdeval/error.hpp"
#include "sdeval/util/hash.hpp"
#include "sdeval/util/rng.hpp"

namespace sdeval::launder {

struct ImpulseResponse {
  std::string id;
  std::vector<float> samples;
  int sample_rate_hz = 0;
};

inline void check(const ImpulseResponse& ir) {
  if (ir.samples.empty()) fail(ErrorCode::kInvalidArgument, "impulse response '" + ir.id + "' is empty");
  if (ir.sample_rate_hz <= 0) fail(ErrorCode::kInvalidArgument, "impulse response '" + ir.id + "' has no rate");
  double energy = 0.0;
  for (float v : ir.samples) {
    if (!std::isfinite(v)) fail(ErrorCode::kInvalidArgument, "impulse response '" + ir.id + "' not finite");
    energy += static_cast<double>(v) * v;
  }
  if (!(energy > 0.0)) fail(ErrorCode::kInvalidArgument, "impulse response '" + ir.id + "' has zero energy");
}

// Full linear convolution, length |x| + |h| - 1. Small problems run the
// direct sum; larger ones a single zero-padded FFT product.
inline std::vector<double> convolve(std::span<const float> x, std::span<const float> h) {
  if (x.empty() || h.empty()) return {};
  const std::size_t n = x.size() + h.size() - 1;
  std::vector<double> y(n, 0.0);
  if (x.size() * h.size() <= (1u << 20)) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double xi = x[i];
      for (std::size_t k = 0; k < h.size(); ++k) y[i + k] += xi * h[k];
    }
    return y;
  }
  const std::size_t nfft = audio::next_pow2(n);
  audio::RealFft fft(nfft);
  std::vector<double> xd(x.begin(), x.end()), hd(h.begin(), h.end());
  std::vector<std::complex<double>> fx, fh;
  fft.forward(xd, fx);
  fft.forward(hd, fh);
  for (std::size_t k = 0; k < fx.size(); ++k) fx[k] *= fh[k];
  std::vector<double> full;
  fft.inverse(fx, full);
  for (std::size_t i = 0; i < n; ++i) y[i] = full[i] / static_cast<double>(nfft);
  return y;
}

// Reverberates `buf` with `ir` (resampled to the buffer's rate if needed),
// keeps the full tail and rescales the result to the input's peak.
inline audio::AudioBuffer convolve_reverb(const audio::AudioBuffer& buf, const ImpulseResponse& ir) {
  check(ir);
  const audio::AudioBuffer mono = audio::downmix(buf);
  std::vector<float> h = ir.samples;
  if (ir.sample_rate_hz != mono.sample_rate_hz()) {
    auto r = augment::resample(audio::AudioBuffer::mono(h, ir.sample_rate_hz), mono.sample_rate_hz());
    h.assign(r.channel(0).begin(), r.channel(0).end());
    if (h.empty()) h.push_back(ir.samples.front());
  }
  const auto x = mono.channel(0);
  const auto y = convolve(x, h);
  double peak_y = 0.0;
  for (double v : y) peak_y = std::max(peak_y, std::fabs(v));
  const double scale = peak_y > 0.0 ? audio::peak(x) / peak_y : 0.0;
  std::vector<float> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = static_cast<float>(y[i] * scale);
  audio::hard_clip(out);
  return audio::AudioBuffer::mono(std::move(out), mono.sample_rate_hz());
}

// Synthetic exponential-decay room response: unit direct path followed, after
// a short pre-delay, by Gaussian noise decaying 60 dB over rt60_s.
inline ImpulseResponse synthetic_ir(const std::string& id, double rt60_s, int sample_rate_hz,
                                    double tail_gain = 0.3, double predelay_s = 0.005) {
  util::Rng rng(util::fnv1a64("ir|" + id));
  const auto len = static_cast<std::size_t>(rt60_s * sample_rate_hz);
  const auto predelay = static_cast<std::size_t>(predelay_s * sample_rate_hz);
  ImpulseResponse ir{id, std::vector<float>(std::max<std::size_t>(len, predelay + 1), 0.0f), sample_rate_hz};
  ir.samples[0] = 1.0f;
  const double decay = std::log(1000.0) / (rt60_s * sample_rate_hz);  // 60 dB amplitude drop
  for (std::size_t i = predelay; i < ir.samples.size(); ++i) {
    ir.samples[i] += static_cast<float>(tail_gain * rng.normal() * std::exp(-decay * static_cast<double>(i)));
  }
  return ir;
}

// Bundled IR set used when no IR directory is configured.
inline std::vector<ImpulseResponse> bundled_irs(int sample_rate_hz = 48000) {
  return {synthetic_ir("room_small", 0.3, sample_rate_hz),
          synthetic_ir("room_medium", 0.6, sample_rate_hz),
          synthetic_ir("hall", 1.2, sample_rate_hz)};
}

// IRs keyed by id: bundled ones, plus <dir>/<id>.wav when a directory is given.
class IrBank {
 public:
  explicit IrBank(const std::filesystem::path& dir = {}) {
    for (auto& ir : bundled_irs()) irs_[ir.id] = std::move(ir);
    if (!dir.empty()) {
      if (!std::filesystem::is_directory(dir)) fail(ErrorCode::kIo, "IR directory missing: " + dir.string());
      for (const auto& e : std::filesystem::directory_iterator(dir)) {
        if (!e.is_regular_file() || e.path().extension() != ".wav") continue;
        const auto buf = audio::downmix(audio::read_wav(e.path()));
        ImpulseResponse ir{e.path().stem().string(),
                           std::vector<float>(buf.channel(0).begin(), buf.channel(0).end()),
                           buf.sample_rate_hz()};
        check(ir);
        irs_[ir.id] = std::move(ir);
      }
    }
  }

  std::vector<std::string> ids() const {
    std::vector<std::string> v;
    for (const auto& [k, _] : irs_) v.push_back(k);
    return v;
  }

  const ImpulseResponse& get(const std::string& id) const {
    const auto it = irs_.find(id);
    if (it == irs_.end()) fail(ErrorCode::kInvalidArgument, "unknown impulse response '" + id + "'", {id});
    return it->second;
  }

  const ImpulseResponse& choose(const std::string& id, util::Rng& rng) const {
    if (!id.empty()) return get(id);
    auto it = irs_.begin();
    std::advance(it, static_cast<long>(rng.below(irs_.size())));
    return it->second;
  }

 private:
  std::map<std::string, ImpulseResponse> irs_;
};

}  // namespace sdeval::launder
