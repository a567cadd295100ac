#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "sdeval/audio/buffer.hpp"
#include "sdeval/audio/wav.hpp"
#include "sdeval/augment/resample.hpp"
#include "sdeval/error.hpp"
#include "sdeval/util/rng.hpp"

namespace sdeval::launder {

inline constexpr double kNoMixSnr = std::numeric_limits<double>::infinity();

struct MixResult {
  audio::AudioBuffer audio;
  std::size_t noise_offset = 0;
  double noise_gain = 0.0;
  double clip_fraction = 0.0;
};

// Mixes a background-noise segment into `buf` at `snr_db` against the
// speech power. The segment start is drawn from `rng_seed`; shorter noise
// is looped when `loop` is set. snr_db = +inf is the no-op mode.
inline MixResult mix_background(const audio::AudioBuffer& buf, const audio::AudioBuffer& noise,
                                double snr_db, std::uint64_t rng_seed, bool loop = true) {
  MixResult r;
  audio::AudioBuffer speech = audio::downmix(buf);
  if (snr_db == kNoMixSnr) {
    r.audio = std::move(speech);
    return r;
  }
  if (std::isnan(snr_db)) fail(ErrorCode::kInvalidArgument, "snr_db is NaN");
  const auto x = speech.channel(0);
  const double ps = audio::mean_power(x);
  if (!(ps > 0.0)) fail(ErrorCode::kSilentInput, "speech has zero energy");

  audio::AudioBuffer bg = audio::downmix(noise);
  if (bg.sample_rate_hz() != speech.sample_rate_hz()) bg = augment::resample(bg, speech.sample_rate_hz());
  const auto n = bg.channel(0);
  if (n.empty()) fail(ErrorCode::kNoiseBankEmpty, "noise clip is empty");
  if (n.size() < x.size() && !loop) {
    fail(ErrorCode::kInvalidArgument, "noise shorter than speech and looping disabled");
  }

  util::Rng rng(rng_seed);
  r.noise_offset = n.size() >= x.size() && !loop ? rng.below(n.size() - x.size() + 1)
                                                 : rng.below(n.size());
  std::vector<double> seg(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) seg[i] = n[(r.noise_offset + i) % n.size()];
  double pn = 0.0;
  for (double v : seg) pn += v * v;
  pn /= static_cast<double>(seg.size());
  if (!(pn > 0.0)) fail(ErrorCode::kSilentInput, "selected noise segment has zero energy");

  r.noise_gain = std::sqrt(ps / std::pow(10.0, snr_db / 10.0) / pn);
  std::vector<float> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = static_cast<float>(x[i] + r.noise_gain * seg[i]);
  r.clip_fraction = audio::hard_clip(out);
  r.audio = audio::AudioBuffer::mono(std::move(out), speech.sample_rate_hz());
  return r;
}

// Directory of background-noise WAV files: <dir>/<noise_id>.wav.
class NoiseBank {
 public:
  explicit NoiseBank(std::filesystem::path dir) : dir_(std::move(dir)) {
    if (std::filesystem::is_directory(dir_)) {
      for (const auto& e : std::filesystem::directory_iterator(dir_)) {
        if (e.is_regular_file() && e.path().extension() == ".wav") ids_.push_back(e.path().stem().string());
      }
    }
    std::sort(ids_.begin(), ids_.end());
    if (ids_.empty()) fail(ErrorCode::kNoiseBankEmpty, "no .wav files in " + dir_.string(), {dir_.string()});
  }

  const std::vector<std::string>& ids() const { return ids_; }

  // `id` empty: seeded pick.
  std::string choose(const std::string& id, util::Rng& rng) const {
    if (id.empty()) return ids_[rng.below(ids_.size())];
    if (std::find(ids_.begin(), ids_.end(), id) == ids_.end()) {
      fail(ErrorCode::kInvalidArgument, "noise id '" + id + "' not in bank", {id});
    }
    return id;
  }

  audio::AudioBuffer load(const std::string& id) const { return audio::read_wav(dir_ / (id + ".wav")); }

 private:
  std::filesystem::path dir_;
  std::vector<std::string> ids_;
};

}  // namespace sdeval::launder
