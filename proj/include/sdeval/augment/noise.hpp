#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "sdeval/audio/buffer.hpp"
#include "sdeval/error.hpp"
#include "sdeval/util/rng.hpp"

namespace sdeval::augment {

struct NoiseResult {
  audio::AudioBuffer audio;
  double requested_snr_db = 0.0;
  double clip_fraction = 0.0;
};

// Adds white Gaussian noise at exactly `snr_db` relative to the signal's
// mean power (before clipping). The drawn noise sequence is rescaled to the
// target power, so the pre-clip SNR matches the request to float precision.
inline NoiseResult add_noise(const audio::AudioBuffer& buf, double snr_db, std::uint64_t rng_seed) {
  if (!std::isfinite(snr_db)) fail(ErrorCode::kInvalidArgument, "snr_db must be finite");
  audio::AudioBuffer mono = audio::downmix(buf);
  const auto x = mono.channel(0);
  const double ps = audio::mean_power(x);
  if (!(ps > 0.0)) fail(ErrorCode::kSilentInput, "SNR undefined on a zero-energy signal");

  util::Rng rng(rng_seed);
  std::vector<double> noise(x.size());
  double pn = 0.0;
  for (auto& v : noise) {
    v = rng.normal();
    pn += v * v;
  }
  pn /= static_cast<double>(noise.size());
  const double target = ps / std::pow(10.0, snr_db / 10.0);
  const double gain = pn > 0.0 ? std::sqrt(target / pn) : 0.0;

  std::vector<float> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = static_cast<float>(x[i] + gain * noise[i]);
  }
  NoiseResult r;
  r.requested_snr_db = snr_db;
  r.clip_fraction = audio::hard_clip(out);
  r.audio = audio::AudioBuffer::mono(std::move(out), mono.sample_rate_hz());
  return r;
}

}  // namespace sdeval::augment
