#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdeval/audio/buffer.hpp"
#include "sdeval/audio/wav.hpp"
#include "sdeval/provenance.hpp"
#include "sdeval/util/rng.hpp"

// Small synthetic corpus for desk runs: two "real" sources (harmonic tones,
// filtered noise) and two "generated" sources (rising and falling chirps).
//   <root>/real/<source_id>/clip_NN.wav
//   <root>/generated/<source_id>/clip_NN.wav
//   <root>/catalog.json
//   <root>/noise/<id>.wav        background-noise bank

namespace sdeval::testing {

namespace fs = std::filesystem;

struct ToySource {
  std::string source_id;
  std::string display_name;
  bool generated = false;
};

inline std::vector<ToySource> toy_sources() {
  return {{"tone_bank", "Harmonic Tone Archive", false},
          {"hiss_bank", "Filtered Hiss Archive", false},
          {"sweep_up", "Rising Sweep Synthesizer", true},
          {"sweep_down", "Falling Sweep Synthesizer", true}};
}

struct ToyCorpusOptions {
  std::size_t clips_per_source = 10;
  double clip_seconds = 1.0;
  int sample_rate_hz = 16000;
  std::uint64_t seed = 7;
};

inline audio::AudioBuffer toy_clip(const ToySource& src, std::size_t index, const ToyCorpusOptions& o) {
  util::Rng rng(util::derive_seed(o.seed, src.source_id + "/" + std::to_string(index)));
  const auto n = static_cast<std::size_t>(o.clip_seconds * o.sample_rate_hz);
  const double fs = o.sample_rate_hz;
  std::vector<float> x(n);
  const double tau = 2.0 * std::numbers::pi;
  if (src.source_id == "tone_bank") {
    const double f0 = rng.uniform(110.0, 330.0);
    for (std::size_t i = 0; i < n; ++i) {
      double v = 0.0;
      for (int h = 1; h <= 5; ++h) v += std::sin(tau * f0 * h * static_cast<double>(i) / fs) / h;
      x[i] = static_cast<float>(0.25 * v + 0.01 * rng.normal());
    }
  } else if (src.source_id == "hiss_bank") {
    double lp = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      lp = 0.9 * lp + 0.1 * rng.normal();
      x[i] = static_cast<float>(0.3 * lp);
    }
  } else {
    const bool up = src.source_id == "sweep_up";
    const double f_lo = rng.uniform(150.0, 300.0), f_hi = rng.uniform(2000.0, 4000.0);
    const double f0 = up ? f_lo : f_hi, f1 = up ? f_hi : f_lo;
    const double dur = static_cast<double>(n) / fs;
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / fs;
      const double phase = tau * (f0 * t + (f1 - f0) * t * t / (2.0 * dur));
      x[i] = static_cast<float>(0.4 * std::sin(phase));
    }
  }
  return audio::AudioBuffer::mono(std::move(x), o.sample_rate_hz);
}

// Writes the corpus and returns the catalog path.
inline fs::path write_toy_corpus(const fs::path& root, const ToyCorpusOptions& o = {}) {
  json catalog{{"sources", json::array()}};
  for (const auto& src : toy_sources()) {
    const fs::path dir = root / (src.generated ? "generated" : "real") / src.source_id;
    for (std::size_t i = 0; i < o.clips_per_source; ++i) {
      std::string name = std::to_string(i);
      name.insert(0, name.size() < 2 ? 2 - name.size() : 0, '0');
      audio::write_wav(dir / ("clip_" + name + ".wav"), toy_clip(src, i, o));
    }
    json e{{"source_id", src.source_id}, {"display_name", src.display_name}, {"language", "en"}};
    if (src.generated) e["voice_cloning"] = false;
    catalog["sources"].push_back(e);
  }
  // Two background clips: engine-like rumble and broadband road noise.
  util::Rng rng(util::derive_seed(o.seed, "noise"));
  const auto n = static_cast<std::size_t>(3.0 * o.sample_rate_hz);
  std::vector<float> rumble(n), road(n);
  double lp = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    lp = 0.98 * lp + 0.02 * rng.normal();
    rumble[i] = static_cast<float>(0.5 * lp + 0.05 * std::sin(2.0 * std::numbers::pi * 45.0 * i / o.sample_rate_hz));
    road[i] = static_cast<float>(0.1 * rng.normal());
  }
  audio::write_wav(root / "noise" / "rumble.wav", audio::AudioBuffer::mono(rumble, o.sample_rate_hz));
  audio::write_wav(root / "noise" / "road.wav", audio::AudioBuffer::mono(road, o.sample_rate_hz));
  const fs::path cat = root / "catalog.json";
  std::ofstream(cat) << catalog.dump(2) << '\n';
  return cat;
}

}  // namespace sdeval::testing
