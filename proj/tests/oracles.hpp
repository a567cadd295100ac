#pragma once

// Independent reference implementations used to check the library. Each is
// the slow, obvious version of the thing it checks.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include "sdeval/audio/buffer.hpp"
#include "sdeval/manifest/types.hpp"
#include "sdeval/scoring/metrics.hpp"
#include "sdeval/scoring/roc.hpp"

namespace oracle {

namespace fs = std::filesystem;
using sdeval::audio::AudioBuffer;

inline std::vector<double> convolve(const std::vector<float>& x, const std::vector<float>& h) {
  std::vector<double> y(x.size() + h.size() - 1, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = 0; j < h.size(); ++j) y[i + j] += static_cast<double>(x[i]) * h[j];
  }
  return y;
}

// ROC by evaluating every distinct score as a ">= threshold" cut.
inline std::vector<sdeval::scoring::RocPoint> roc(const std::vector<sdeval::scoring::ScoredLabel>& v) {
  std::set<double, std::greater<>> cuts;
  double pos = 0, neg = 0;
  for (const auto& s : v) {
    cuts.insert(s.score);
    (s.generated ? pos : neg) += 1;
  }
  std::vector<sdeval::scoring::RocPoint> out{{0.0, 0.0}};
  for (double t : cuts) {
    double tp = 0, fp = 0;
    for (const auto& s : v) {
      if (s.score >= t) (s.generated ? tp : fp) += 1;
    }
    out.push_back({fp / neg, tp / pos});
  }
  return out;
}

inline sdeval::scoring::ConfusionCounts confusion(const std::vector<sdeval::scoring::DecisionRecord>& records,
                                                  const sdeval::manifest::Manifest& m) {
  sdeval::scoring::ConfusionCounts c;
  for (const auto& r : records) {
    const auto* s = m.find_sample(r.sample_id);
    const bool truth = s->label == sdeval::manifest::Label::kGenerated;
    const bool said = r.decision == sdeval::manifest::Label::kGenerated;
    if (truth && said) ++c.tp;
    if (truth && !said) ++c.fn;
    if (!truth && !said) ++c.tn;
    if (!truth && said) ++c.fp;
  }
  return c;
}

inline AudioBuffer sine(double hz, double seconds, int fs, double amp = 0.5) {
  std::vector<float> x(static_cast<std::size_t>(seconds * fs));
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = static_cast<float>(amp * std::sin(2.0 * std::numbers::pi * hz * static_cast<double>(i) / fs));
  }
  return AudioBuffer::mono(std::move(x), fs);
}

// Power at `hz` by a direct single-bin DFT (Goertzel-free), Hann windowed.
inline double tone_power(std::span<const float> x, double hz, int fs) {
  double re = 0.0, im = 0.0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double w = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / n);
    const double ph = 2.0 * std::numbers::pi * hz * static_cast<double>(i) / fs;
    re += w * x[i] * std::cos(ph);
    im -= w * x[i] * std::sin(ph);
  }
  return (re * re + im * im) / (n * n);
}

// Frequency with the most power on a grid over [lo, hi].
inline double dominant_frequency(std::span<const float> x, int fs, double lo, double hi, double step = 0.5) {
  double best_hz = lo, best = -1.0;
  for (double f = lo; f <= hi; f += step) {
    const double p = tone_power(x, f, fs);
    if (p > best) {
      best = p;
      best_hz = f;
    }
  }
  return best_hz;
}

// Level of the steady-state middle half, in dB relative to full scale.
inline double steady_rms_db(std::span<const float> x) {
  const auto mid = x.subspan(x.size() / 4, x.size() / 2);
  return 10.0 * std::log10(sdeval::audio::mean_power(mid));
}

// Fresh empty directory under the system temp dir.
inline fs::path scratch_dir(const std::string& tag) {
  std::string tmpl = (fs::temp_directory_path() / ("sdeval-" + tag + "-XXXXXX")).string();
  if (!::mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
  return tmpl;
}

}  // namespace oracle
