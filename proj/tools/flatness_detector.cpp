// Baseline detector: spectral flatness. Usage: flatness_detector <dataset_dir> <output_csv>
// Score is 1 - mean frame flatness; clips above 0.5 are called generated.

#include <chrono>
#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <string>
#include <vector>

#include "sdeval/audio/fft.hpp"
#include "sdeval/audio/wav.hpp"

namespace fs = std::filesystem;

namespace {

constexpr std::size_t kFrame = 1024;
constexpr std::size_t kHop = 512;

double mean_flatness(const sdeval::audio::AudioBuffer& buf) {
  const auto mono = sdeval::audio::downmix(buf);
  const auto x = mono.channel(0);
  if (x.size() < kFrame) return 1.0;
  sdeval::audio::RealFft fft(kFrame);
  std::vector<double> window(kFrame), frame(kFrame);
  for (std::size_t i = 0; i < kFrame; ++i) {
    window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / kFrame);
  }
  std::vector<std::complex<double>> spec;
  double total = 0.0;
  std::size_t frames = 0;
  for (std::size_t start = 0; start + kFrame <= x.size(); start += kHop) {
    for (std::size_t i = 0; i < kFrame; ++i) frame[i] = window[i] * x[start + i];
    fft.forward(frame, spec);
    double log_sum = 0.0, sum = 0.0;
    for (std::size_t k = 1; k < spec.size(); ++k) {
      const double p = std::norm(spec[k]) + 1e-12;
      log_sum += std::log(p);
      sum += p;
    }
    const double n = static_cast<double>(spec.size() - 1);
    total += std::exp(log_sum / n) / (sum / n);
    ++frames;
  }
  return total / static_cast<double>(frames);
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 3) {
    std::cerr << "usage: flatness_detector <dataset_dir> <output_csv>\n";
    return 2;
  }
  const fs::path dataset = argv[1];
  std::ifstream listing(dataset / "files.txt");
  if (!listing) {
    std::cerr << "cannot read " << (dataset / "files.txt") << '\n';
    return 1;
  }
  std::ofstream out(argv[2]);
  out << "file,decision,score,inference_time_s\n";
  out.precision(9);
  for (std::string rel; std::getline(listing, rel);) {
    if (rel.empty()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    const double score = 1.0 - mean_flatness(sdeval::audio::read_wav(dataset / rel));
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out << fs::path(rel).filename().string() << ',' << (score > 0.5 ? "generated" : "real") << ',' << score << ','
        << dt << '\n';
  }
  return out ? 0 : 1;
}
