#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "sdeval/audio/buffer.hpp"
#include "sdeval/audio/wav.hpp"
#include "sdeval/augment/filter.hpp"
#include "sdeval/augment/noise.hpp"
#include "sdeval/error.hpp"
#include "sdeval/launder/reverb.hpp"
#include "sdeval/manifest/build.hpp"
#include "sdeval/manifest/types.hpp"

namespace sdeval::launder {

namespace fs = std::filesystem;

// Parent lookup for an over-air recording. The parent is either a sample of
// `m` itself (a Task 1 manifest) or the parent of a planned over-air record
// of a Task 3 manifest.
inline const manifest::SampleRecord* find_over_air_parent(const manifest::Manifest& m,
                                                          const std::string& parent_id,
                                                          const std::string& variant) {
  if (const auto* s = m.find_sample(parent_id)) return s;
  for (const auto& s : m.samples) {
    if (s.parent_sample_id == parent_id && s.variant == variant) return &s;
  }
  return nullptr;
}

// Builds the manifest record for a physically re-recorded clip of
// `parent_id`. The record points at the canonical derived location; the
// caller copies `recorded_file` there.
inline manifest::SampleRecord register_over_air(const std::string& parent_id, const fs::path& recorded_file,
                                                const manifest::Manifest& m,
                                                const std::string& variant = "over_air") {
  const auto* hit = find_over_air_parent(m, parent_id, variant);
  if (!hit) fail(ErrorCode::kUnknownParent, "no sample or planned record for parent " + parent_id, {parent_id});
  if (hit->label != manifest::Label::kGenerated) {
    fail(ErrorCode::kInvalidArgument, "over-air recordings only launder generated samples", {parent_id});
  }
  const auto buf = audio::read_wav(recorded_file);
  manifest::SampleRecord r;
  r.sample_id = manifest::variant_sample_id(parent_id, variant);
  r.source_id = hit->source_id;
  r.label = manifest::Label::kGenerated;
  r.variant = variant;
  r.parent_sample_id = parent_id;
  r.file_path = manifest::derived_file_path(manifest::Task::kTask3, hit->source_id, r.sample_id);
  r.duration_s = buf.duration_s();
  r.sample_rate_hz = buf.sample_rate_hz();
  return r;
}

struct RecordingEntry {
  std::string parent_sample_id;
  fs::path recorded_path;
  std::string technique = "over_air";
};

// Tab-separated: header "parent_sample_id<TAB>recorded_path[<TAB>...]" with
// optional "technique" (default over_air) and free-form rig-note columns;
// relative paths resolve against the file's directory.
inline std::vector<RecordingEntry> read_recording_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot read recording manifest " + path.string(), {path.string()});
  std::vector<RecordingEntry> out;
  std::string line;
  std::size_t lineno = 0;
  int parent_col = -1, path_col = -1, technique_col = -1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, '\t');) cols.push_back(c);
    if (parent_col < 0) {
      for (std::size_t i = 0; i < cols.size(); ++i) {
        if (cols[i] == "parent_sample_id") parent_col = static_cast<int>(i);
        if (cols[i] == "recorded_path") path_col = static_cast<int>(i);
        if (cols[i] == "technique") technique_col = static_cast<int>(i);
      }
      if (parent_col < 0 || path_col < 0) {
        fail(ErrorCode::kFormat, path.string() + ": header needs parent_sample_id and recorded_path");
      }
      continue;
    }
    const auto need = static_cast<std::size_t>(std::max(parent_col, path_col));
    if (cols.size() <= need) fail(ErrorCode::kFormat, path.string() + ":" + std::to_string(lineno) + ": short row");
    fs::path p = cols[static_cast<std::size_t>(path_col)];
    if (p.is_relative()) p = path.parent_path() / p;
    RecordingEntry e{cols[static_cast<std::size_t>(parent_col)], p};
    if (technique_col >= 0 && static_cast<std::size_t>(technique_col) < cols.size() &&
        !cols[static_cast<std::size_t>(technique_col)].empty()) {
      e.technique = cols[static_cast<std::size_t>(technique_col)];
    }
    out.push_back(std::move(e));
  }
  return out;
}

// Desk stand-in for a loudspeaker-to-microphone pass: small-room response,
// 100-8000 Hz transducer band and a 35 dB noise floor.
struct SurrogateChannel {
  static constexpr double kLowHz = 100.0;
  static constexpr double kHighHz = 8000.0;
  static constexpr double kNoiseFloorSnrDb = 35.0;
  static constexpr double kRt60S = 0.25;
};

inline audio::AudioBuffer over_air_surrogate(const audio::AudioBuffer& buf, std::uint64_t seed) {
  const auto room = synthetic_ir("surrogate_room", SurrogateChannel::kRt60S, buf.sample_rate_hz());
  auto y = convolve_reverb(buf, room);
  const double fs = y.sample_rate_hz();
  auto sections = augment::butterworth(true, 4, SurrogateChannel::kLowHz, 3.0, fs);
  if (SurrogateChannel::kHighHz < fs / 2.0) {
    for (auto& s : augment::butterworth(false, 4, SurrogateChannel::kHighHz, 3.0, fs)) sections.push_back(s);
  }
  std::vector<float> out(y.channel(0).begin(), y.channel(0).end());
  for (auto& s : sections) {
    for (float& v : out) v = static_cast<float>(s.process(v));
  }
  auto band = audio::AudioBuffer::mono(std::move(out), y.sample_rate_hz());
  if (!(audio::mean_power(band.channel(0)) > 0.0)) return band;
  return augment::add_noise(band, SurrogateChannel::kNoiseFloorSnrDb, seed).audio;
}

}  // namespace sdeval::launder
