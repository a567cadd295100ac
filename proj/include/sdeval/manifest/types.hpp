#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdeval/error.hpp"
#include "sdeval/provenance.hpp"

namespace sdeval::manifest {

enum class Label { kReal, kGenerated };
enum class Task { kTask1, kTask2, kTask3 };
enum class Split { kPublic, kPrivate };

inline constexpr std::string_view kOriginal = "original";

inline std::string to_string(Label l) { return l == Label::kReal ? "real" : "generated"; }
inline std::string to_string(Task t) {
  return t == Task::kTask1 ? "task1" : t == Task::kTask2 ? "task2" : "task3";
}
inline std::string to_string(Split s) { return s == Split::kPublic ? "public" : "private"; }

inline Label parse_label(const std::string& s) {
  if (s == "real") return Label::kReal;
  if (s == "generated") return Label::kGenerated;
  fail(ErrorCode::kFormat, "bad label '" + s + "'");
}
inline Task parse_task(const std::string& s) {
  if (s == "task1" || s == "1") return Task::kTask1;
  if (s == "task2" || s == "2") return Task::kTask2;
  if (s == "task3" || s == "3") return Task::kTask3;
  fail(ErrorCode::kFormat, "bad task '" + s + "'");
}
inline Split parse_split(const std::string& s) {
  if (s == "public") return Split::kPublic;
  if (s == "private") return Split::kPrivate;
  fail(ErrorCode::kFormat, "bad split '" + s + "'");
}

struct SourceDescriptor {
  std::string source_id;
  Label kind = Label::kReal;
  std::string display_name;
  int native_sample_rate_hz = 0;
  std::optional<std::string> language;
  bool in_public_split = false;
  std::optional<bool> voice_cloning;  // generated sources only

  bool operator==(const SourceDescriptor&) const = default;
};

struct SampleRecord {
  std::string sample_id;
  std::string source_id;
  Label label = Label::kReal;
  std::string file_path;  // relative to the dataset's audio root
  double duration_s = 0.0;
  int sample_rate_hz = 0;
  std::string variant = std::string(kOriginal);
  std::optional<std::string> parent_sample_id;

  bool is_original() const { return variant == kOriginal; }
  bool operator==(const SampleRecord&) const = default;
};

struct Manifest {
  Task task = Task::kTask1;
  Split split = Split::kPrivate;
  std::uint64_t seed = 0;
  std::vector<SourceDescriptor> sources;
  std::vector<SampleRecord> samples;
  // Derivation parameters (per_source, clips_per_model, plan names, ...).
  json params = json::object();

  const SourceDescriptor* find_source(const std::string& id) const {
    for (const auto& s : sources) {
      if (s.source_id == id) return &s;
    }
    return nullptr;
  }
  const SampleRecord* find_sample(const std::string& id) const {
    for (const auto& s : samples) {
      if (s.sample_id == id) return &s;
    }
    return nullptr;
  }
  std::map<std::string, std::size_t> counts_by_source() const {
    std::map<std::string, std::size_t> counts;
    for (const auto& s : sources) counts[s.source_id] = 0;
    for (const auto& s : samples) ++counts[s.source_id];
    return counts;
  }
};

inline void to_json(json& j, const SourceDescriptor& s) {
  j = json{{"source_id", s.source_id},
           {"kind", to_string(s.kind)},
           {"display_name", s.display_name},
           {"native_sample_rate_hz", s.native_sample_rate_hz},
           {"in_public_split", s.in_public_split}};
  if (s.language) j["language"] = *s.language;
  if (s.voice_cloning) j["voice_cloning"] = *s.voice_cloning;
}

inline void from_json(const json& j, SourceDescriptor& s) {
  j.at("source_id").get_to(s.source_id);
  s.kind = parse_label(j.at("kind").get<std::string>());
  s.display_name = j.value("display_name", s.source_id);
  s.native_sample_rate_hz = j.value("native_sample_rate_hz", 0);
  s.language = j.contains("language") ? std::optional(j["language"].get<std::string>()) : std::nullopt;
  s.in_public_split = j.value("in_public_split", false);
  s.voice_cloning =
      j.contains("voice_cloning") ? std::optional(j["voice_cloning"].get<bool>()) : std::nullopt;
}

inline void to_json(json& j, const SampleRecord& s) {
  j = json{{"sample_id", s.sample_id},       {"source_id", s.source_id},
           {"label", to_string(s.label)},    {"file_path", s.file_path},
           {"duration_s", s.duration_s},     {"sample_rate_hz", s.sample_rate_hz},
           {"variant", s.variant}};
  if (s.parent_sample_id) j["parent_sample_id"] = *s.parent_sample_id;
}

inline void from_json(const json& j, SampleRecord& s) {
  j.at("sample_id").get_to(s.sample_id);
  j.at("source_id").get_to(s.source_id);
  s.label = parse_label(j.at("label").get<std::string>());
  j.at("file_path").get_to(s.file_path);
  j.at("duration_s").get_to(s.duration_s);
  j.at("sample_rate_hz").get_to(s.sample_rate_hz);
  s.variant = j.value("variant", std::string(kOriginal));
  s.parent_sample_id = j.contains("parent_sample_id")
                           ? std::optional(j["parent_sample_id"].get<std::string>())
                           : std::nullopt;
}

// Manifest file format, version 1: UTF-8 JSON Lines.
//   line 1      {"format":"sdeval-manifest","version":1,"task":..,"split":..,"seed":..,"params":{..}}
//   then        {"source":{..}}   one per source
//   then        {"sample":{..}}   one per sample
// Keys are emitted in sorted order, so a record always serializes to the
// same bytes.
inline constexpr std::string_view kManifestFormat = "sdeval-manifest";
inline constexpr int kManifestVersion = 1;

inline void write_manifest(std::ostream& out, const Manifest& m) {
  json header = {{"format", kManifestFormat}, {"version", kManifestVersion},
                 {"task", to_string(m.task)},  {"split", to_string(m.split)},
                 {"seed", m.seed},             {"params", m.params}};
  out << header.dump() << '\n';
  for (const auto& s : m.sources) out << json{{"source", s}}.dump() << '\n';
  for (const auto& s : m.samples) out << json{{"sample", s}}.dump() << '\n';
}

inline std::string serialize(const Manifest& m) {
  std::ostringstream os;
  write_manifest(os, m);
  return os.str();
}

inline std::string serialize(const SampleRecord& s) { return json(s).dump(); }

inline Manifest read_manifest(std::istream& in, const std::string& name = "<stream>") {
  Manifest m;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      fail(ErrorCode::kFormat, name + ":" + std::to_string(lineno) + ": " + e.what());
    }
    try {
      if (!have_header) {
        if (j.value("format", std::string{}) != kManifestFormat) {
          fail(ErrorCode::kFormat, name + ": not an sdeval manifest");
        }
        if (j.value("version", 0) != kManifestVersion) {
          fail(ErrorCode::kFormat, name + ": unsupported manifest version");
        }
        m.task = parse_task(j.at("task").get<std::string>());
        m.split = parse_split(j.at("split").get<std::string>());
        m.seed = j.at("seed").get<std::uint64_t>();
        m.params = j.value("params", json::object());
        have_header = true;
      } else if (j.contains("source")) {
        m.sources.push_back(j["source"].get<SourceDescriptor>());
      } else if (j.contains("sample")) {
        m.samples.push_back(j["sample"].get<SampleRecord>());
      } else {
        fail(ErrorCode::kFormat, name + ":" + std::to_string(lineno) + ": unknown record");
      }
    } catch (const json::exception& e) {
      fail(ErrorCode::kFormat, name + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (!have_header) fail(ErrorCode::kFormat, name + ": empty manifest");
  return m;
}

inline Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot read manifest " + path.string(), {path.string()});
  return read_manifest(in, path.string());
}

inline void save_manifest(const std::filesystem::path& path, const Manifest& m) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot write manifest " + path.string(), {path.string()});
  write_manifest(out, m);
}

// Adds `record`, replacing any existing sample with the same id.
inline void upsert_sample(Manifest& m, const SampleRecord& record) {
  for (auto& s : m.samples) {
    if (s.sample_id == record.sample_id) {
      s = record;
      return;
    }
  }
  m.samples.push_back(record);
}

}  // namespace sdeval::manifest
