#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdeval/error.hpp"
#include "sdeval/provenance.hpp"

namespace sdeval::launder {

enum class Technique { kCarNoise, kReverb, kOverAir, kCarReverbOverAir };

inline std::string to_string(Technique t) {
  switch (t) {
    case Technique::kCarNoise: return "car_noise";
    case Technique::kReverb: return "reverb";
    case Technique::kOverAir: return "over_air";
    case Technique::kCarReverbOverAir: return "car_reverb_over_air";
  }
  return "?";
}

inline Technique parse_technique(const std::string& s) {
  for (auto t : {Technique::kCarNoise, Technique::kReverb, Technique::kOverAir,
                 Technique::kCarReverbOverAir}) {
    if (to_string(t) == s) return t;
  }
  fail(ErrorCode::kUnknownOperator, "unknown laundering technique '" + s + "'", {s});
}

inline bool needs_over_air(Technique t) {
  return t == Technique::kOverAir || t == Technique::kCarReverbOverAir;
}
inline bool needs_noise(Technique t) {
  return t == Technique::kCarNoise || t == Technique::kCarReverbOverAir;
}
inline bool needs_reverb(Technique t) {
  return t == Technique::kReverb || t == Technique::kCarReverbOverAir;
}

// One laundering technique with its parameters.
struct LaunderSpec {
  Technique technique = Technique::kCarNoise;
  // car noise: noise bank entry (file stem; empty = seeded pick) and SNR range
  std::string noise_id;
  double snr_db_min = 5.0;
  double snr_db_max = 20.0;
  bool loop_noise = true;
  // reverb: impulse response id (file stem or bundled name; empty = seeded pick)
  std::string ir_id;
  // over air: tabular recording manifest; or the synthetic surrogate for desk runs
  std::string recording_manifest;
  bool over_air_surrogate = false;

  std::string name() const { return to_string(technique); }
};

inline void validate(const LaunderSpec& s) {
  if (needs_noise(s.technique) &&
      !(s.snr_db_min <= s.snr_db_max && !std::isnan(s.snr_db_min) && !std::isnan(s.snr_db_max))) {
    fail(ErrorCode::kInvalidArgument, s.name() + ": invalid SNR range");
  }
}

inline void to_json(json& j, const LaunderSpec& s) {
  j = json{{"technique", to_string(s.technique)}};
  if (needs_noise(s.technique)) {
    j["noise_id"] = s.noise_id;
    j["snr_db"] = {s.snr_db_min, s.snr_db_max};
    j["loop_noise"] = s.loop_noise;
  }
  if (needs_reverb(s.technique)) j["ir_id"] = s.ir_id;
  if (needs_over_air(s.technique)) {
    j["recording_manifest"] = s.recording_manifest;
    j["over_air_surrogate"] = s.over_air_surrogate;
  }
}

inline void from_json(const json& j, LaunderSpec& s) {
  s = LaunderSpec{};
  s.technique = parse_technique(j.at("technique").get<std::string>());
  s.noise_id = j.value("noise_id", std::string{});
  if (j.contains("snr_db")) {
    s.snr_db_min = j["snr_db"].at(0).get<double>();
    s.snr_db_max = j["snr_db"].at(1).get<double>();
  }
  s.loop_noise = j.value("loop_noise", true);
  s.ir_id = j.value("ir_id", std::string{});
  s.recording_manifest = j.value("recording_manifest", std::string{});
  s.over_air_surrogate = j.value("over_air_surrogate", false);
}

inline std::vector<LaunderSpec> default_task3_techniques() {
  std::vector<LaunderSpec> v(4);
  v[0].technique = Technique::kCarNoise;
  v[1].technique = Technique::kReverb;
  v[2].technique = Technique::kOverAir;
  v[3].technique = Technique::kCarReverbOverAir;
  return v;
}

}  // namespace sdeval::launder
