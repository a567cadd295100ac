#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdeval/audio/buffer.hpp"
#include "sdeval/augment/filter.hpp"
#include "sdeval/augment/noise.hpp"
#include "sdeval/augment/resample.hpp"
#include "sdeval/augment/stretch.hpp"
#include "sdeval/augment/transcode.hpp"
#include "sdeval/error.hpp"
#include "sdeval/provenance.hpp"
#include "sdeval/util/rng.hpp"

namespace sdeval::augment {

enum class AugmentOp {
  kNoise,
  kResampleUp,
  kResampleDown,
  kPitchShift,
  kTimeStretch,
  kSpeechFilter,
  kCodecChain,
  kNeuralCodec,
  kUnaugmented,
};

inline std::string to_string(AugmentOp op) {
  switch (op) {
    case AugmentOp::kNoise: return "noise";
    case AugmentOp::kResampleUp: return "resample_up";
    case AugmentOp::kResampleDown: return "resample_down";
    case AugmentOp::kPitchShift: return "pitch_shift";
    case AugmentOp::kTimeStretch: return "time_stretch";
    case AugmentOp::kSpeechFilter: return "speech_filter";
    case AugmentOp::kCodecChain: return "codec_chain";
    case AugmentOp::kNeuralCodec: return "neural_codec";
    case AugmentOp::kUnaugmented: return "unaugmented";
  }
  return "?";
}

inline AugmentOp parse_augment_op(const std::string& s) {
  for (auto op : {AugmentOp::kNoise, AugmentOp::kResampleUp, AugmentOp::kResampleDown,
                  AugmentOp::kPitchShift, AugmentOp::kTimeStretch, AugmentOp::kSpeechFilter,
                  AugmentOp::kCodecChain, AugmentOp::kNeuralCodec, AugmentOp::kUnaugmented}) {
    if (to_string(op) == s) return op;
  }
  fail(ErrorCode::kUnknownOperator, "unknown augmentation operator '" + s + "'", {s});
}

// One post-processing operator with its parameters. `name` is the variant id
// the operator's outputs carry in a manifest (e.g. "mp3_aac_16k").
struct AugmentationSpec {
  std::string name;
  AugmentOp op = AugmentOp::kUnaugmented;

  // noise: per-clip SNR drawn uniformly from [snr_db_min, snr_db_max]
  double snr_db_min = 15.0;
  double snr_db_max = 40.0;
  // resample_up / resample_down
  int target_rate_hz = 0;
  // pitch_shift: fixed value, or a uniform pick from the choices
  std::optional<double> semitones;
  std::vector<double> semitone_choices = {-3, -2, -1, 1, 2, 3};
  // time_stretch: fixed value, or uniform in [speed_min, speed_max]
  std::optional<double> speed_factor;
  double speed_min = 1.05;
  double speed_max = 1.3;
  // speech_filter
  double band_low_hz = SpeechBand::kLowHz;
  double band_high_hz = SpeechBand::kHighHz;
  // codec_chain
  std::vector<TranscodeStep> codec_steps;
  // neural_codec
  std::string plugin;
};

inline void validate(const AugmentationSpec& s) {
  auto bad = [&](const std::string& why) {
    fail(ErrorCode::kInvalidArgument, "augmentation '" + s.name + "': " + why, {s.name});
  };
  if (s.name.empty()) bad("name must be non-empty");
  switch (s.op) {
    case AugmentOp::kNoise:
      if (!(s.snr_db_min <= s.snr_db_max) || !std::isfinite(s.snr_db_min) || !std::isfinite(s.snr_db_max))
        bad("snr range must be finite with min <= max");
      break;
    case AugmentOp::kResampleUp:
    case AugmentOp::kResampleDown:
      if (s.target_rate_hz < 1000) bad("target_rate_hz must be >= 1000");
      break;
    case AugmentOp::kPitchShift:
      if (s.semitones && std::fabs(*s.semitones) > 12.0) bad("|semitones| must be <= 12");
      if (!s.semitones && s.semitone_choices.empty()) bad("semitone choices empty");
      for (double c : s.semitone_choices)
        if (std::fabs(c) > 12.0) bad("|semitones| must be <= 12");
      break;
    case AugmentOp::kTimeStretch: {
      auto in_range = [](double v) { return v >= TimeStretchLimits::kMin && v <= TimeStretchLimits::kMax; };
      if (s.speed_factor && !in_range(*s.speed_factor)) bad("speed factor must be in [0.5, 2]");
      if (!s.speed_factor && !(in_range(s.speed_min) && in_range(s.speed_max) && s.speed_min <= s.speed_max))
        bad("speed range must lie in [0.5, 2] with min <= max");
      break;
    }
    case AugmentOp::kSpeechFilter:
      if (!(s.band_low_hz > 0 && s.band_high_hz > s.band_low_hz)) bad("band edges invalid");
      break;
    case AugmentOp::kCodecChain:
      if (s.codec_steps.empty()) bad("codec chain needs at least one step");
      break;
    case AugmentOp::kNeuralCodec:
      if (s.plugin.empty()) bad("neural codec needs a plugin name");
      break;
    case AugmentOp::kUnaugmented:
      break;
  }
}

inline void to_json(json& j, const AugmentationSpec& s) {
  j = json{{"name", s.name}, {"op", to_string(s.op)}};
  switch (s.op) {
    case AugmentOp::kNoise: j["snr_db"] = {s.snr_db_min, s.snr_db_max}; break;
    case AugmentOp::kResampleUp:
    case AugmentOp::kResampleDown: j["target_rate_hz"] = s.target_rate_hz; break;
    case AugmentOp::kPitchShift:
      if (s.semitones) j["semitones"] = *s.semitones;
      else j["semitone_choices"] = s.semitone_choices;
      break;
    case AugmentOp::kTimeStretch:
      if (s.speed_factor) j["speed_factor"] = *s.speed_factor;
      else j["speed_range"] = {s.speed_min, s.speed_max};
      break;
    case AugmentOp::kSpeechFilter: j["band_hz"] = {s.band_low_hz, s.band_high_hz}; break;
    case AugmentOp::kCodecChain: j["steps"] = s.codec_steps; break;
    case AugmentOp::kNeuralCodec: j["plugin"] = s.plugin; break;
    case AugmentOp::kUnaugmented: break;
  }
}

inline void from_json(const json& j, AugmentationSpec& s) {
  s = AugmentationSpec{};
  j.at("name").get_to(s.name);
  s.op = parse_augment_op(j.at("op").get<std::string>());
  if (j.contains("snr_db")) {
    s.snr_db_min = j["snr_db"].at(0).get<double>();
    s.snr_db_max = j["snr_db"].at(1).get<double>();
  }
  if (j.contains("target_rate_hz")) j["target_rate_hz"].get_to(s.target_rate_hz);
  if (j.contains("semitones")) s.semitones = j["semitones"].get<double>();
  if (j.contains("semitone_choices")) j["semitone_choices"].get_to(s.semitone_choices);
  if (j.contains("speed_factor")) s.speed_factor = j["speed_factor"].get<double>();
  if (j.contains("speed_range")) {
    s.speed_min = j["speed_range"].at(0).get<double>();
    s.speed_max = j["speed_range"].at(1).get<double>();
  }
  if (j.contains("band_hz")) {
    s.band_low_hz = j["band_hz"].at(0).get<double>();
    s.band_high_hz = j["band_hz"].at(1).get<double>();
  }
  if (j.contains("steps")) j["steps"].get_to(s.codec_steps);
  if (j.contains("plugin")) j["plugin"].get_to(s.plugin);
}

inline std::vector<AugmentationSpec> load_plan(const json& j) {
  const json& arr = j.is_object() ? j.at("plan") : j;
  std::vector<AugmentationSpec> plan;
  for (const auto& e : arr) {
    plan.push_back(e.get<AugmentationSpec>());
    validate(plan.back());
  }
  return plan;
}

// The 18 post-processing operators of the reference Task 2 catalog. Codec
// rows name plugins from share/plugins.json.
inline std::vector<AugmentationSpec> default_task2_plan() {
  auto codec = [](std::string name, std::vector<TranscodeStep> steps) {
    AugmentationSpec s;
    s.name = std::move(name);
    s.op = AugmentOp::kCodecChain;
    s.codec_steps = std::move(steps);
    return s;
  };
  auto neural = [](std::string name) {
    AugmentationSpec s;
    s.name = name;
    s.op = AugmentOp::kNeuralCodec;
    s.plugin = std::move(name);
    return s;
  };
  auto simple = [](std::string name, AugmentOp op) {
    AugmentationSpec s;
    s.name = std::move(name);
    s.op = op;
    return s;
  };
  const TranscodeStep mp3{"mp3", "16k", 0}, aac{"aac", "16k", 0};
  std::vector<AugmentationSpec> plan;
  plan.push_back(codec("aac_16k", {aac}));
  plan.push_back(codec("mp3_aac_16k", {mp3, aac}));
  plan.push_back(codec("opus_16k", {{"opus", "16k", 0}}));
  auto up = simple("resample_up", AugmentOp::kResampleUp);
  up.target_rate_hz = 48000;
  plan.push_back(up);
  plan.push_back(simple("time_stretch", AugmentOp::kTimeStretch));
  plan.push_back(neural("encodec"));
  plan.push_back(codec("mp3_aac_mp3_16k", {mp3, aac, mp3}));
  plan.push_back(codec("phone_audio", {{"g722", "16k", 8000}}));
  plan.push_back(neural("semanticodec"));
  plan.push_back(neural("focalcodec"));
  plan.push_back(codec("mp3_vbr", {{"mp3_vbr", "", 0}}));
  plan.push_back(simple("pitch_shift", AugmentOp::kPitchShift));
  plan.push_back(neural("snac"));
  plan.push_back(codec("vorbis_16k", {{"vorbis", "16k", 0}}));
  plan.push_back(codec("mp3_16k", {mp3}));
  plan.push_back(simple("noise", AugmentOp::kNoise));
  auto down = simple("resample_down", AugmentOp::kResampleDown);
  down.target_rate_hz = 16000;
  plan.push_back(down);
  plan.push_back(simple("speech_filter", AugmentOp::kSpeechFilter));
  return plan;
}

// What an operator may need beyond the audio: codec plugins and a private
// scratch directory for transcoder jobs.
struct AugmentContext {
  const PluginRegistry* registry = nullptr;
  std::filesystem::path workdir;
};

struct AugmentResult {
  audio::AudioBuffer audio;
  ProvenanceRecord provenance;
};

inline AugmentResult apply_augmentation(const AugmentationSpec& spec, const audio::AudioBuffer& buf,
                                        std::uint64_t seed, const AugmentContext& ctx = {}) {
  validate(spec);
  AugmentResult r;
  r.provenance.seed = seed;
  if (spec.op == AugmentOp::kUnaugmented) {
    r.audio = buf;
    r.provenance.add("unaugmented");
    return r;
  }

  const audio::AudioBuffer mono = audio::downmix(buf);
  if (buf.channel_count() > 1) {
    r.provenance.add("downmix", {{"channels", buf.channel_count()}, {"method", "mean"}});
  }
  util::Rng rng(util::derive_seed(seed, spec.name));
  json params = {{"variant", spec.name}};

  switch (spec.op) {
    case AugmentOp::kNoise: {
      const double snr = rng.uniform(spec.snr_db_min, spec.snr_db_max);
      auto n = add_noise(mono, snr, rng.next_u64());
      params["snr_db"] = snr;
      params["clip_fraction"] = n.clip_fraction;
      r.audio = std::move(n.audio);
      break;
    }
    case AugmentOp::kResampleUp:
    case AugmentOp::kResampleDown:
      params["from_rate_hz"] = mono.sample_rate_hz();
      params["target_rate_hz"] = spec.target_rate_hz;
      params["kaiser_beta"] = kResampleKaiserBeta;
      params["rolloff"] = kResampleRolloff;
      r.audio = resample(mono, spec.target_rate_hz);
      {
        auto ch = r.audio.channel(0);
        params["clip_fraction"] = audio::hard_clip(ch);
      }
      break;
    case AugmentOp::kPitchShift: {
      const double st = spec.semitones
                            ? *spec.semitones
                            : spec.semitone_choices[rng.below(spec.semitone_choices.size())];
      double clipped = 0.0;
      r.audio = pitch_shift(mono, st, &clipped);
      params["semitones"] = st;
      params["clip_fraction"] = clipped;
      break;
    }
    case AugmentOp::kTimeStretch: {
      const double speed = spec.speed_factor ? *spec.speed_factor : rng.uniform(spec.speed_min, spec.speed_max);
      double clipped = 0.0;
      r.audio = time_stretch(mono, speed, &clipped);
      params["speed_factor"] = speed;
      params["clip_fraction"] = clipped;
      break;
    }
    case AugmentOp::kSpeechFilter: {
      auto f = speech_filter(mono, spec.band_low_hz, spec.band_high_hz);
      params["band_hz"] = {f.low_edge_hz, f.high_edge_hz};
      params["upper_edge_clipped"] = f.upper_edge_clipped;
      r.audio = std::move(f.audio);
      break;
    }
    case AugmentOp::kCodecChain:
    case AugmentOp::kNeuralCodec: {
      if (!ctx.registry) fail(ErrorCode::kPluginMissing, "no plugin registry configured");
      if (ctx.workdir.empty()) fail(ErrorCode::kInvalidArgument, "codec operators need a workdir");
      const auto steps = spec.op == AugmentOp::kCodecChain
                             ? spec.codec_steps
                             : std::vector<TranscodeStep>{{spec.plugin, "", 0}};
      auto t = transcode_chain(mono, steps, ctx.workdir, *ctx.registry);
      t.audio = audio::downmix(t.audio);
      auto ch = t.audio.channel(0);
      params["clip_fraction"] = audio::hard_clip(ch);
      params["steps"] = steps;
      r.audio = std::move(t.audio);
      r.provenance.add(to_string(spec.op), std::move(params));
      r.provenance.append(t.provenance);
      return r;
    }
    case AugmentOp::kUnaugmented:
      break;
  }
  r.provenance.add(to_string(spec.op), std::move(params));
  return r;
}

}  // namespace sdeval::augment
