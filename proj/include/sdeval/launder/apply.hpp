#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>

#include "sdeval/audio/buffer.hpp"
#include "sdeval/launder/background.hpp"
#include "sdeval/launder/over_air.hpp"
#include "sdeval/launder/reverb.hpp"
#include "sdeval/launder/spec.hpp"
#include "sdeval/provenance.hpp"
#include "sdeval/util/rng.hpp"

namespace sdeval::launder {

// A physical recording to attach to its parent.
struct OverAirIngest {
  std::string parent_sample_id;
  std::filesystem::path recorded_file;
  const manifest::Manifest* manifest = nullptr;
};

using LaunderInput = std::variant<audio::AudioBuffer, OverAirIngest>;

struct LaunderContext {
  const NoiseBank* noise = nullptr;
  const IrBank* irs = nullptr;
};

struct LaunderResult {
  std::optional<audio::AudioBuffer> audio;
  std::optional<manifest::SampleRecord> record;  // ingest only
  ProvenanceRecord provenance;
  // Exported for playback; the recording has not been ingested yet.
  bool awaiting_ingest = false;
};

inline LaunderResult apply_launder(const LaunderSpec& spec, const LaunderInput& input, std::uint64_t seed,
                                   const LaunderContext& ctx) {
  validate(spec);
  LaunderResult r;
  r.provenance.seed = seed;

  if (const auto* ingest = std::get_if<OverAirIngest>(&input)) {
    if (!needs_over_air(spec.technique)) {
      fail(ErrorCode::kInvalidArgument, spec.name() + " does not take recordings");
    }
    if (!ingest->manifest) fail(ErrorCode::kInvalidArgument, "ingest needs a manifest");
    r.record = register_over_air(ingest->parent_sample_id, ingest->recorded_file, *ingest->manifest, spec.name());
    r.audio = audio::read_wav(ingest->recorded_file);
    r.provenance.add("over_air", {{"recorded_path", ingest->recorded_file.generic_string()}});
    return r;
  }

  util::Rng rng(util::derive_seed(seed, spec.name()));
  audio::AudioBuffer buf = audio::downmix(std::get<audio::AudioBuffer>(input));
  if (std::get<audio::AudioBuffer>(input).channel_count() > 1) {
    r.provenance.add("downmix", {{"channels", std::get<audio::AudioBuffer>(input).channel_count()}});
  }

  if (needs_noise(spec.technique)) {
    if (!ctx.noise) fail(ErrorCode::kNoiseBankEmpty, "no noise bank configured");
    const std::string id = ctx.noise->choose(spec.noise_id, rng);
    const double snr = rng.uniform(spec.snr_db_min, spec.snr_db_max);
    const auto mixed = mix_background(buf, ctx.noise->load(id), snr, rng.next_u64(), spec.loop_noise);
    r.provenance.add("car_noise", {{"noise_id", id},
                                   {"snr_db", snr},
                                   {"offset", mixed.noise_offset},
                                   {"clip_fraction", mixed.clip_fraction}});
    buf = mixed.audio;
  }
  if (needs_reverb(spec.technique)) {
    const IrBank fallback;
    const IrBank& bank = ctx.irs ? *ctx.irs : fallback;
    const auto& ir = bank.choose(spec.ir_id, rng);
    buf = convolve_reverb(buf, ir);
    r.provenance.add("reverb", {{"ir_id", ir.id}});
  }
  if (needs_over_air(spec.technique)) {
    r.provenance.add("export", {{"sample_rate_hz", buf.sample_rate_hz()}});
    if (spec.over_air_surrogate) {
      buf = over_air_surrogate(buf, rng.next_u64());
      r.provenance.add("over_air", {{"surrogate", true}});
      r.provenance.surrogate = true;
    } else {
      r.awaiting_ingest = true;
    }
  }
  r.audio = std::move(buf);
  return r;
}

}  // namespace sdeval::launder
