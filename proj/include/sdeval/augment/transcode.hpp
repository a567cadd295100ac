#pragma once

#include <unistd.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdeval/audio/buffer.hpp"
#include "sdeval/audio/wav.hpp"
#include "sdeval/augment/resample.hpp"
#include "sdeval/error.hpp"
#include "sdeval/provenance.hpp"
#include "sdeval/util/process.hpp"

// External transcoder plugins. A plugin is a command template that encodes a
// WAV file, plus an optional decode template that turns the encoded file back
// into WAV. Templates are token lists; the placeholders {input}, {output},
// {bitrate} and {rate} are substituted inside tokens.
//
// Registry file (JSON):
//   {"version": 1,
//    "plugins": {
//      "mp3": {"encode": ["ffmpeg", "-y", "-i", "{input}", "-b:a", "{bitrate}", "{output}"],
//              "decode": ["ffmpeg", "-y", "-i", "{input}", "-ar", "{rate}", "{output}"],
//              "ext": "mp3", "declared_output": "mp3"}}}
//
// Working directory layout for one chain: <job>/0.wav is the input; step i
// writes <job>/<i>.<ext> and, when it has a decoder, <job>/<i>.wav.

namespace sdeval::augment {

struct TranscoderPlugin {
  std::string name;
  std::vector<std::string> command_template;
  std::vector<std::string> decode_template;  // empty: command_template already emits WAV
  std::string ext = "wav";
  std::string declared_output;
};

struct TranscodeStep {
  std::string plugin;
  std::string bitrate;  // e.g. "16k"; may be empty
  int rate_hz = 0;      // 0: keep the rate the decoder produces
};

inline void to_json(json& j, const TranscodeStep& s) {
  j = json{{"plugin", s.plugin}, {"bitrate", s.bitrate}, {"rate_hz", s.rate_hz}};
}
inline void from_json(const json& j, TranscodeStep& s) {
  j.at("plugin").get_to(s.plugin);
  s.bitrate = j.value("bitrate", std::string{});
  s.rate_hz = j.value("rate_hz", 0);
}

namespace detail {

inline bool contains_placeholder(const std::vector<std::string>& tokens, std::string_view ph) {
  for (const auto& t : tokens) {
    if (t.find(ph) != std::string::npos) return true;
  }
  return false;
}

inline std::vector<std::string> substitute(const std::vector<std::string>& tmpl,
                                           const std::map<std::string, std::string>& values) {
  std::vector<std::string> out;
  for (std::string tok : tmpl) {
    for (const auto& [key, val] : values) {
      std::string::size_type pos = 0;
      while ((pos = tok.find(key, pos)) != std::string::npos) {
        tok.replace(pos, key.size(), val);
        pos += val.size();
      }
    }
    out.push_back(std::move(tok));
  }
  return out;
}

inline bool is_executable(const std::string& cmd) {
  if (cmd.find('/') != std::string::npos) return access(cmd.c_str(), X_OK) == 0;
  const char* path = std::getenv("PATH");
  if (!path) return false;
  std::stringstream ss(path);
  std::string dir;
  while (std::getline(ss, dir, ':')) {
    if (!dir.empty() && access((std::filesystem::path(dir) / cmd).c_str(), X_OK) == 0) return true;
  }
  return false;
}

}  // namespace detail

class PluginRegistry {
 public:
  PluginRegistry() = default;

  void add(TranscoderPlugin p) {
    if (!detail::contains_placeholder(p.command_template, "{input}") ||
        !detail::contains_placeholder(p.command_template, "{output}")) {
      fail(ErrorCode::kInvalidArgument,
           "plugin '" + p.name + "' template must contain {input} and {output}");
    }
    if (!p.decode_template.empty() &&
        (!detail::contains_placeholder(p.decode_template, "{input}") ||
         !detail::contains_placeholder(p.decode_template, "{output}"))) {
      fail(ErrorCode::kInvalidArgument,
           "plugin '" + p.name + "' decode template must contain {input} and {output}");
    }
    if (p.decode_template.empty()) p.ext = "wav";
    plugins_[p.name] = std::move(p);
  }

  const TranscoderPlugin* find(const std::string& name) const {
    const auto it = plugins_.find(name);
    return it == plugins_.end() ? nullptr : &it->second;
  }

  std::vector<std::string> names() const {
    std::vector<std::string> v;
    for (const auto& [k, _] : plugins_) v.push_back(k);
    return v;
  }

  static PluginRegistry from_json(const json& j) {
    PluginRegistry reg;
    for (const auto& [name, spec] : j.at("plugins").items()) {
      TranscoderPlugin p;
      p.name = name;
      spec.at("encode").get_to(p.command_template);
      p.decode_template = spec.value("decode", std::vector<std::string>{});
      p.ext = spec.value("ext", std::string("wav"));
      p.declared_output = spec.value("declared_output", p.ext);
      reg.add(std::move(p));
    }
    return reg;
  }

  static PluginRegistry load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::kIo, "cannot read plugin registry " + path.string());
    try {
      return from_json(json::parse(in));
    } catch (const json::exception& e) {
      fail(ErrorCode::kFormat, "plugin registry " + path.string() + ": " + e.what());
    }
  }

 private:
  std::map<std::string, TranscoderPlugin> plugins_;
};

struct TranscodeResult {
  audio::AudioBuffer audio;
  ProvenanceRecord provenance;  // one "transcode" step per chain step
};

// Round-trips `buf` through every step in order inside `job_dir`.
// Intermediate WAVs are 32-bit float so lossless plugins are bit-exact.
inline TranscodeResult transcode_chain(const audio::AudioBuffer& buf,
                                       const std::vector<TranscodeStep>& steps,
                                       const std::filesystem::path& job_dir,
                                       const PluginRegistry& registry,
                                       std::chrono::seconds step_timeout = std::chrono::seconds(600)) {
  namespace fs = std::filesystem;
  if (steps.empty()) fail(ErrorCode::kInvalidArgument, "transcode chain needs at least one step");
  std::vector<const TranscoderPlugin*> plugins;
  for (const auto& s : steps) {
    const auto* p = registry.find(s.plugin);
    if (!p) fail(ErrorCode::kPluginMissing, "no plugin named '" + s.plugin + "'", {s.plugin});
    for (const auto* tmpl : {&p->command_template, &p->decode_template}) {
      if (!tmpl->empty() && !detail::is_executable(tmpl->front())) {
        fail(ErrorCode::kPluginMissing,
             "plugin '" + s.plugin + "' executable not found: " + tmpl->front(), {s.plugin});
      }
    }
    plugins.push_back(p);
  }

  fs::create_directories(job_dir);
  const fs::path abs_job = fs::absolute(job_dir);
  fs::path current = abs_job / "0.wav";
  audio::write_wav(current, buf, audio::WavEncoding::kFloat32);

  TranscodeResult result;
  audio::AudioBuffer decoded = buf;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const auto& step = steps[i];
    const auto& plugin = *plugins[i];
    const std::string idx = std::to_string(i + 1);
    const fs::path encoded = abs_job / (idx + "." + plugin.ext);
    const fs::path out_wav = abs_job / (idx + ".wav");
    const std::string rate = std::to_string(step.rate_hz > 0 ? step.rate_hz : decoded.sample_rate_hz());

    json log = {{"step", i + 1}, {"plugin", plugin.name}, {"bitrate", step.bitrate},
                {"rate_hz", step.rate_hz}, {"declared_output", plugin.declared_output}};

    auto run = [&](const std::vector<std::string>& tmpl, const fs::path& in, const fs::path& out,
                   const char* phase) {
      const auto argv = detail::substitute(
          tmpl, {{"{input}", in.string()}, {"{output}", out.string()},
                 {"{bitrate}", step.bitrate}, {"{rate}", rate}});
      util::ProcessOptions opt;
      opt.argv = argv;
      opt.cwd = abs_job;
      opt.timeout = step_timeout;
      const auto r = util::run_process(opt);
      log[std::string(phase) + "_argv"] = argv;
      log[std::string(phase) + "_exit"] = r.exit_code;
      if (!r.ok() || !fs::exists(out)) {
        const std::string status = r.how == util::ProcessExit::kTimedOut ? "timeout"
                                   : r.how == util::ProcessExit::kSignaled
                                       ? "signal " + std::to_string(r.signal)
                                       : "exit " + std::to_string(r.exit_code);
        fail(ErrorCode::kPluginFailed,
             "step " + idx + " (" + plugin.name + " " + phase + ") failed with " + status +
                 (fs::exists(out) ? "" : ", no output") + ": " + r.stderr_tail,
             {plugin.name});
      }
    };

    if (plugin.decode_template.empty()) {
      run(plugin.command_template, current, out_wav, "encode");
    } else {
      run(plugin.command_template, current, encoded, "encode");
      run(plugin.decode_template, encoded, out_wav, "decode");
    }
    try {
      decoded = audio::read_wav(out_wav);
    } catch (const Error& e) {
      fail(ErrorCode::kDecodeFailed, "step " + idx + " produced undecodable audio: " + e.what(),
           {out_wav.string()});
    }
    log["decoded_rate_hz"] = decoded.sample_rate_hz();
    if (step.rate_hz > 0 && decoded.sample_rate_hz() != step.rate_hz) {
      log["rate_adjusted_from"] = decoded.sample_rate_hz();
      decoded = resample(decoded, step.rate_hz);
      audio::write_wav(out_wav, decoded, audio::WavEncoding::kFloat32);
    }
    result.provenance.add("transcode", std::move(log));
    current = out_wav;
  }
  result.audio = std::move(decoded);
  return result;
}

}  // namespace sdeval::augment
