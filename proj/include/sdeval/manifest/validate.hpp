#pragma once

#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "sdeval/manifest/types.hpp"

namespace sdeval::manifest {

struct Violation {
  std::string rule;     // "balance", "lineage", "label", "unique", "subset", ...
  std::string subject;  // offending source or sample id
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
  bool has(const std::string& rule, const std::string& subject) const {
    for (const auto& v : violations) {
      if (v.rule == rule && v.subject == subject) return true;
    }
    return false;
  }
};

struct ValidationContext {
  // Checked for the subset relation when set.
  const Manifest* public_manifest = nullptr;
  // Task 3 parents live in the Task 1 manifest; lineage is checked against it when set.
  const Manifest* parent_manifest = nullptr;
};

inline ValidationReport validate_manifest(const Manifest& m, const ValidationContext& ctx = {}) {
  ValidationReport r;
  auto add = [&](std::string rule, std::string subject, std::string msg) {
    r.violations.push_back({std::move(rule), std::move(subject), std::move(msg)});
  };

  std::map<std::string, const SourceDescriptor*> sources;
  for (const auto& s : m.sources) {
    if (!sources.emplace(s.source_id, &s).second) add("unique", s.source_id, "duplicate source id");
    if (s.kind == Label::kReal && s.voice_cloning) add("source", s.source_id, "real source carries voice_cloning");
    if (s.native_sample_rate_hz <= 0) add("source", s.source_id, "non-positive native sample rate");
  }

  std::map<std::string, const SampleRecord*> samples;
  for (const auto& s : m.samples) {
    if (!samples.emplace(s.sample_id, &s).second) add("unique", s.sample_id, "duplicate sample id");
  }

  std::map<std::string, const SampleRecord*> external;
  if (ctx.parent_manifest) {
    for (const auto& s : ctx.parent_manifest->samples) external.emplace(s.sample_id, &s);
  }

  for (const auto& s : m.samples) {
    const auto src = sources.find(s.source_id);
    if (src == sources.end()) {
      add("reference", s.sample_id, "unknown source '" + s.source_id + "'");
    } else if (src->second->kind != s.label) {
      add("label", s.sample_id, "label " + to_string(s.label) + " differs from source kind");
    }
    if (!(s.duration_s >= 0.0) || !std::isfinite(s.duration_s)) add("sample", s.sample_id, "bad duration");
    if (s.sample_rate_hz <= 0) add("sample", s.sample_id, "non-positive sample rate");
    if (s.file_path.empty()) add("sample", s.sample_id, "empty file path");

    if (s.is_original()) {
      if (s.parent_sample_id) add("lineage", s.sample_id, "original sample has a parent");
      continue;
    }
    if (m.task == Task::kTask1) add("lineage", s.sample_id, "task1 manifests hold originals only");
    if (s.label == Label::kReal) add("lineage", s.sample_id, "real sample carries a variant");
    if (!s.parent_sample_id) {
      add("lineage", s.sample_id, "variant '" + s.variant + "' has no parent");
      continue;
    }
    const SampleRecord* parent = nullptr;
    if (auto it = samples.find(*s.parent_sample_id); it != samples.end()) parent = it->second;
    if (!parent) {
      if (auto it = external.find(*s.parent_sample_id); it != external.end()) parent = it->second;
    }
    const bool parent_expected_inside = m.task == Task::kTask2 || ctx.parent_manifest != nullptr;
    if (!parent) {
      if (parent_expected_inside) add("lineage", s.sample_id, "parent " + *s.parent_sample_id + " not found");
    } else if (!parent->is_original() || parent->source_id != s.source_id) {
      add("lineage", s.sample_id, "parent must be an original of the same source");
    }
  }

  // Per-source counts.
  std::map<std::string, std::size_t> count;
  std::map<std::string, std::map<std::string, std::size_t>> by_variant;
  for (const auto& [id, _] : sources) count[id] = 0;
  for (const auto& s : m.samples) {
    ++count[s.source_id];
    ++by_variant[s.source_id][s.variant];
  }
  auto majority = [](const std::vector<std::size_t>& v) {
    std::map<std::size_t, std::size_t> h;
    for (auto x : v) ++h[x];
    std::size_t best = 0, best_n = 0;
    for (auto [x, n] : h) {
      if (n > best_n) best = x, best_n = n;
    }
    return best;
  };

  if (m.task == Task::kTask1) {
    std::vector<std::size_t> all;
    for (const auto& [id, n] : count) all.push_back(n);
    const std::size_t expect = m.params.contains("per_source") ? m.params["per_source"].get<std::size_t>()
                                                               : majority(all);
    for (const auto& [id, n] : count) {
      if (n != expect) {
        add("balance", id, std::to_string(n) + " samples, expected " + std::to_string(expect));
      }
    }
  } else {
    std::size_t expect = 0;
    std::vector<std::string> variants;
    if (m.task == Task::kTask2 && m.params.contains("clips_per_model") && m.params.contains("plan")) {
      variants = m.params["plan"].get<std::vector<std::string>>();
      expect = m.params["clips_per_model"].get<std::size_t>() * (variants.size() + 1);
    } else if (m.task == Task::kTask3 && m.params.contains("per_technique") && m.params.contains("techniques")) {
      variants = m.params["techniques"].get<std::vector<std::string>>();
      expect = m.params["per_technique"].get<std::size_t>() * variants.size();
    } else {
      std::vector<std::size_t> gen;
      for (const auto& [id, n] : count) {
        if (sources.at(id)->kind == Label::kGenerated) gen.push_back(n);
      }
      expect = majority(gen);
    }
    for (const auto& [id, n] : count) {
      if (sources.at(id)->kind != Label::kGenerated) continue;
      if (n != expect) add("balance", id, std::to_string(n) + " samples, expected " + std::to_string(expect));
      // Every variant of a source must have the same count as its originals
      // (task 2) or as every other technique (task 3).
      const auto& vc = by_variant[id];
      const std::size_t per = m.task == Task::kTask2 ? (vc.count(std::string(kOriginal)) ? vc.at(std::string(kOriginal)) : 0)
                                                     : (variants.empty() || !vc.count(variants.front()) ? 0 : vc.at(variants.front()));
      for (const auto& v : variants) {
        const std::size_t got = vc.count(v) ? vc.at(v) : 0;
        if (got != per) add("balance", id, "variant '" + v + "' has " + std::to_string(got) + " samples, expected " + std::to_string(per));
      }
      if (m.task == Task::kTask3 && vc.count(std::string(kOriginal))) {
        add("balance", id, "task3 generated sources carry only laundered variants");
      }
    }
  }

  if (ctx.public_manifest) {
    const Manifest& pub = *ctx.public_manifest;
    if (pub.split != Split::kPublic) add("subset", "<public>", "paired manifest is not a public split");
    if (pub.task != m.task) add("subset", "<public>", "task differs");
    std::set<std::string> public_sources;
    for (const auto& s : pub.sources) {
      public_sources.insert(s.source_id);
      const auto it = sources.find(s.source_id);
      if (it == sources.end()) {
        add("subset", s.source_id, "public source missing from private manifest");
      } else if (!it->second->in_public_split) {
        add("subset", s.source_id, "source in public manifest is not flagged public");
      }
    }
    for (const auto& s : pub.samples) {
      const auto it = samples.find(s.sample_id);
      if (it == samples.end() || !(*it->second == s)) {
        add("subset", s.sample_id, "public sample not identical to a private sample");
      }
    }
    std::set<std::string> pub_ids;
    for (const auto& s : pub.samples) pub_ids.insert(s.sample_id);
    for (const auto& s : m.samples) {
      const auto src = sources.find(s.source_id);
      if (src != sources.end() && src->second->in_public_split && !pub_ids.count(s.sample_id)) {
        add("subset", s.sample_id, "public-source sample missing from public manifest");
      }
    }
  }
  return r;
}

}  // namespace sdeval::manifest
