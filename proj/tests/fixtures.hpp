#pragma once

// In-memory manifests and decision sets with prescribed confusion rates.

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "sdeval/augment/apply.hpp"
#include "sdeval/manifest/types.hpp"
#include "sdeval/scoring/submission.hpp"

namespace fixture {

using sdeval::manifest::Label;
using sdeval::manifest::Manifest;
using sdeval::manifest::SampleRecord;
using sdeval::manifest::SourceDescriptor;
using sdeval::scoring::DecisionRecord;

struct SourceSpec {
  std::string id;
  Label kind;
  std::size_t count;
  bool in_public = false;
};

inline Manifest manifest(const std::vector<SourceSpec>& specs) {
  Manifest m;
  for (const auto& s : specs) {
    SourceDescriptor d;
    d.source_id = s.id;
    d.kind = s.kind;
    d.display_name = "Display " + s.id;
    d.native_sample_rate_hz = 16000;
    d.in_public_split = s.in_public;
    m.sources.push_back(d);
    for (std::size_t i = 0; i < s.count; ++i) {
      SampleRecord r;
      r.sample_id = s.id + "_" + std::to_string(i);
      r.source_id = s.id;
      r.label = s.kind;
      r.file_path = s.id + "/" + r.sample_id + ".wav";
      r.duration_s = 1.0;
      r.sample_rate_hz = 16000;
      m.samples.push_back(r);
    }
  }
  return m;
}

// Decisions where the first round(rate * n) samples of every source are
// classified correctly (rate = TPR for generated sources, TNR for real).
// Exact class rates: llround(rate * class size) correct calls, split over
// sources by largest remainder, first samples of each source correct.
inline std::vector<DecisionRecord> decisions(const Manifest& m, double tpr, double tnr) {
  std::map<std::string, std::size_t> seen, total, correct;
  std::map<Label, std::vector<std::string>> by_class;
  for (const auto& s : m.samples) {
    if (total[s.source_id]++ == 0) by_class[s.label].push_back(s.source_id);
  }
  for (const auto& [label, ids] : by_class) {
    const double rate = label == Label::kGenerated ? tpr : tnr;
    std::size_t n = 0, given = 0;
    for (const auto& id : ids) n += total[id];
    const auto target = static_cast<std::size_t>(std::llround(rate * static_cast<double>(n)));
    std::vector<std::pair<double, std::size_t>> rem;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const double exact = rate * static_cast<double>(total[ids[i]]);
      correct[ids[i]] = static_cast<std::size_t>(std::floor(exact));
      given += correct[ids[i]];
      rem.push_back({exact - std::floor(exact), i});
    }
    std::stable_sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t k = 0; given < target && k < rem.size(); ++k, ++given) ++correct[ids[rem[k].second]];
  }
  std::vector<DecisionRecord> out;
  for (const auto& s : m.samples) {
    const bool gen = s.label == Label::kGenerated;
    const bool right = seen[s.source_id]++ < correct[s.source_id];
    const Label other = gen ? Label::kReal : Label::kGenerated;
    out.push_back({s.sample_id, right ? s.label : other, right == gen ? 0.9 : 0.1, 0.01});
  }
  return out;
}

inline sdeval::augment::AugmentationSpec op(const std::string& name, sdeval::augment::AugmentOp kind) {
  sdeval::augment::AugmentationSpec s;
  s.name = name;
  s.op = kind;
  return s;
}

}  // namespace fixture
