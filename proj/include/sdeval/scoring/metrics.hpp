#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "sdeval/error.hpp"
#include "sdeval/manifest/types.hpp"
#include "sdeval/scoring/submission.hpp"

namespace sdeval::scoring {

// Positive class is generated.
struct ConfusionCounts {
  std::size_t tp = 0, fn = 0, tn = 0, fp = 0;

  std::size_t positives() const { return tp + fn; }
  std::size_t negatives() const { return tn + fp; }

  double tpr() const {
    if (positives() == 0) fail(ErrorCode::kUndefinedClassRate, "no generated samples scored");
    return static_cast<double>(tp) / static_cast<double>(positives());
  }
  double tnr() const {
    if (negatives() == 0) fail(ErrorCode::kUndefinedClassRate, "no real samples scored");
    return static_cast<double>(tn) / static_cast<double>(negatives());
  }

  void add(Label truth, Label decision) {
    if (truth == Label::kGenerated) {
      ++(decision == Label::kGenerated ? tp : fn);
    } else {
      ++(decision == Label::kReal ? tn : fp);
    }
  }

  bool operator==(const ConfusionCounts&) const = default;
};

inline double balanced_accuracy(const ConfusionCounts& c) { return (c.tpr() + c.tnr()) / 2.0; }

using SampleFilter = std::function<bool(const manifest::SampleRecord&)>;

// Counts over the records whose manifest sample passes `keep`.
inline ConfusionCounts confusion(const std::vector<DecisionRecord>& records, const manifest::Manifest& m,
                                 const SampleFilter& keep = {}) {
  std::map<std::string, const manifest::SampleRecord*> index;
  for (const auto& s : m.samples) index.emplace(s.sample_id, &s);
  ConfusionCounts c;
  for (const auto& r : records) {
    const auto it = index.find(r.sample_id);
    if (it == index.end()) fail(ErrorCode::kUnknownSample, "record for unknown sample", {r.sample_id});
    if (keep && !keep(*it->second)) continue;
    c.add(it->second->label, r.decision);
  }
  return c;
}

// (TPR on one generated source + TNR over all real data) / 2.
inline double conditioned_bac_generated(const std::vector<DecisionRecord>& records, const manifest::Manifest& m,
                                        const std::string& source_id, double global_tnr) {
  const auto c = confusion(records, m, [&](const manifest::SampleRecord& s) {
    return s.source_id == source_id && s.label == Label::kGenerated;
  });
  if (c.positives() == 0) {
    fail(ErrorCode::kUndefinedClassRate, "no scored generated samples for source " + source_id, {source_id});
  }
  return (c.tpr() + global_tnr) / 2.0;
}

// (TPR over all generated data + TNR on one real source) / 2.
inline double conditioned_bac_real(const std::vector<DecisionRecord>& records, const manifest::Manifest& m,
                                   const std::string& source_id, double global_tpr) {
  const auto c = confusion(records, m, [&](const manifest::SampleRecord& s) {
    return s.source_id == source_id && s.label == Label::kReal;
  });
  if (c.negatives() == 0) {
    fail(ErrorCode::kUndefinedClassRate, "no scored real samples for source " + source_id, {source_id});
  }
  return (global_tpr + c.tnr()) / 2.0;
}

// (TPR on one processing variant of the generated data + global TNR) / 2.
inline double conditioned_bac_variant(const std::vector<DecisionRecord>& records, const manifest::Manifest& m,
                                      const std::string& variant, double global_tnr) {
  const auto c = confusion(records, m, [&](const manifest::SampleRecord& s) {
    return s.variant == variant && s.label == Label::kGenerated;
  });
  if (c.positives() == 0) {
    fail(ErrorCode::kUndefinedClassRate, "no scored generated samples for variant " + variant, {variant});
  }
  return (c.tpr() + global_tnr) / 2.0;
}

}  // namespace sdeval::scoring
