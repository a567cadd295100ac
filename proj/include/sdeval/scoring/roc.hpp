#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "sdeval/error.hpp"
#include "sdeval/manifest/types.hpp"
#include "sdeval/scoring/submission.hpp"

namespace sdeval::scoring {

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  bool operator==(const RocPoint&) const = default;
};

// Point i is the operating point of "generated iff score >= thresholds[i]";
// the first threshold is +inf (nothing flagged).
struct RocCurve {
  std::vector<RocPoint> points;
  std::vector<double> thresholds;
  bool operator==(const RocCurve&) const = default;
};

struct ScoredLabel {
  double score = 0.0;
  bool generated = false;
};

inline RocCurve roc_from_scores(std::vector<ScoredLabel> v) {
  std::size_t pos = 0, neg = 0;
  for (const auto& s : v) {
    if (!std::isfinite(s.score)) fail(ErrorCode::kNonFiniteScore, "non-finite score in ROC input");
    ++(s.generated ? pos : neg);
  }
  if (pos == 0 || neg == 0) fail(ErrorCode::kUndefinedClassRate, "ROC needs both classes");
  std::sort(v.begin(), v.end(), [](const ScoredLabel& a, const ScoredLabel& b) { return a.score > b.score; });
  RocCurve c;
  c.points.push_back({0.0, 0.0});
  c.thresholds.push_back(std::numeric_limits<double>::infinity());
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < v.size();) {
    const double t = v[i].score;
    for (; i < v.size() && v[i].score == t; ++i) ++(v[i].generated ? tp : fp);
    c.points.push_back({static_cast<double>(fp) / static_cast<double>(neg),
                        static_cast<double>(tp) / static_cast<double>(pos)});
    c.thresholds.push_back(t);
  }
  return c;
}

inline RocCurve roc_curve(const std::vector<DecisionRecord>& records, const manifest::Manifest& m) {
  std::map<std::string, Label> labels;
  for (const auto& s : m.samples) labels.emplace(s.sample_id, s.label);
  std::vector<ScoredLabel> v;
  v.reserve(records.size());
  for (const auto& r : records) {
    const auto it = labels.find(r.sample_id);
    if (it == labels.end()) fail(ErrorCode::kUnknownSample, "record for unknown sample", {r.sample_id});
    v.push_back({r.score, it->second == Label::kGenerated});
  }
  return roc_from_scores(std::move(v));
}

// Trapezoidal area under the swept curve.
inline double auc(const RocCurve& c) {
  double a = 0.0;
  for (std::size_t i = 1; i < c.points.size(); ++i) {
    a += (c.points[i].fpr - c.points[i - 1].fpr) * (c.points[i].tpr + c.points[i - 1].tpr) / 2.0;
  }
  return a;
}

// Rate r at which fpr = 1 - tpr, linear on the first segment that reaches it.
inline double eer(const RocCurve& c) {
  if (c.points.empty()) fail(ErrorCode::kInvalidArgument, "empty ROC curve");
  auto gap = [](const RocPoint& p) { return p.fpr + p.tpr - 1.0; };
  for (std::size_t i = 0; i < c.points.size(); ++i) {
    const double g = gap(c.points[i]);
    if (g < 0.0) continue;
    if (g == 0.0 || i == 0) return c.points[i].fpr;
    const RocPoint& a = c.points[i - 1];
    const RocPoint& b = c.points[i];
    const double t = -gap(a) / (g - gap(a));
    return a.fpr + t * (b.fpr - a.fpr);
  }
  return c.points.back().fpr;
}

inline double bac_at_eer(const RocCurve& c) { return 1.0 - eer(c); }

}  // namespace sdeval::scoring
