#pragma once

#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdeval/manifest/anonymize.hpp"
#include "sdeval/manifest/types.hpp"
#include "sdeval/scoring/metrics.hpp"
#include "sdeval/scoring/roc.hpp"
#include "sdeval/scoring/submission.hpp"

namespace sdeval::scoring {

inline constexpr std::string_view kReportFormat = "sdeval-report";
inline constexpr int kReportVersion = 1;

struct Rates {
  double tpr = 0.0, tnr = 0.0, bac = 0.0;
  bool operator==(const Rates&) const = default;
};

struct MetricsReport {
  manifest::Task task = manifest::Task::kTask1;
  manifest::Split split = manifest::Split::kPrivate;
  bool anonymized = false;
  std::size_t n_samples = 0;
  ConfusionCounts counts;
  Rates overall;
  RocPoint operating_point;  // (1 - tnr, tpr) of the submitted decisions
  std::map<std::string, double> per_generated_source;
  std::map<std::string, double> per_real_source;
  std::map<std::string, double> per_variant;  // processed or laundered variants only
  std::optional<RocCurve> roc;
  double auc = 0.0, eer = 0.0, bac_at_eer = 0.0;
  double mean_inference_time_s = 0.0;
  std::map<std::string, std::string> source_names;  // not anonymized only

  bool operator==(const MetricsReport&) const = default;
};

inline void to_json(json& j, const MetricsReport& r) {
  j = json{{"format", kReportFormat},
           {"version", kReportVersion},
           {"task", manifest::to_string(r.task)},
           {"split", manifest::to_string(r.split)},
           {"anonymized", r.anonymized},
           {"n_samples", r.n_samples},
           {"counts", {{"tp", r.counts.tp}, {"fn", r.counts.fn}, {"tn", r.counts.tn}, {"fp", r.counts.fp}}},
           {"overall", {{"tpr", r.overall.tpr}, {"tnr", r.overall.tnr}, {"bac", r.overall.bac}}},
           {"operating_point", {{"fpr", r.operating_point.fpr}, {"tpr", r.operating_point.tpr}}},
           {"per_generated_source", r.per_generated_source},
           {"per_real_source", r.per_real_source},
           {"per_variant", r.per_variant},
           {"mean_inference_time_s", r.mean_inference_time_s}};
  if (r.roc) {
    json fpr = json::array(), tpr = json::array(), thr = json::array();
    for (std::size_t i = 0; i < r.roc->points.size(); ++i) {
      fpr.push_back(r.roc->points[i].fpr);
      tpr.push_back(r.roc->points[i].tpr);
      // +inf has no JSON spelling; null stands for it.
      if (std::isinf(r.roc->thresholds[i])) {
        thr.push_back(nullptr);
      } else {
        thr.push_back(r.roc->thresholds[i]);
      }
    }
    j["roc"] = {{"fpr", fpr}, {"tpr", tpr}, {"thresholds", thr}};
    j["auc"] = r.auc;
    j["eer"] = r.eer;
    j["bac_at_eer"] = r.bac_at_eer;
  }
  if (!r.anonymized) j["source_names"] = r.source_names;
}

inline void from_json(const json& j, MetricsReport& r) {
  if (j.value("format", std::string{}) != kReportFormat) fail(ErrorCode::kFormat, "not an sdeval report");
  if (j.value("version", 0) != kReportVersion) fail(ErrorCode::kFormat, "unsupported report version");
  r = MetricsReport{};
  r.task = manifest::parse_task(j.at("task").get<std::string>());
  r.split = manifest::parse_split(j.at("split").get<std::string>());
  r.anonymized = j.at("anonymized").get<bool>();
  r.n_samples = j.at("n_samples").get<std::size_t>();
  const auto& c = j.at("counts");
  r.counts = {c.at("tp").get<std::size_t>(), c.at("fn").get<std::size_t>(), c.at("tn").get<std::size_t>(),
              c.at("fp").get<std::size_t>()};
  const auto& o = j.at("overall");
  r.overall = {o.at("tpr").get<double>(), o.at("tnr").get<double>(), o.at("bac").get<double>()};
  r.operating_point = {j.at("operating_point").at("fpr").get<double>(),
                       j.at("operating_point").at("tpr").get<double>()};
  j.at("per_generated_source").get_to(r.per_generated_source);
  j.at("per_real_source").get_to(r.per_real_source);
  r.per_variant = j.value("per_variant", std::map<std::string, double>{});
  r.mean_inference_time_s = j.at("mean_inference_time_s").get<double>();
  if (j.contains("roc")) {
    RocCurve curve;
    const auto& fpr = j["roc"].at("fpr");
    const auto& tpr = j["roc"].at("tpr");
    const auto& thr = j["roc"].at("thresholds");
    if (fpr.size() != tpr.size() || fpr.size() != thr.size()) fail(ErrorCode::kFormat, "ragged ROC arrays");
    for (std::size_t i = 0; i < fpr.size(); ++i) {
      curve.points.push_back({fpr[i].get<double>(), tpr[i].get<double>()});
      curve.thresholds.push_back(thr[i].is_null() ? std::numeric_limits<double>::infinity() : thr[i].get<double>());
    }
    r.roc = std::move(curve);
    r.auc = j.at("auc").get<double>();
    r.eer = j.at("eer").get<double>();
    r.bac_at_eer = j.at("bac_at_eer").get<double>();
  }
  r.source_names = j.value("source_names", std::map<std::string, std::string>{});
}

// Deterministic text form: sorted keys, fixed layout.
inline std::string serialize(const MetricsReport& r) { return json(r).dump(2) + "\n"; }

struct ReportOptions {
  const manifest::AnonymizationMap* anon = nullptr;  // set for the public view
  bool with_roc = true;
};

inline MetricsReport full_report(const std::vector<DecisionRecord>& records, const manifest::Manifest& m,
                                 const ReportOptions& opt = {}) {
  MetricsReport r;
  r.task = m.task;
  r.split = m.split;
  r.anonymized = opt.anon != nullptr;
  r.n_samples = records.size();
  r.counts = confusion(records, m);
  r.overall.tpr = r.counts.tpr();
  r.overall.tnr = r.counts.tnr();
  r.overall.bac = (r.overall.tpr + r.overall.tnr) / 2.0;
  r.operating_point = {1.0 - r.overall.tnr, r.overall.tpr};

  auto key = [&](const std::string& source_id) {
    return opt.anon ? opt.anon->pseudonym(source_id) : source_id;
  };
  std::set<std::string> scored_sources, variants;
  {
    std::set<std::string> ids;
    for (const auto& d : records) ids.insert(d.sample_id);
    for (const auto& s : m.samples) {
      if (!ids.count(s.sample_id)) continue;
      scored_sources.insert(s.source_id);
      if (!s.is_original() && s.label == Label::kGenerated) variants.insert(s.variant);
    }
  }
  for (const auto& src : m.sources) {
    if (!scored_sources.count(src.source_id)) continue;
    if (src.kind == Label::kGenerated) {
      r.per_generated_source[key(src.source_id)] =
          conditioned_bac_generated(records, m, src.source_id, r.overall.tnr);
    } else {
      r.per_real_source[key(src.source_id)] = conditioned_bac_real(records, m, src.source_id, r.overall.tpr);
    }
    if (!opt.anon) r.source_names[src.source_id] = src.display_name;
  }
  for (const auto& v : variants) r.per_variant[v] = conditioned_bac_variant(records, m, v, r.overall.tnr);

  if (opt.with_roc) {
    r.roc = roc_curve(records, m);
    r.auc = auc(*r.roc);
    r.eer = eer(*r.roc);
    r.bac_at_eer = 1.0 - r.eer;
  }
  double t = 0.0;
  for (const auto& d : records) t += d.inference_time_s;
  r.mean_inference_time_s = records.empty() ? 0.0 : t / static_cast<double>(records.size());
  return r;
}

}  // namespace sdeval::scoring
