#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <regex>
#include <set>
#include <shared_mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdeval/error.hpp"
#include "sdeval/manifest/types.hpp"
#include "sdeval/scoring/report.hpp"

namespace sdeval::board {

using manifest::Split;
using manifest::Task;
using scoring::MetricsReport;

enum class View { kPublic, kPrivate };

inline std::string to_string(View v) { return v == View::kPublic ? "public" : "private"; }
inline View parse_view(const std::string& s) {
  if (s.empty() || s == "public") return View::kPublic;
  if (s == "private") return View::kPrivate;
  fail(ErrorCode::kInvalidArgument, "view must be public or private", {s});
}

struct RunEvent {
  std::string idempotency_key;
  std::string team_id;
  Task task = Task::kTask1;
  std::int64_t timestamp_ms = 0;
  MetricsReport public_report;
  MetricsReport private_report;

  const MetricsReport& report(View v) const { return v == View::kPublic ? public_report : private_report; }
};

struct LeaderboardEntry {
  std::string team_id;
  Task task = Task::kTask1;
  double best_bac = 0.0;
  std::int64_t best_at_ms = 0;
  double latest_bac = 0.0;
  std::size_t submission_count = 0;
  double tpr = 0.0, tnr = 0.0;  // of the best run
  std::map<std::string, double> per_source;
  std::map<std::string, std::string> source_names;  // private view only
};

struct HistoryPoint {
  std::string team_id;
  Task task = Task::kTask1;
  std::int64_t timestamp_ms = 0;
  double bac = 0.0;
  Split split = Split::kPublic;
};

struct RocView {
  std::string team_id;
  Task task = Task::kTask1;
  View view = View::kPublic;
  scoring::RocCurve curve;
  scoring::RocPoint operating_point;
  double auc = 0.0, eer = 0.0, bac_at_eer = 0.0;
};

inline std::int64_t now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

inline void to_json(json& j, const LeaderboardEntry& e) {
  j = json{{"team_id", e.team_id},
           {"task", manifest::to_string(e.task)},
           {"best_bac", e.best_bac},
           {"best_at_ms", e.best_at_ms},
           {"latest_bac", e.latest_bac},
           {"submission_count", e.submission_count},
           {"tpr", e.tpr},
           {"tnr", e.tnr},
           {"per_source", e.per_source}};
  if (!e.source_names.empty()) j["source_names"] = e.source_names;
}

inline void to_json(json& j, const HistoryPoint& p) {
  j = json{{"team_id", p.team_id},
           {"task", manifest::to_string(p.task)},
           {"timestamp_ms", p.timestamp_ms},
           {"bac", p.bac},
           {"split", manifest::to_string(p.split)}};
}

inline void to_json(json& j, const RocView& r) {
  json fpr = json::array(), tpr = json::array(), thr = json::array();
  for (std::size_t i = 0; i < r.curve.points.size(); ++i) {
    fpr.push_back(r.curve.points[i].fpr);
    tpr.push_back(r.curve.points[i].tpr);
    if (std::isinf(r.curve.thresholds[i])) {
      thr.push_back(nullptr);
    } else {
      thr.push_back(r.curve.thresholds[i]);
    }
  }
  j = json{{"team_id", r.team_id},
           {"task", manifest::to_string(r.task)},
           {"view", to_string(r.view)},
           {"fpr", fpr},
           {"tpr", tpr},
           {"thresholds", thr},
           {"operating_point", {{"fpr", r.operating_point.fpr}, {"tpr", r.operating_point.tpr}}},
           {"auc", r.auc},
           {"eer", r.eer},
           {"bac_at_eer", r.bac_at_eer}};
}

// Public reports may only carry pseudonymous source keys.
inline void check_public_report(const MetricsReport& r) {
  static const std::regex pseudonym("^[RG][0-9]+$");
  if (!r.anonymized || !r.source_names.empty()) {
    fail(ErrorCode::kInvalidArgument, "public report must be anonymized");
  }
  if (r.split != Split::kPublic) fail(ErrorCode::kInvalidArgument, "public report must score the public split");
  for (const auto* m : {&r.per_generated_source, &r.per_real_source}) {
    for (const auto& [k, _] : *m) {
      if (!std::regex_match(k, pseudonym)) fail(ErrorCode::kInvalidArgument, "non-pseudonymous key in public report", {k});
    }
  }
}

// Append-only event log (JSONL) with in-memory views rebuilt from it.
// Writers are serialized; readers share a consistent snapshot.
class Board {
 public:
  // `log_path` empty: in-memory only.
  explicit Board(std::filesystem::path log_path = {}) : log_path_(std::move(log_path)) {
    if (!log_path_.empty() && std::filesystem::exists(log_path_)) replay();
  }

  // Returns the stored timestamp.
  std::int64_t ingest(RunEvent ev) {
    if (ev.idempotency_key.empty()) fail(ErrorCode::kInvalidArgument, "idempotency key required");
    if (ev.team_id.empty()) fail(ErrorCode::kInvalidArgument, "team_id required");
    check_public_report(ev.public_report);
    if (ev.private_report.split != Split::kPrivate) {
      fail(ErrorCode::kInvalidArgument, "private report must score the private split");
    }
    if (ev.public_report.task != ev.task || ev.private_report.task != ev.task) {
      fail(ErrorCode::kInvalidArgument, "report task differs from run task");
    }
    std::unique_lock lock(mu_);
    if (keys_.count(ev.idempotency_key)) {
      fail(ErrorCode::kDuplicateRun, "run already ingested", {ev.idempotency_key});
    }
    const auto& prior = runs_[ev.team_id][ev.task];
    if (!prior.empty()) {
      const auto last = prior.back().timestamp_ms;
      if (ev.timestamp_ms == 0) ev.timestamp_ms = std::max(now_ms(), last + 1);
      if (ev.timestamp_ms <= last) {
        fail(ErrorCode::kInvalidArgument, "timestamps must increase per team and task");
      }
    } else if (ev.timestamp_ms == 0) {
      ev.timestamp_ms = now_ms();
    }
    append_line(json{{"type", "run"},
                     {"idempotency_key", ev.idempotency_key},
                     {"team_id", ev.team_id},
                     {"task", manifest::to_string(ev.task)},
                     {"timestamp_ms", ev.timestamp_ms},
                     {"public_report", ev.public_report},
                     {"private_report", ev.private_report}});
    const auto ts = ev.timestamp_ms;
    apply(std::move(ev));
    return ts;
  }

  void set_round_active(bool active) {
    std::unique_lock lock(mu_);
    append_line(json{{"type", "round"}, {"active", active}, {"timestamp_ms", now_ms()}});
    round_active_ = active;
  }

  bool round_active() const {
    std::shared_lock lock(mu_);
    return round_active_;
  }

  std::vector<LeaderboardEntry> leaderboard(Task task, View view) const {
    std::shared_lock lock(mu_);
    std::vector<LeaderboardEntry> out;
    for (const auto& [team, by_task] : runs_) {
      const auto it = by_task.find(task);
      if (it == by_task.end() || it->second.empty()) continue;
      const auto& runs = it->second;
      LeaderboardEntry e;
      e.team_id = team;
      e.task = task;
      e.submission_count = runs.size();
      const RunEvent* best = nullptr;
      for (const auto& r : runs) {
        // Strictly greater keeps the earliest run among equal BACs.
        if (!best || r.report(view).overall.bac > best->report(view).overall.bac) best = &r;
      }
      const auto& rep = best->report(view);
      e.best_bac = rep.overall.bac;
      e.best_at_ms = best->timestamp_ms;
      e.latest_bac = runs.back().report(view).overall.bac;
      e.tpr = rep.overall.tpr;
      e.tnr = rep.overall.tnr;
      for (const auto* m : {&rep.per_generated_source, &rep.per_real_source}) {
        e.per_source.insert(m->begin(), m->end());
      }
      e.source_names = rep.source_names;
      out.push_back(std::move(e));
    }
    std::sort(out.begin(), out.end(), [](const LeaderboardEntry& a, const LeaderboardEntry& b) {
      if (a.best_bac != b.best_bac) return a.best_bac > b.best_bac;
      if (a.best_at_ms != b.best_at_ms) return a.best_at_ms < b.best_at_ms;
      return a.team_id < b.team_id;
    });
    return out;
  }

  std::vector<HistoryPoint> history(const std::string& team_id, Task task, View view) const {
    std::shared_lock lock(mu_);
    const auto it = runs_.find(team_id);
    if (it == runs_.end()) fail(ErrorCode::kUnknownTeam, "unknown team", {team_id});
    std::vector<HistoryPoint> out;
    const auto t = it->second.find(task);
    if (t == it->second.end()) return out;
    for (const auto& r : t->second) {
      out.push_back({team_id, task, r.timestamp_ms, r.public_report.overall.bac, Split::kPublic});
      if (view == View::kPrivate) {
        out.push_back({team_id, task, r.timestamp_ms, r.private_report.overall.bac, Split::kPrivate});
      }
    }
    return out;
  }

  // ROC of the team's best run on the view's split.
  RocView roc(const std::string& team_id, Task task, View view) const {
    if (view == View::kPublic && round_active()) {
      fail(ErrorCode::kRoundActive, "public ROC curves are hidden while the round is active");
    }
    const auto board = leaderboard(task, view);
    std::shared_lock lock(mu_);
    const auto it = runs_.find(team_id);
    if (it == runs_.end()) fail(ErrorCode::kUnknownTeam, "unknown team", {team_id});
    const auto t = it->second.find(task);
    if (t == it->second.end() || t->second.empty()) {
      fail(ErrorCode::kScoresUnavailable, "no runs for this team and task", {team_id});
    }
    std::int64_t best_at = 0;
    for (const auto& e : board) {
      if (e.team_id == team_id) best_at = e.best_at_ms;
    }
    const RunEvent* run = &t->second.back();
    for (const auto& r : t->second) {
      if (r.timestamp_ms == best_at) run = &r;
    }
    const auto& rep = run->report(view);
    if (!rep.roc) fail(ErrorCode::kScoresUnavailable, "scores were not retained for this run", {team_id});
    return RocView{team_id, task, view, *rep.roc, rep.operating_point, rep.auc, rep.eer, rep.bac_at_eer};
  }

  std::vector<std::string> teams() const {
    std::shared_lock lock(mu_);
    std::vector<std::string> out;
    for (const auto& [k, _] : runs_) out.push_back(k);
    return out;
  }

  std::size_t event_count() const {
    std::shared_lock lock(mu_);
    return events_;
  }

 private:
  void append_line(const json& j) {
    ++events_;
    if (log_path_.empty()) return;
    if (log_path_.has_parent_path()) std::filesystem::create_directories(log_path_.parent_path());
    std::ofstream out(log_path_, std::ios::app);
    out << j.dump() << '\n';
    out.flush();
    if (!out) fail(ErrorCode::kIo, "cannot append to event log " + log_path_.string());
  }

  void apply(RunEvent ev) {
    keys_.insert(ev.idempotency_key);
    auto& v = runs_[ev.team_id][ev.task];
    v.push_back(std::move(ev));
  }

  void replay() {
    std::ifstream in(log_path_);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      try {
        const auto j = json::parse(line);
        ++events_;
        if (j.at("type") == "round") {
          round_active_ = j.at("active").get<bool>();
          continue;
        }
        RunEvent ev;
        ev.idempotency_key = j.at("idempotency_key").get<std::string>();
        ev.team_id = j.at("team_id").get<std::string>();
        ev.task = manifest::parse_task(j.at("task").get<std::string>());
        ev.timestamp_ms = j.at("timestamp_ms").get<std::int64_t>();
        ev.public_report = j.at("public_report").get<MetricsReport>();
        ev.private_report = j.at("private_report").get<MetricsReport>();
        apply(std::move(ev));
      } catch (const Error&) {
        throw;
      } catch (const std::exception& e) {
        fail(ErrorCode::kFormat, log_path_.string() + ":" + std::to_string(lineno) + ": " + e.what());
      }
    }
  }

  std::filesystem::path log_path_;
  mutable std::shared_mutex mu_;
  std::map<std::string, std::map<Task, std::vector<RunEvent>>> runs_;
  std::set<std::string> keys_;
  bool round_active_ = false;
  std::size_t events_ = 0;
};

}  // namespace sdeval::board
