#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <unistd.h>

#include <nlohmann/json.hpp>

#include "sdeval/error.hpp"
#include "sdeval/manifest/types.hpp"
#include "sdeval/provenance.hpp"
#include "sdeval/runner/quota.hpp"
#include "sdeval/runner/stage.hpp"
#include "sdeval/scoring/submission.hpp"
#include "sdeval/util/hash.hpp"
#include "sdeval/util/process.hpp"

namespace sdeval::runner {

struct SandboxPolicy {
  bool deny_network = true;
  std::uint64_t workdir_quota_bytes = 4ull << 30;
};

struct RunConfig {
  int time_budget_s = 10000;
  int quota_per_day = 5;
  std::string compute_profile;  // recorded only
  SandboxPolicy sandbox;
};

inline void validate(const RunConfig& c) {
  if (c.time_budget_s <= 0) fail(ErrorCode::kInvalidArgument, "time budget must be positive");
  if (c.quota_per_day <= 0) fail(ErrorCode::kInvalidArgument, "daily quota must be positive");
  if (c.sandbox.workdir_quota_bytes == 0) fail(ErrorCode::kInvalidArgument, "workdir quota must be positive");
}

struct SubmissionJob {
  std::string team_id;
  std::string task;
  std::vector<std::string> entry_command;
  std::filesystem::path manifest_path;
  std::filesystem::path audio_root;
  std::int64_t submitted_at = 0;  // epoch seconds

  // Unique per call: resubmitting the same command yields a new job.
  std::string make_job_id() const {
    const auto ns = std::chrono::high_resolution_clock::now().time_since_epoch().count();
    std::string key = team_id + "|" + task + "|" + std::to_string(submitted_at) + "|" + std::to_string(ns) +
                      "|" + std::to_string(::getpid());
    for (const auto& a : entry_command) key += "|" + a;
    return util::hex64(util::fnv1a64(key));
  }
};

enum class RunStatus { kCompleted, kTimeout, kCrashed, kQuotaRejected, kInvalidOutput };

inline std::string to_string(RunStatus s) {
  switch (s) {
    case RunStatus::kCompleted: return "completed";
    case RunStatus::kTimeout: return "timeout";
    case RunStatus::kCrashed: return "crashed";
    case RunStatus::kQuotaRejected: return "quota_rejected";
    case RunStatus::kInvalidOutput: return "invalid_output";
  }
  return "?";
}

inline constexpr std::size_t kDiagnosticsBytes = 4096;

struct RunResult {
  std::string job_id;
  RunStatus status = RunStatus::kCrashed;
  double wall_time_s = 0.0;
  std::optional<std::filesystem::path> captured_submission;
  std::string diagnostics;
  int exit_code = -1;
  std::vector<std::string> network_attempts;
  std::vector<std::string> isolation;
};

inline void to_json(json& j, const RunResult& r) {
  j = json{{"job_id", r.job_id},
           {"status", to_string(r.status)},
           {"wall_time_s", r.wall_time_s},
           {"diagnostics", r.diagnostics},
           {"exit_code", r.exit_code},
           {"network_attempts", r.network_attempts},
           {"isolation", r.isolation}};
  j["captured_submission"] = r.captured_submission ? json(r.captured_submission->string()) : json(nullptr);
}

namespace detail {

inline std::string clip_diagnostics(std::string s) {
  if (s.size() <= kDiagnosticsBytes) return s;
  return "..." + s.substr(s.size() - (kDiagnosticsBytes - 3));
}

}  // namespace detail

// Runs `<entry_command...> <dataset_dir> <output_path>` inside `run_dir`
// against an already staged dataset. Failures are reported through the
// status, never thrown.
inline RunResult execute(const SubmissionJob& job, const RunConfig& cfg, const StagedDataset& staged,
                         const manifest::Manifest& m, const std::filesystem::path& run_dir,
                         const std::string& job_id = {}) {
  namespace fs = std::filesystem;
  RunResult r;
  r.job_id = job_id.empty() ? job.make_job_id() : job_id;
  if (job.entry_command.empty()) {
    r.diagnostics = "empty entry command";
    return r;
  }
  fs::create_directories(run_dir / "work");
  fs::create_directories(run_dir / "out");
  const fs::path output = run_dir / "out" / "submission.csv";
  fs::remove(output);

  util::ProcessOptions opt;
  opt.argv = job.entry_command;
  opt.argv.push_back(fs::absolute(staged.dir).string());
  opt.argv.push_back(fs::absolute(output).string());
  opt.cwd = run_dir / "work";
  opt.timeout = std::chrono::seconds(cfg.time_budget_s);
  opt.stdout_path = run_dir / "stdout.log";
  opt.stderr_path = run_dir / "stderr.log";
  opt.deny_network = cfg.sandbox.deny_network;
  opt.max_file_bytes = cfg.sandbox.workdir_quota_bytes;
  opt.tail_bytes = kDiagnosticsBytes;

  util::ProcessResult p;
  try {
    p = util::run_process(opt);
  } catch (const Error& e) {
    r.diagnostics = detail::clip_diagnostics(std::string("[runner] ") + e.what());
    return r;
  }
  r.wall_time_s = p.wall_time_s;
  r.exit_code = p.exit_code;
  r.network_attempts = p.network_attempts;
  r.isolation = p.isolation;
  std::string diag = p.stderr_tail;
  for (const auto& a : p.network_attempts) diag += "[runner] blocked network attempt: " + a + "\n";

  if (p.how == util::ProcessExit::kTimedOut) {
    r.status = RunStatus::kTimeout;
    std::error_code ec;
    if (fs::remove(output, ec)) diag += "[runner] partial submission discarded\n";
    diag += "[runner] killed at the " + std::to_string(cfg.time_budget_s) + " s budget\n";
  } else if (p.how == util::ProcessExit::kSignaled) {
    r.status = RunStatus::kCrashed;
    diag += "[runner] terminated by signal " + std::to_string(p.signal) + "\n";
  } else if (p.exit_code != 0) {
    r.status = RunStatus::kCrashed;
    diag += "[runner] exit code " + std::to_string(p.exit_code) + "\n";
  } else if (!fs::is_regular_file(output)) {
    r.status = RunStatus::kInvalidOutput;
    diag += "[runner] no submission written\n";
  } else {
    try {
      const auto sub = scoring::parse_submission(output, m);
      for (const auto& c : sub.canonicalized) diag += "[runner] " + c + "\n";
      r.status = RunStatus::kCompleted;
      r.captured_submission = output;
    } catch (const Error& e) {
      r.status = RunStatus::kInvalidOutput;
      diag += std::string("[runner] ") + e.what() + "\n";
    }
  }
  r.diagnostics = detail::clip_diagnostics(diag);
  return r;
}

// Quota check, staging, execution and logging for one job. Layout under
// `runs_root`: quota.jsonl, runs.jsonl, <job_id>/{dataset,work,out,*.log}.
inline RunResult submit(const SubmissionJob& job, const RunConfig& cfg, const std::filesystem::path& runs_root) {
  validate(cfg);
  namespace fs = std::filesystem;
  fs::create_directories(runs_root);
  RunResult r;
  r.job_id = job.make_job_id();
  QuotaLedger ledger(runs_root / "quota.jsonl");
  const auto decision =
      ledger.admit(QuotaEntry{job.team_id, job.task, r.job_id, job.submitted_at, false}, cfg.quota_per_day);
  if (decision == QuotaDecision::kReject) {
    r.status = RunStatus::kQuotaRejected;
    r.diagnostics = "[runner] team " + job.team_id + " already used " + std::to_string(cfg.quota_per_day) +
                    " submissions on " + iso_utc(job.submitted_at).substr(0, 10) + " (UTC)";
  } else {
    const auto m = manifest::load_manifest(job.manifest_path);
    const fs::path run_dir = runs_root / r.job_id;
    const auto staged = stage_dataset(m, job.audio_root, run_dir / "dataset");
    r = execute(job, cfg, staged, m, run_dir, r.job_id);
  }
  json entry = r;
  entry["team_id"] = job.team_id;
  entry["task"] = job.task;
  entry["submitted_at"] = job.submitted_at;
  entry["compute_profile"] = cfg.compute_profile;
  entry["time_budget_s"] = cfg.time_budget_s;
  std::ofstream log(runs_root / "runs.jsonl", std::ios::app);
  log << entry.dump() << '\n';
  return r;
}

}  // namespace sdeval::runner
