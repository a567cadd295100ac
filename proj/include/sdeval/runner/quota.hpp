#pragma once

#include <sys/file.h>
#include <fcntl.h>
#include <unistd.h>

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdeval/error.hpp"
#include "sdeval/provenance.hpp"

namespace sdeval::runner {

inline std::int64_t now_epoch_s() {
  return std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch())
      .count();
}

// UTC calendar day number (days since 1970-01-01).
inline std::int64_t utc_day(std::int64_t epoch_s) {
  return epoch_s >= 0 ? epoch_s / 86400 : -((-epoch_s + 86399) / 86400);
}

inline std::string iso_utc(std::int64_t epoch_s) {
  const std::time_t t = static_cast<std::time_t>(epoch_s);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct QuotaEntry {
  std::string team_id;
  std::string task;
  std::string job_id;
  std::int64_t submitted_at = 0;  // epoch seconds
  bool accepted = false;

  bool operator==(const QuotaEntry&) const = default;
};

inline void to_json(json& j, const QuotaEntry& e) {
  j = json{{"team_id", e.team_id},       {"task", e.task},         {"job_id", e.job_id},
           {"submitted_at", e.submitted_at}, {"utc", iso_utc(e.submitted_at)}, {"accepted", e.accepted}};
}
inline void from_json(const json& j, QuotaEntry& e) {
  j.at("team_id").get_to(e.team_id);
  e.task = j.value("task", std::string{});
  e.job_id = j.value("job_id", std::string{});
  j.at("submitted_at").get_to(e.submitted_at);
  j.at("accepted").get_to(e.accepted);
}

enum class QuotaDecision { kAccept, kReject };

// Accept unless the team already has `quota_per_day` accepted jobs on the
// same UTC day as `submitted_at`.
inline QuotaDecision check_quota(const std::string& team_id, std::int64_t submitted_at,
                                 const std::vector<QuotaEntry>& ledger, int quota_per_day) {
  const auto day = utc_day(submitted_at);
  int used = 0;
  for (const auto& e : ledger) {
    if (e.accepted && e.team_id == team_id && utc_day(e.submitted_at) == day) ++used;
  }
  return used >= quota_per_day ? QuotaDecision::kReject : QuotaDecision::kAccept;
}

// Append-only JSONL ledger. admit() holds an exclusive flock across the
// read-check-append so concurrent workers serialize through the file.
class QuotaLedger {
 public:
  explicit QuotaLedger(std::filesystem::path path) : path_(std::move(path)) {}

  const std::filesystem::path& path() const { return path_; }

  std::vector<QuotaEntry> entries() const {
    std::vector<QuotaEntry> out;
    std::ifstream in(path_);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      try {
        out.push_back(json::parse(line).get<QuotaEntry>());
      } catch (const std::exception& e) {
        fail(ErrorCode::kFormat, path_.string() + ":" + std::to_string(lineno) + ": " + e.what());
      }
    }
    return out;
  }

  QuotaDecision admit(QuotaEntry entry, int quota_per_day) {
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
    const int fd = ::open(path_.c_str(), O_RDWR | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (fd < 0) fail(ErrorCode::kIo, "cannot open quota ledger " + path_.string());
    ::flock(fd, LOCK_EX);
    QuotaDecision d;
    try {
      d = check_quota(entry.team_id, entry.submitted_at, entries(), quota_per_day);
      entry.accepted = d == QuotaDecision::kAccept;
      const std::string line = json(entry).dump() + "\n";
      if (::write(fd, line.data(), line.size()) != static_cast<ssize_t>(line.size())) {
        fail(ErrorCode::kIo, "short write to quota ledger " + path_.string());
      }
    } catch (...) {
      ::flock(fd, LOCK_UN);
      ::close(fd);
      throw;
    }
    ::flock(fd, LOCK_UN);
    ::close(fd);
    return d;
  }

 private:
  std::filesystem::path path_;
};

}  // namespace sdeval::runner
