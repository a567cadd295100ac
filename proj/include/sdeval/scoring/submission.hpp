#pragma once

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "sdeval/error.hpp"
#include "sdeval/manifest/types.hpp"

namespace sdeval::scoring {

using manifest::Label;

// One row of a submission. Scores are oriented so that higher means more
// likely generated.
struct DecisionRecord {
  std::string sample_id;
  Label decision = Label::kReal;
  double score = 0.0;
  double inference_time_s = 0.0;

  bool operator==(const DecisionRecord&) const = default;
};

struct Submission {
  std::vector<DecisionRecord> records;  // manifest order
  // One entry per decision token that needed trimming or case folding.
  std::vector<std::string> canonicalized;
};

inline constexpr const char* kSubmissionHeader = "file,decision,score,inference_time_s";

namespace detail {

inline std::string trim(std::string s) {
  const auto issp = [](unsigned char c) { return std::isspace(c) != 0; };
  while (!s.empty() && issp(static_cast<unsigned char>(s.back()))) s.pop_back();
  std::size_t i = 0;
  while (i < s.size() && issp(static_cast<unsigned char>(s[i]))) ++i;
  return s.substr(i);
}

inline std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

// Comma-separated fields with optional double-quoted fields ("" escapes a quote).
inline bool split_csv(const std::string& line, std::vector<std::string>& out) {
  out.clear();
  std::string cur;
  bool quoted = false, was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"' && trim(cur).empty() && !was_quoted) {
      cur.clear();
      quoted = was_quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
      was_quoted = false;
    } else {
      cur += c;
    }
  }
  if (quoted) return false;
  out.push_back(cur);
  return true;
}

inline bool parse_double(const std::string& text, double& v) {
  const std::string t = trim(text);
  if (t.empty()) return false;
  // strtod accepts inf/nan spellings, which are then rejected as non-finite.
  char* end = nullptr;
  v = std::strtod(t.c_str(), &end);
  return end == t.c_str() + t.size();
}

}  // namespace detail

// Resolves a submission `file` cell to a sample id: the id itself, the
// manifest file_path, or any path whose stem is an id (staged files are
// named <sample_id>.wav).
class SampleResolver {
 public:
  explicit SampleResolver(const manifest::Manifest& m) {
    for (const auto& s : m.samples) {
      ids_.insert(s.sample_id);
      by_path_[s.file_path] = s.sample_id;
    }
  }

  std::optional<std::string> resolve(const std::string& cell) const {
    if (ids_.count(cell)) return cell;
    if (auto it = by_path_.find(cell); it != by_path_.end()) return it->second;
    const std::filesystem::path p(cell);
    std::string stem = p.filename().string();
    if (stem.size() > 4 && detail::lower(stem.substr(stem.size() - 4)) == ".wav") stem.resize(stem.size() - 4);
    if (ids_.count(stem)) return stem;
    return std::nullopt;
  }

 private:
  std::set<std::string> ids_;
  std::map<std::string, std::string> by_path_;
};

inline Submission parse_submission_text(std::istream& in, const manifest::Manifest& m,
                                        const std::string& name = "<submission>") {
  const SampleResolver resolver(m);
  Submission sub;
  std::map<std::string, DecisionRecord> seen;
  std::vector<std::string> unknown, duplicate;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  int col_file = -1, col_decision = -1, col_score = -1, col_time = -1;
  std::vector<std::string> f;
  auto where = [&] { return name + ":" + std::to_string(lineno); };

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (detail::trim(line).empty()) continue;
    if (!detail::split_csv(line, f)) {
      fail(ErrorCode::kMalformedRow, where() + ": unterminated quote", {std::to_string(lineno)});
    }
    if (!have_header) {
      for (std::size_t i = 0; i < f.size(); ++i) {
        const std::string h = detail::lower(detail::trim(f[i]));
        const int idx = static_cast<int>(i);
        if (h == "file") col_file = idx;
        if (h == "decision") col_decision = idx;
        if (h == "score") col_score = idx;
        if (h == "inference_time_s") col_time = idx;
      }
      if (col_file < 0 || col_decision < 0 || col_score < 0 || col_time < 0) {
        fail(ErrorCode::kMalformedRow, where() + ": header must be " + kSubmissionHeader,
             {std::to_string(lineno)});
      }
      have_header = true;
      continue;
    }
    const auto need = static_cast<std::size_t>(std::max({col_file, col_decision, col_score, col_time}));
    if (f.size() <= need) {
      fail(ErrorCode::kMalformedRow, where() + ": expected " + std::to_string(need + 1) + " fields",
           {std::to_string(lineno)});
    }
    DecisionRecord r;
    const std::string file = detail::trim(f[static_cast<std::size_t>(col_file)]);
    const std::string raw = f[static_cast<std::size_t>(col_decision)];
    const std::string token = detail::lower(detail::trim(raw));
    if (token == "generated") {
      r.decision = Label::kGenerated;
    } else if (token == "real") {
      r.decision = Label::kReal;
    } else {
      fail(ErrorCode::kMalformedRow, where() + ": decision must be real or generated", {std::to_string(lineno)});
    }
    if (token != raw) sub.canonicalized.push_back(where() + ": decision '" + raw + "' read as '" + token + "'");
    if (!detail::parse_double(f[static_cast<std::size_t>(col_score)], r.score)) {
      fail(ErrorCode::kMalformedRow, where() + ": score is not a number", {std::to_string(lineno)});
    }
    if (!std::isfinite(r.score)) {
      fail(ErrorCode::kNonFiniteScore, where() + ": score is not finite", {std::to_string(lineno)});
    }
    if (!detail::parse_double(f[static_cast<std::size_t>(col_time)], r.inference_time_s) ||
        !std::isfinite(r.inference_time_s) || r.inference_time_s < 0.0) {
      fail(ErrorCode::kMalformedRow, where() + ": inference_time_s must be a nonnegative number",
           {std::to_string(lineno)});
    }
    const auto id = resolver.resolve(file);
    if (!id) {
      unknown.push_back(file);
      continue;
    }
    r.sample_id = *id;
    if (!seen.emplace(*id, r).second) duplicate.push_back(*id);
  }
  if (!have_header) fail(ErrorCode::kMalformedRow, name + ": empty submission", {"1"});
  if (!unknown.empty()) fail(ErrorCode::kUnknownSample, name + ": rows for samples not in the manifest", unknown);
  if (!duplicate.empty()) {
    std::sort(duplicate.begin(), duplicate.end());
    duplicate.erase(std::unique(duplicate.begin(), duplicate.end()), duplicate.end());
    fail(ErrorCode::kDuplicateSample, name + ": samples listed more than once", duplicate);
  }
  std::vector<std::string> missing;
  for (const auto& s : m.samples) {
    const auto it = seen.find(s.sample_id);
    if (it == seen.end()) {
      missing.push_back(s.sample_id);
    } else {
      sub.records.push_back(it->second);
    }
  }
  if (!missing.empty()) fail(ErrorCode::kMissingSample, name + ": manifest samples without a row", missing);
  return sub;
}

inline Submission parse_submission(const std::filesystem::path& path, const manifest::Manifest& m) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot read submission " + path.string(), {path.string()});
  return parse_submission_text(in, m, path.string());
}

inline std::string format_submission(const std::vector<DecisionRecord>& records) {
  std::ostringstream os;
  os.precision(17);
  os << kSubmissionHeader << '\n';
  for (const auto& r : records) {
    os << r.sample_id << ".wav," << manifest::to_string(r.decision) << ',' << r.score << ','
       << r.inference_time_s << '\n';
  }
  return os.str();
}

}  // namespace sdeval::scoring
