#pragma once

#include <sys/stat.h>

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "sdeval/audio/wav.hpp"
#include "sdeval/error.hpp"
#include "sdeval/manifest/types.hpp"

namespace sdeval::runner {

namespace fs = std::filesystem;

// Blind view of a dataset: audio/<sample_id>.wav plus files.txt listing
// them. No labels, sources, variants or original paths are written, and
// WAV metadata chunks are dropped.
struct StagedDataset {
  fs::path dir;
  fs::path listing;
  std::size_t count = 0;
};

inline void set_read_only(const fs::path& root) {
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) fs::permissions(e.path(), fs::perms::owner_read | fs::perms::group_read | fs::perms::others_read);
  }
  std::vector<fs::path> dirs{root};
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_directory()) dirs.push_back(e.path());
  }
  for (const auto& d : dirs) {
    fs::permissions(d, fs::perms::owner_read | fs::perms::owner_exec | fs::perms::group_read |
                           fs::perms::group_exec | fs::perms::others_read | fs::perms::others_exec);
  }
}

// Restores owner write so a staged tree can be removed.
inline void remove_staged(const fs::path& root) {
  std::error_code ec;
  if (!fs::exists(root, ec)) return;
  fs::permissions(root, fs::perms::owner_all, fs::perm_options::add, ec);
  for (const auto& e : fs::recursive_directory_iterator(root, ec)) {
    fs::permissions(e.path(), fs::perms::owner_all, fs::perm_options::add, ec);
  }
  fs::remove_all(root, ec);
}

inline StagedDataset stage_dataset(const manifest::Manifest& m, const fs::path& audio_root, const fs::path& stage_dir) {
  std::vector<std::string> missing;
  for (const auto& s : m.samples) {
    if (!fs::is_regular_file(audio_root / s.file_path)) missing.push_back(s.sample_id);
  }
  if (!missing.empty()) fail(ErrorCode::kMissingAudio, "manifest audio not found under " + audio_root.string(), missing);

  remove_staged(stage_dir);
  fs::create_directories(stage_dir / "audio");
  std::vector<std::string> names;
  for (const auto& s : m.samples) {
    const std::string name = s.sample_id + ".wav";
    audio::copy_wav_audio_only(audio_root / s.file_path, stage_dir / "audio" / name);
    names.push_back("audio/" + name);
  }
  std::sort(names.begin(), names.end());
  StagedDataset st{stage_dir, stage_dir / "files.txt", names.size()};
  {
    std::ofstream out(st.listing);
    for (const auto& n : names) out << n << '\n';
    if (!out) fail(ErrorCode::kIo, "cannot write " + st.listing.string());
  }
  set_read_only(stage_dir);
  return st;
}

struct TokenHit {
  fs::path file;
  std::string token;
  bool operator==(const TokenHit&) const = default;
};

// Finds `tokens` (case-insensitive) in entry names and file bytes under
// `root`. For WAV files the sample payload of the data chunk is skipped:
// it is PCM, not text.
inline std::vector<TokenHit> scan_for_tokens(const fs::path& root, const std::vector<std::string>& tokens) {
  auto lower = [](std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
  };
  std::vector<TokenHit> hits;
  auto scan_text = [&](const fs::path& f, const std::string& text) {
    const std::string t = lower(text);
    for (const auto& tok : tokens) {
      if (!tok.empty() && t.find(lower(tok)) != std::string::npos) hits.push_back({f, tok});
    }
  };
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    scan_text(e.path(), e.path().lexically_relative(root).generic_string());
    if (!e.is_regular_file()) continue;
    const auto bytes = audio::detail::slurp(e.path());
    std::string text(bytes.begin(), bytes.end());
    if (e.path().extension() == ".wav") {
      std::string kept;
      for (const auto& c : audio::detail::list_chunks(bytes, e.path().string())) {
        kept.append(c.id);
        if (c.id != "data") kept.append(reinterpret_cast<const char*>(bytes.data() + c.offset), c.size);
      }
      text = kept;
    }
    scan_text(e.path(), text);
  }
  return hits;
}

}  // namespace sdeval::runner
