#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sdeval/audio/wav.hpp"
#include "sdeval/augment/apply.hpp"
#include "sdeval/error.hpp"
#include "sdeval/launder/spec.hpp"
#include "sdeval/manifest/types.hpp"
#include "sdeval/util/hash.hpp"
#include "sdeval/util/rng.hpp"

namespace sdeval::manifest {

namespace fs = std::filesystem;

// Opaque, stable sample ids. Originals hash their relative path; derived
// variants hash (parent id, variant).
inline std::string original_sample_id(const std::string& relative_path) {
  return util::hex64(util::fnv1a64("orig|" + relative_path));
}
inline std::string variant_sample_id(const std::string& parent_id, const std::string& variant) {
  return util::hex64(util::fnv1a64("var|" + parent_id + "|" + variant));
}
inline std::string derived_file_path(Task task, const std::string& source_id,
                                     const std::string& sample_id) {
  return "derived/" + to_string(task) + "/" + source_id + "/" + sample_id + ".wav";
}

// Optional per-source metadata. File format (JSON):
//   {"sources": [{"source_id": "...", "display_name": "...", "language": "en",
//                 "public": true, "voice_cloning": false}, ...]}
struct SourceCatalog {
  struct Entry {
    std::string display_name;
    std::optional<std::string> language;
    std::optional<bool> in_public_split;
    std::optional<bool> voice_cloning;
  };
  std::map<std::string, Entry> entries;

  static SourceCatalog load(const fs::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::kIo, "cannot read catalog " + path.string(), {path.string()});
    SourceCatalog cat;
    try {
      const json j = json::parse(in);
      for (const auto& e : j.at("sources")) {
        Entry entry;
        entry.display_name = e.value("display_name", e.at("source_id").get<std::string>());
        if (e.contains("language")) entry.language = e["language"].get<std::string>();
        if (e.contains("public")) entry.in_public_split = e["public"].get<bool>();
        if (e.contains("voice_cloning")) entry.voice_cloning = e["voice_cloning"].get<bool>();
        cat.entries[e.at("source_id").get<std::string>()] = entry;
      }
    } catch (const json::exception& e) {
      fail(ErrorCode::kFormat, "catalog " + path.string() + ": " + e.what());
    }
    return cat;
  }
};

struct Task1Options {
  // Paths in the manifest are relative to this directory. Default: the
  // deepest common ancestor of the real and generated roots.
  std::optional<fs::path> audio_root;
  std::optional<SourceCatalog> catalog;
  // Public-split sizes for sources the catalog does not place. Defaults are
  // floor(n/2) real and ceil(n/2) generated sources (10 of 21, 7 of 13).
  std::optional<std::size_t> public_real;
  std::optional<std::size_t> public_generated;
};

namespace detail {

inline bool has_wav_extension(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".wav" || ext == ".wave";
}

inline std::vector<fs::path> sorted_entries(const fs::path& dir, bool want_dirs) {
  std::vector<fs::path> out;
  if (!fs::is_directory(dir)) fail(ErrorCode::kIo, "not a directory: " + dir.string(), {dir.string()});
  for (const auto& e : fs::directory_iterator(dir)) {
    if (want_dirs ? e.is_directory() : (e.is_regular_file() && has_wav_extension(e.path()))) {
      out.push_back(e.path());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline fs::path common_ancestor(const fs::path& a, const fs::path& b) {
  const fs::path ca = fs::weakly_canonical(a), cb = fs::weakly_canonical(b);
  fs::path out;
  auto ia = ca.begin(), ib = cb.begin();
  for (; ia != ca.end() && ib != cb.end() && *ia == *ib; ++ia, ++ib) out /= *ia;
  return out;
}

inline int mode_rate(const std::vector<int>& rates) {
  std::map<int, std::size_t> counts;
  for (int r : rates) ++counts[r];
  int best = 0;
  std::size_t best_n = 0;
  for (const auto& [r, n] : counts) {
    if (n > best_n) {
      best = r;
      best_n = n;
    }
  }
  return best;
}

// Seeded choice of `count` public sources among those the catalog left open.
inline void assign_public(std::vector<SourceDescriptor>& sources, Label kind,
                          const std::vector<std::string>& undecided, std::size_t count,
                          std::uint64_t seed) {
  std::size_t already = 0;
  for (const auto& s : sources) {
    if (s.kind == kind && s.in_public_split) ++already;
  }
  const std::size_t want = count > already ? count - already : 0;
  util::Rng rng(util::derive_seed(seed, "public/" + to_string(kind)));
  const auto picks = util::sample_without_replacement(undecided.size(), want, rng);
  for (std::size_t i : picks) {
    for (auto& s : sources) {
      if (s.source_id == undecided[i]) s.in_public_split = true;
    }
  }
}

}  // namespace detail

// Selects exactly `per_source` original clips from every source directory
// under real_root/<source_id>/ and gen_root/<source_id>/.
inline Manifest build_task1_manifest(const fs::path& real_root, const fs::path& gen_root,
                                     std::size_t per_source, std::uint64_t seed,
                                     const Task1Options& opt = {}) {
  if (per_source == 0) fail(ErrorCode::kInvalidArgument, "per_source must be positive");
  const fs::path base = opt.audio_root ? fs::weakly_canonical(*opt.audio_root)
                                       : detail::common_ancestor(real_root, gen_root);
  Manifest m;
  m.task = Task::kTask1;
  m.split = Split::kPrivate;
  m.seed = seed;
  m.params = {{"per_source", per_source}};

  std::map<Label, std::vector<std::string>> undecided;
  std::set<std::string> seen_ids;
  for (const auto& [kind, root] : {std::pair{Label::kReal, real_root}, std::pair{Label::kGenerated, gen_root}}) {
    for (const auto& dir : detail::sorted_entries(root, true)) {
      const std::string source_id = dir.filename().string();
      if (!seen_ids.insert(source_id).second) {
        fail(ErrorCode::kInvalidArgument, "source id '" + source_id + "' appears under both roots",
             {source_id});
      }
      auto files = detail::sorted_entries(dir, false);
      if (files.size() < per_source) {
        fail(ErrorCode::kSourceUnderfull,
             source_id + ": found " + std::to_string(files.size()) + ", needed " + std::to_string(per_source),
             {source_id, std::to_string(files.size()), std::to_string(per_source)});
      }
      util::Rng rng(util::derive_seed(seed, "task1/" + source_id));
      util::fisher_yates(files, rng);
      files.resize(per_source);
      std::sort(files.begin(), files.end());

      SourceDescriptor src;
      src.source_id = source_id;
      src.kind = kind;
      src.display_name = source_id;
      std::vector<int> rates;
      for (const auto& f : files) {
        const auto buf = audio::read_wav(f);  // throws UndecodableFile
        SampleRecord rec;
        rec.file_path = fs::weakly_canonical(f).lexically_relative(base).generic_string();
        rec.sample_id = original_sample_id(rec.file_path);
        rec.source_id = source_id;
        rec.label = kind;
        rec.duration_s = buf.duration_s();
        rec.sample_rate_hz = buf.sample_rate_hz();
        rates.push_back(rec.sample_rate_hz);
        m.samples.push_back(std::move(rec));
      }
      src.native_sample_rate_hz = detail::mode_rate(rates);
      bool decided = false;
      if (opt.catalog) {
        const auto it = opt.catalog->entries.find(source_id);
        if (it != opt.catalog->entries.end()) {
          src.display_name = it->second.display_name;
          src.language = it->second.language;
          if (it->second.in_public_split) {
            src.in_public_split = *it->second.in_public_split;
            decided = true;
          }
          if (kind == Label::kGenerated) src.voice_cloning = it->second.voice_cloning;
        }
      }
      if (!decided) undecided[kind].push_back(source_id);
      m.sources.push_back(std::move(src));
    }
  }

  std::size_t n_real = 0, n_gen = 0;
  for (const auto& s : m.sources) (s.kind == Label::kReal ? n_real : n_gen)++;
  detail::assign_public(m.sources, Label::kReal, undecided[Label::kReal],
                        opt.public_real.value_or(n_real / 2), seed);
  detail::assign_public(m.sources, Label::kGenerated, undecided[Label::kGenerated],
                        opt.public_generated.value_or((n_gen + 1) / 2), seed);
  return m;
}

namespace detail {

inline void require_task1(const Manifest& m) {
  if (m.task != Task::kTask1) fail(ErrorCode::kInvalidArgument, "derivation needs a task1 manifest");
}

// Originals of one source, sorted by sample id for a stable draw order.
inline std::vector<const SampleRecord*> originals_of(const Manifest& m, const std::string& source_id) {
  std::vector<const SampleRecord*> out;
  for (const auto& s : m.samples) {
    if (s.source_id == source_id && s.is_original()) out.push_back(&s);
  }
  std::sort(out.begin(), out.end(),
            [](const auto* a, const auto* b) { return a->sample_id < b->sample_id; });
  return out;
}

inline SampleRecord make_variant(Task task, const SampleRecord& parent, const std::string& variant) {
  SampleRecord v = parent;
  v.sample_id = variant_sample_id(parent.sample_id, variant);
  v.variant = variant;
  v.parent_sample_id = parent.sample_id;
  v.file_path = derived_file_path(task, parent.source_id, v.sample_id);
  return v;
}

}  // namespace detail

// Task 2: per generated source, `clips_per_model` clips drawn without
// replacement; each keeps its original record and gains one variant per
// plan entry. Real samples are shared unchanged.
inline Manifest derive_task2_manifest(const Manifest& task1,
                                      const std::vector<augment::AugmentationSpec>& plan,
                                      std::size_t clips_per_model, std::uint64_t seed) {
  detail::require_task1(task1);
  if (plan.empty()) fail(ErrorCode::kUnknownOperator, "empty augmentation plan");
  if (clips_per_model == 0) fail(ErrorCode::kInvalidArgument, "clips_per_model must be positive");
  std::set<std::string> names;
  std::vector<std::string> plan_names;
  for (const auto& spec : plan) {
    augment::validate(spec);
    if (spec.op == augment::AugmentOp::kUnaugmented) {
      fail(ErrorCode::kInvalidArgument,
           "the unaugmented clip is retained implicitly; remove '" + spec.name + "' from the plan");
    }
    if (spec.name == kOriginal || !names.insert(spec.name).second) {
      fail(ErrorCode::kInvalidArgument, "duplicate or reserved variant name '" + spec.name + "'");
    }
    plan_names.push_back(spec.name);
  }

  Manifest out;
  out.task = Task::kTask2;
  out.split = Split::kPrivate;
  out.seed = seed;
  out.sources = task1.sources;
  out.params = {{"clips_per_model", clips_per_model}, {"plan", plan_names},
                {"parent_seed", task1.seed}};
  for (const auto& s : task1.samples) {
    if (s.label == Label::kReal) out.samples.push_back(s);
  }
  for (const auto& src : task1.sources) {
    if (src.kind != Label::kGenerated) continue;
    const auto originals = detail::originals_of(task1, src.source_id);
    if (originals.size() < clips_per_model) {
      fail(ErrorCode::kInsufficientClips,
           src.source_id + ": " + std::to_string(originals.size()) + " originals, need " +
               std::to_string(clips_per_model),
           {src.source_id});
    }
    util::Rng rng(util::derive_seed(seed, "task2/" + src.source_id));
    auto picks = util::sample_without_replacement(originals.size(), clips_per_model, rng);
    std::sort(picks.begin(), picks.end());
    for (std::size_t i : picks) {
      const SampleRecord& parent = *originals[i];
      out.samples.push_back(parent);
      for (const auto& spec : plan) out.samples.push_back(detail::make_variant(Task::kTask2, parent, spec.name));
    }
  }
  return out;
}

// Task 3: per generated source, per_technique * |techniques| distinct
// originals are drawn and partitioned across the techniques in order.
// Only laundered variants are kept for generated sources.
inline Manifest derive_task3_manifest(const Manifest& task1,
                                      const std::vector<launder::LaunderSpec>& techniques,
                                      std::size_t per_technique, std::uint64_t seed) {
  detail::require_task1(task1);
  if (techniques.empty()) fail(ErrorCode::kUnknownOperator, "no laundering techniques");
  if (per_technique == 0) fail(ErrorCode::kInvalidArgument, "per_technique must be positive");
  std::set<std::string> names;
  std::vector<std::string> technique_names;
  for (const auto& t : techniques) {
    launder::validate(t);
    if (!names.insert(t.name()).second) {
      fail(ErrorCode::kInvalidArgument, "duplicate technique '" + t.name() + "'");
    }
    technique_names.push_back(t.name());
  }

  Manifest out;
  out.task = Task::kTask3;
  out.split = Split::kPrivate;
  out.seed = seed;
  out.sources = task1.sources;
  out.params = {{"per_technique", per_technique}, {"techniques", technique_names},
                {"parent_seed", task1.seed}};
  for (const auto& s : task1.samples) {
    if (s.label == Label::kReal) out.samples.push_back(s);
  }
  const std::size_t needed = per_technique * techniques.size();
  for (const auto& src : task1.sources) {
    if (src.kind != Label::kGenerated) continue;
    const auto originals = detail::originals_of(task1, src.source_id);
    if (originals.size() < needed) {
      fail(ErrorCode::kInsufficientClips,
           src.source_id + ": " + std::to_string(originals.size()) + " originals, need " +
               std::to_string(needed),
           {src.source_id});
    }
    util::Rng rng(util::derive_seed(seed, "task3/" + src.source_id));
    const auto picks = util::sample_without_replacement(originals.size(), needed, rng);
    for (std::size_t t = 0; t < techniques.size(); ++t) {
      std::vector<std::size_t> slice(picks.begin() + static_cast<long>(t * per_technique),
                                     picks.begin() + static_cast<long>((t + 1) * per_technique));
      std::sort(slice.begin(), slice.end());
      for (std::size_t i : slice) {
        out.samples.push_back(detail::make_variant(Task::kTask3, *originals[i], technique_names[t]));
      }
    }
  }
  return out;
}

// Public view: only sources flagged in_public_split and their samples.
inline Manifest project_public(const Manifest& m) {
  if (m.split != Split::kPrivate) {
    fail(ErrorCode::kInvalidArgument, "project_public expects a private manifest");
  }
  Manifest out;
  out.task = m.task;
  out.split = Split::kPublic;
  out.seed = m.seed;
  out.params = m.params;
  std::set<std::string> keep;
  for (const auto& s : m.sources) {
    if (s.in_public_split) {
      keep.insert(s.source_id);
      out.sources.push_back(s);
    }
  }
  for (const auto& s : m.samples) {
    if (keep.count(s.source_id)) out.samples.push_back(s);
  }
  return out;
}

}  // namespace sdeval::manifest
