#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdeval/manifest/types.hpp"
#include "sdeval/util/hash.hpp"

namespace sdeval::manifest {

// source_id -> pseudonym ("R07", "G03"). Real sources live in the R
// namespace, generated ones in G; indices are assigned by sorting
// HMAC-SHA256(salt, source_id), so the order carries no information about
// names and is stable for a fixed salt.
struct AnonymizationMap {
  std::string salt;
  std::map<std::string, std::string> entries;

  const std::string& pseudonym(const std::string& source_id) const {
    const auto it = entries.find(source_id);
    if (it == entries.end()) fail(ErrorCode::kInvalidArgument, "source not anonymized: " + source_id, {source_id});
    return it->second;
  }

  bool operator==(const AnonymizationMap&) const = default;
};

inline void to_json(json& j, const AnonymizationMap& a) {
  j = json{{"salt_hex", util::to_hex(util::keyed_hash("salt-fingerprint", a.salt))},
           {"entries", a.entries}};
}

inline AnonymizationMap anonymize_sources(const Manifest& m, const std::string& salt) {
  AnonymizationMap out;
  out.salt = salt;
  for (const Label kind : {Label::kReal, Label::kGenerated}) {
    std::vector<std::pair<std::string, std::string>> keyed;  // (hash, source_id)
    for (const auto& s : m.sources) {
      if (s.kind == kind) keyed.emplace_back(util::to_hex(util::keyed_hash(salt, s.source_id)), s.source_id);
    }
    std::sort(keyed.begin(), keyed.end());
    const std::size_t width = std::max<std::size_t>(2, std::to_string(keyed.size()).size());
    const char prefix = kind == Label::kReal ? 'R' : 'G';
    for (std::size_t i = 0; i < keyed.size(); ++i) {
      std::string idx = std::to_string(i + 1);
      idx.insert(0, width - idx.size(), '0');
      out.entries[keyed[i].second] = std::string(1, prefix) + idx;
    }
  }
  return out;
}

}  // namespace sdeval::manifest
