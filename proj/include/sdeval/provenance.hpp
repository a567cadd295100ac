#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace sdeval {

using json = nlohmann::json;

struct ProvenanceStep {
  std::string op;
  json params = json::object();  // resolved parameters and measured side facts
};

// Ordered record of what was done to one clip.
struct ProvenanceRecord {
  std::uint64_t seed = 0;
  std::vector<ProvenanceStep> steps;
  std::vector<std::string> notes;
  // Set when any stage stands in for a physical process (over-air surrogate).
  bool surrogate = false;

  void add(std::string op, json params = json::object()) {
    steps.push_back({std::move(op), std::move(params)});
  }

  std::vector<std::string> chain() const {
    std::vector<std::string> ops;
    for (const auto& s : steps) ops.push_back(s.op);
    return ops;
  }

  void append(const ProvenanceRecord& other) {
    steps.insert(steps.end(), other.steps.begin(), other.steps.end());
    notes.insert(notes.end(), other.notes.begin(), other.notes.end());
    surrogate = surrogate || other.surrogate;
  }
};

inline void to_json(json& j, const ProvenanceStep& s) {
  j = json{{"op", s.op}, {"params", s.params}};
}
inline void from_json(const json& j, ProvenanceStep& s) {
  j.at("op").get_to(s.op);
  s.params = j.value("params", json::object());
}
inline void to_json(json& j, const ProvenanceRecord& r) {
  j = json{{"seed", r.seed}, {"steps", r.steps}, {"notes", r.notes}, {"surrogate", r.surrogate}};
}
inline void from_json(const json& j, ProvenanceRecord& r) {
  j.at("seed").get_to(r.seed);
  j.at("steps").get_to(r.steps);
  r.notes = j.value("notes", std::vector<std::string>{});
  r.surrogate = j.value("surrogate", false);
}

}  // namespace sdeval
