#pragma once

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "structspan/errors.hpp"
#include "structspan/rng.hpp"
#include "structspan/sentence.hpp"

namespace structspan {

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// JSON-lines corpus:
//   {"tokens": [...], "entities": [{"start": i, "end": j, "type": "T"}], "id": "..."}
// with `end` inclusive.
// ---------------------------------------------------------------------------

inline Json sentence_to_json(const Sentence& s) {
  Json ents = Json::array();
  for (const auto& e : s.entities)
    ents.push_back(Json{{"start", e.start}, {"end", e.end}, {"type", e.type}});
  return Json{{"tokens", s.tokens}, {"entities", std::move(ents)}, {"id", s.id}};
}

inline std::string sentence_to_line(const Sentence& s) { return sentence_to_json(s).dump(); }

/// Checks the Sentence invariants. `where` prefixes the message.
inline void validate_sentence(const Sentence& s, const TypeInventory* types,
                              const std::string& where) {
  if (s.tokens.empty()) throw DataError(where + ": sentence has no tokens");
  std::set<EntitySpan> seen;
  for (const auto& e : s.entities) {
    if (e.start < 0 || e.end < e.start || e.end >= s.length())
      throw DataError(where + ": entity (" + std::to_string(e.start) + "," +
                      std::to_string(e.end) + ") out of range for " +
                      std::to_string(s.length()) + " tokens (end is inclusive)");
    if (types && !types->contains(e.type))
      throw DataError(where + ": unknown entity type '" + e.type + "'");
    if (!seen.insert(e).second)
      throw DataError(where + ": duplicate entity (" + std::to_string(e.start) + "," +
                      std::to_string(e.end) + "," + e.type + ")");
  }
}

inline Sentence sentence_from_json(const Json& j, const TypeInventory* types,
                                   const std::string& where,
                                   std::vector<std::string>* warnings = nullptr) {
  auto fail = [&](const std::string& msg) -> void { throw DataError(where + ": " + msg); };
  if (!j.is_object()) fail("record is not a JSON object");
  for (const char* key : {"tokens", "entities", "id"})
    if (!j.contains(key)) fail(std::string("missing field '") + key + "'");
  if (warnings)
    for (auto it = j.begin(); it != j.end(); ++it)
      if (it.key() != "tokens" && it.key() != "entities" && it.key() != "id")
        warnings->push_back(where + ": ignoring unknown field '" + it.key() + "'");

  Sentence s;
  if (!j["id"].is_string()) fail("'id' must be a string");
  s.id = j["id"].get<std::string>();
  if (!j["tokens"].is_array()) fail("'tokens' must be an array");
  for (const auto& t : j["tokens"]) {
    if (!t.is_string()) fail("tokens must be strings");
    s.tokens.push_back(t.get<std::string>());
  }
  if (!j["entities"].is_array()) fail("'entities' must be an array");
  for (const auto& e : j["entities"]) {
    if (!e.is_object() || !e.contains("start") || !e.contains("end") || !e.contains("type"))
      fail("entity needs start, end and type");
    if (!e["start"].is_number_integer() || !e["end"].is_number_integer())
      fail("entity start/end must be integers");
    if (!e["type"].is_string()) fail("entity type must be a string");
    s.entities.push_back({e["start"].get<int>(), e["end"].get<int>(), e["type"].get<std::string>()});
  }
  validate_sentence(s, types, where);
  return s;
}

/// Reads a corpus. Every error names the 1-based line. Blank lines are skipped.
/// With `types`, entity types outside the inventory are rejected.
inline std::vector<Sentence> load_jsonl(const std::string& path,
                                        const TypeInventory* types = nullptr,
                                        std::vector<std::string>* warnings = nullptr) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus " + path);
  std::vector<Sentence> out;
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path + ":" + std::to_string(lineno);
    Json j;
    try {
      j = Json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(where + ": malformed JSON (" + e.what() + ")");
    }
    out.push_back(sentence_from_json(j, types, where, warnings));
  }
  return out;
}

inline void save_jsonl(const std::string& path, const std::vector<Sentence>& sentences) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write corpus " + path);
  for (const auto& s : sentences) out << sentence_to_line(s) << '\n';
}

/// Sorted set of entity types in a corpus.
inline TypeInventory infer_types(const std::vector<Sentence>& sentences) {
  std::set<std::string> names;
  for (const auto& s : sentences)
    for (const auto& e : s.entities) names.insert(e.type);
  if (names.empty()) throw DataError("corpus has no entities to infer a type inventory from");
  return TypeInventory(std::vector<std::string>(names.begin(), names.end()));
}

// ---------------------------------------------------------------------------
// Train / validation / test partition
// ---------------------------------------------------------------------------

struct CorpusSplit {
  std::vector<Sentence> train;
  std::vector<Sentence> validation;
  std::vector<Sentence> test;
};

struct SplitRatios {
  double train = 0.8;
  double validation = 0.1;
  double test = 0.1;
};

/// Seeded shuffle of source ids, then a contiguous partition. Sentences that
/// share an id always land in the same part.
inline CorpusSplit split_corpus(const std::vector<Sentence>& sentences, SplitRatios ratios,
                                std::uint64_t seed) {
  if (!(ratios.train > 0 && ratios.validation > 0 && ratios.test > 0))
    throw ConfigError("split ratios must all be positive");
  if (std::abs(ratios.train + ratios.validation + ratios.test - 1.0) > 1e-9)
    throw ConfigError("split ratios must sum to 1");

  std::vector<std::string> ids;
  std::map<std::string, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    auto [it, fresh] = members.try_emplace(sentences[i].id);
    if (fresh) ids.push_back(sentences[i].id);
    it->second.push_back(i);
  }
  const std::size_t n = ids.size();
  if (n < 3)
    throw DataError("need at least 3 distinct source ids to split, got " + std::to_string(n));

  RngStream rng = RngStream::named(seed, "split");
  rng.shuffle(ids);

  auto count = [&](double r) {
    return static_cast<std::size_t>(std::llround(static_cast<double>(n) * r));
  };
  std::size_t n_val = std::max<std::size_t>(1, count(ratios.validation));
  std::size_t n_test = std::max<std::size_t>(1, count(ratios.test));
  if (n_val + n_test >= n) n_val = n_test = 1;
  const std::size_t n_train = n - n_val - n_test;

  CorpusSplit split;
  for (std::size_t k = 0; k < n; ++k) {
    auto& dst = k < n_train ? split.train : (k < n_train + n_val ? split.validation : split.test);
    for (std::size_t i : members[ids[k]]) dst.push_back(sentences[i]);
  }
  return split;
}

// ---------------------------------------------------------------------------
// Sliding windows
// ---------------------------------------------------------------------------

struct Window {
  int offset = 0;
  Sentence sentence;  // tokens and gold mentions in window-local indices
};

struct WindowedSentence {
  std::vector<Window> windows;
  std::size_t dropped_too_wide = 0;  // gold mentions wider than max_width
};

/// Windows of at most max_len tokens at stride max_len - max_width, so every
/// span of width <= max_width lies inside at least one window. Each window
/// receives every gold mention it fully contains.
inline WindowedSentence sliding_window(const Sentence& s, int max_len, int max_width) {
  if (!(max_len > max_width && max_width >= 1))
    throw ContractError("sliding_window: need max_len > max_width >= 1");
  const int n = s.length();
  const int stride = max_len - max_width;
  WindowedSentence out;
  for (const auto& e : s.entities)
    if (e.width() > max_width) ++out.dropped_too_wide;

  for (int offset = 0;; offset += stride) {
    const int len = std::min(max_len, n - offset);
    Window w;
    w.offset = offset;
    w.sentence.id = n <= max_len ? s.id : s.id + "#w" + std::to_string(out.windows.size());
    w.sentence.tokens.assign(s.tokens.begin() + offset, s.tokens.begin() + offset + len);
    for (const auto& e : s.entities) {
      if (e.width() > max_width) continue;
      if (e.start >= offset && e.end < offset + len)
        w.sentence.entities.push_back({e.start - offset, e.end - offset, e.type});
    }
    out.windows.push_back(std::move(w));
    if (offset + len >= n) break;
  }
  return out;
}

}  // namespace structspan
