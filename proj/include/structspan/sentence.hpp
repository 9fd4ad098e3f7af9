#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "structspan/errors.hpp"

namespace structspan {

/// Entity mention with inclusive token bounds.
struct EntitySpan {
  int start = 0;
  int end = 0;
  std::string type;

  int width() const { return end - start + 1; }
  auto key() const { return std::tie(start, end, type); }
  bool operator==(const EntitySpan& o) const { return key() == o.key(); }
  bool operator<(const EntitySpan& o) const { return key() < o.key(); }
};

struct Sentence {
  std::vector<std::string> tokens;
  std::vector<EntitySpan> entities;
  std::string id;

  int length() const { return static_cast<int>(tokens.size()); }
  bool operator==(const Sentence&) const = default;
};

// Geometry shared by alignment, decoding and evaluation. All bounds inclusive.
inline bool strictly_contains(int outer_start, int outer_end, int inner_start, int inner_end) {
  return outer_start <= inner_start && inner_end <= outer_end &&
         !(outer_start == inner_start && outer_end == inner_end);
}

/// Share at least one token while neither contains the other.
inline bool crosses(int a_start, int a_end, int b_start, int b_end) {
  const bool share = a_start <= b_end && b_start <= a_end;
  const bool nested = (a_start <= b_start && b_end <= a_end) ||
                      (b_start <= a_start && a_end <= b_end);
  return share && !nested;
}

/// Token alphabet. Id 0 is padding, id 1 the unknown token.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnknown = 1;

  Vocabulary() : tokens_{"<pad>", "<unk>"} {
    ids_.emplace(tokens_[0], kPad);
    ids_.emplace(tokens_[1], kUnknown);
  }

  /// Ids assigned in first-appearance order over the sentences.
  static Vocabulary build(const std::vector<Sentence>& sentences) {
    Vocabulary v;
    for (const auto& s : sentences)
      for (const auto& t : s.tokens) v.add(t);
    return v;
  }

  static Vocabulary from_list(const std::vector<std::string>& tokens) {
    if (tokens.size() < 2 || tokens[0] != "<pad>" || tokens[1] != "<unk>")
      throw CheckpointError("vocabulary must start with <pad>, <unk>");
    Vocabulary v;
    for (std::size_t i = 2; i < tokens.size(); ++i) {
      if (v.ids_.count(tokens[i])) throw CheckpointError("duplicate vocabulary entry: " + tokens[i]);
      v.add(tokens[i]);
    }
    return v;
  }

  int add(const std::string& token) {
    auto it = ids_.find(token);
    if (it != ids_.end()) return it->second;
    const int id = static_cast<int>(tokens_.size());
    tokens_.push_back(token);
    ids_.emplace(token, id);
    return id;
  }

  int id(const std::string& token) const {
    auto it = ids_.find(token);
    return it == ids_.end() ? kUnknown : it->second;
  }

  std::vector<int> ids(const std::vector<std::string>& tokens) const {
    std::vector<int> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) out.push_back(id(t));
    return out;
  }

  const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, int> ids_;
};

/// Entity type names. Class 0 is NONE; type k occupies class k (1..K).
class TypeInventory {
 public:
  static constexpr std::size_t kNone = 0;

  TypeInventory() = default;
  explicit TypeInventory(std::vector<std::string> names) : names_(std::move(names)) {
    if (names_.empty()) throw ConfigError("type inventory needs at least one type");
    for (std::size_t i = 0; i < names_.size(); ++i) {
      if (names_[i].empty() || names_[i] == "NONE")
        throw ConfigError("invalid entity type name '" + names_[i] + "'");
      if (!index_.emplace(names_[i], i + 1).second)
        throw ConfigError("duplicate entity type: " + names_[i]);
    }
  }

  std::size_t num_types() const { return names_.size(); }
  std::size_t num_classes() const { return names_.size() + 1; }

  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  std::size_t class_of(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw DataError("unknown entity type: " + name);
    return it->second;
  }

  const std::string& name_of(std::size_t cls) const {
    if (cls == kNone || cls > names_.size())
      throw ContractError("class " + std::to_string(cls) + " has no entity type");
    return names_[cls - 1];
  }

  const std::vector<std::string>& names() const { return names_; }

 private:
  std::vector<std::string> names_;
  std::map<std::string, std::size_t> index_;
};

}  // namespace structspan
