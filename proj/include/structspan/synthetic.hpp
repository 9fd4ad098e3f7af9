#pragma once

#include <array>
#include <cstdio>
#include <string>
#include <vector>

#include "structspan/errors.hpp"
#include "structspan/rng.hpp"
#include "structspan/sentence.hpp"

namespace structspan {

struct SyntheticConfig {
  int sentences = 2000;
  double nesting_rate = 0.4;  // P(sentence has an entity strictly inside another)
  double overlap_rate = 0.2;  // P(sentence has two crossing entities)
};

/// The four types the generator emits, in class order.
inline TypeInventory synthetic_types() { return TypeInventory({"PER", "ORG", "GPE", "LOC"}); }

namespace synth_detail {

// Every type has opening markers, closing markers and a pool of name words,
// all disjoint across types, so token identity separates the types.
struct TypeLexicon {
  const char* type;
  std::vector<std::string> openers;
  std::vector<std::string> closers;
  std::vector<std::string> names;
};

inline std::vector<std::string> pool(const std::string& prefix, int count) {
  std::vector<std::string> out;
  for (int i = 0; i < count; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

inline const std::array<TypeLexicon, 4>& lexicons() {
  static const std::array<TypeLexicon, 4> lex = {{
      {"PER", {"mr", "ms", "dr"}, {"jr", "sr"}, pool("pe", 24)},
      {"ORG", {"ministry", "company", "bank"}, {"inc", "group"}, pool("or", 24)},
      {"GPE", {"republic", "province", "city"}, {"state", "region"}, pool("gp", 24)},
      {"LOC", {"river", "mount", "lake"}, {"valley", "bay"}, pool("lo", 24)},
  }};
  return lex;
}

inline const std::vector<std::string>& fillers() {
  static const std::vector<std::string> f = pool("w", 60);
  return f;
}

inline const std::vector<std::string>& bridges() {
  static const std::vector<std::string> b = {"via", "near", "beside"};
  return b;
}

/// A run of tokens with entity spans relative to its first token.
struct Segment {
  std::vector<std::string> tokens;
  std::vector<EntitySpan> entities;
};

inline Segment flat_entity(RngStream& rng, std::size_t t) {
  const auto& lx = lexicons()[t];
  Segment s;
  s.tokens.push_back(rng.pick(lx.openers));
  const int names = rng.range(1, 2);
  for (int i = 0; i < names; ++i) s.tokens.push_back(rng.pick(lx.names));
  s.entities.push_back({0, static_cast<int>(s.tokens.size()) - 1, lx.type});
  return s;
}

// Outer ORG/LOC wrapping an inner GPE/PER, either "opener name <inner>" or
// "opener <inner> closer".
inline Segment nested_pair(RngStream& rng) {
  static const std::array<std::size_t, 2> outer_types = {1, 3};
  static const std::array<std::size_t, 2> inner_types = {2, 0};
  const std::size_t outer = outer_types[rng.below(2)];
  const std::size_t inner = inner_types[rng.below(2)];
  const auto& lo = lexicons()[outer];
  Segment inner_seg = flat_entity(rng, inner);
  Segment s;
  s.tokens.push_back(rng.pick(lo.openers));
  const bool trailing_closer = rng.bernoulli(0.5);
  if (!trailing_closer) s.tokens.push_back(rng.pick(lo.names));
  const int inner_start = static_cast<int>(s.tokens.size());
  s.tokens.insert(s.tokens.end(), inner_seg.tokens.begin(), inner_seg.tokens.end());
  const int inner_end = static_cast<int>(s.tokens.size()) - 1;
  if (trailing_closer) s.tokens.push_back(rng.pick(lo.closers));
  s.entities.push_back({0, static_cast<int>(s.tokens.size()) - 1, lo.type});
  s.entities.push_back({inner_start, inner_end, lexicons()[inner].type});
  return s;
}

// "openerX nameX bridge nameY closerY": X covers the first three tokens, Y
// the last three; they share the bridge token.
inline Segment crossing_pair(RngStream& rng) {
  const std::size_t x = rng.below(4);
  std::size_t y = rng.below(3);
  if (y >= x) ++y;
  const auto& lx = lexicons()[x];
  const auto& ly = lexicons()[y];
  Segment s;
  s.tokens = {rng.pick(lx.openers), rng.pick(lx.names), rng.pick(bridges()), rng.pick(ly.names),
              rng.pick(ly.closers)};
  s.entities.push_back({0, 2, lx.type});
  s.entities.push_back({2, 4, ly.type});
  return s;
}

inline void append_filler(RngStream& rng, std::vector<std::string>& tokens, int count) {
  for (int i = 0; i < count; ++i) tokens.push_back(rng.pick(fillers()));
}

}  // namespace synth_detail

/// Deterministic corpus with flat, nested and crossing mentions of four
/// types. Each sentence independently gets 0-2 flat mentions, a nested pair
/// with probability `nesting_rate` and a crossing pair with probability
/// `overlap_rate`, in shuffled order separated by filler words.
inline std::vector<Sentence> gen_synthetic(const SyntheticConfig& cfg, std::uint64_t seed) {
  using namespace synth_detail;
  if (cfg.sentences < 0) throw ConfigError("synthetic sentence count must be >= 0");
  if (!(cfg.nesting_rate >= 0 && cfg.nesting_rate <= 1 && cfg.overlap_rate >= 0 &&
        cfg.overlap_rate <= 1))
    throw ConfigError("synthetic rates must be in [0, 1]");
  RngStream rng = RngStream::named(seed, "synthetic");
  std::vector<Sentence> out;
  out.reserve(static_cast<std::size_t>(cfg.sentences));
  for (int k = 0; k < cfg.sentences; ++k) {
    std::vector<Segment> segments;
    const int flats = rng.range(0, 2);
    for (int i = 0; i < flats; ++i) segments.push_back(flat_entity(rng, rng.below(4)));
    if (rng.bernoulli(cfg.nesting_rate)) segments.push_back(nested_pair(rng));
    if (rng.bernoulli(cfg.overlap_rate)) segments.push_back(crossing_pair(rng));
    rng.shuffle(segments);

    Sentence s;
    char id[32];
    std::snprintf(id, sizeof id, "syn-%06d", k);
    s.id = id;
    if (segments.empty()) {
      append_filler(rng, s.tokens, rng.range(3, 8));
    } else {
      append_filler(rng, s.tokens, rng.range(0, 2));
      for (std::size_t i = 0; i < segments.size(); ++i) {
        if (i > 0) append_filler(rng, s.tokens, rng.range(1, 3));
        const int base = static_cast<int>(s.tokens.size());
        s.tokens.insert(s.tokens.end(), segments[i].tokens.begin(), segments[i].tokens.end());
        for (auto e : segments[i].entities) {
          e.start += base;
          e.end += base;
          s.entities.push_back(e);
        }
      }
      append_filler(rng, s.tokens, rng.range(0, 2));
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace structspan
