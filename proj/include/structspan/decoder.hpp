#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "structspan/errors.hpp"
#include "structspan/sentence.hpp"
#include "structspan/spans.hpp"
#include "structspan/tensor.hpp"

namespace structspan {

struct PredictedEntity {
  SpanIndex span;
  std::size_t type = 0;  // class index, never NONE
  double confidence = 0.0;

  bool operator==(const PredictedEntity&) const = default;
};

/// Highest-probability class of a row; ties go to the lowest class index.
inline std::size_t argmax_row(std::span<const double> row) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < row.size(); ++c)
    if (row[c] > row[best]) best = c;
  return best;
}

/// Greedy decoding in confidence order. A candidate is accepted when its
/// argmax class is an entity type with probability >= tau and no accepted
/// entity already occupies the same (start, end). Nesting and crossing
/// overlaps are both legal, so duplicates are the only conflict.
inline std::vector<PredictedEntity> select_entities(const Tensor& probs,
                                                    const std::vector<SpanIndex>& candidates,
                                                    double tau) {
  if (!(tau > 0.0 && tau <= 1.0)) throw ContractError("select_entities: tau must be in (0, 1]");
  if (probs.rows() != candidates.size())
    throw DimensionError("select_entities: " + std::to_string(candidates.size()) +
                         " candidates for probabilities of shape " + shape_str(probs.shape()));
  std::vector<PredictedEntity> proposals;
  for (std::size_t r = 0; r < candidates.size(); ++r) {
    const std::size_t cls = argmax_row(probs.row(r));
    if (cls == 0 || probs(r, cls) < tau) continue;
    proposals.push_back({candidates[r], cls, probs(r, cls)});
  }
  std::sort(proposals.begin(), proposals.end(), [](const auto& a, const auto& b) {
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    return a.span < b.span;
  });
  std::vector<PredictedEntity> accepted;
  std::vector<SpanIndex> occupied;
  for (const auto& p : proposals) {
    if (std::find(occupied.begin(), occupied.end(), p.span) != occupied.end()) continue;
    occupied.push_back(p.span);
    accepted.push_back(p);
  }
  return accepted;
}

/// Predictions of one window in window-local token indices.
struct WindowPrediction {
  int offset = 0;
  int length = 0;
  std::vector<PredictedEntity> entities;
};

/// Maps window-local predictions to sentence indices. A span predicted by
/// several windows keeps its most confident prediction, earlier window on
/// ties. Output order matches select_entities.
inline std::vector<PredictedEntity> merge_windows(const std::vector<WindowPrediction>& windows,
                                                  int sentence_length) {
  std::map<SpanIndex, PredictedEntity> best;
  for (const auto& w : windows) {
    if (w.offset < 0 || w.length < 1 || w.offset + w.length > sentence_length)
      throw ContractError("merge_windows: window at offset " + std::to_string(w.offset) +
                          " of length " + std::to_string(w.length) +
                          " does not fit a sentence of " + std::to_string(sentence_length));
    for (const auto& e : w.entities) {
      if (e.span.start < 0 || e.span.end >= w.length || e.span.end < e.span.start)
        throw ContractError("merge_windows: local span outside its window");
      PredictedEntity g = e;
      g.span = {e.span.start + w.offset, e.span.end + w.offset};
      auto [it, inserted] = best.emplace(g.span, g);
      if (!inserted && g.confidence > it->second.confidence) it->second = g;
    }
  }
  std::vector<PredictedEntity> out;
  out.reserve(best.size());
  for (auto& [_, e] : best) out.push_back(e);
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    return a.span < b.span;
  });
  return out;
}

struct ForestNode {
  PredictedEntity entity;
  std::vector<ForestNode> children;
};

struct ContainmentForest {
  std::vector<ForestNode> roots;

  /// Pre-order listing of every node.
  std::vector<PredictedEntity> flatten() const {
    std::vector<PredictedEntity> out;
    auto walk = [&](auto&& self, const ForestNode& n) -> void {
      out.push_back(n.entity);
      for (const auto& c : n.children) self(self, c);
    };
    for (const auto& r : roots) walk(walk, r);
    return out;
  }
};

/// Parent chosen for each entity by build_forest: the narrowest strict
/// container, earliest start among equally narrow ones; -1 for roots.
/// Indices refer to the input order.
inline std::vector<long> forest_parents(const std::vector<PredictedEntity>& entities) {
  std::vector<std::size_t> order(entities.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  auto span_of = [&](std::size_t i) { return entities[i].span; };
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const SpanIndex x = span_of(a), y = span_of(b);
    if (x.width() != y.width()) return x.width() > y.width();
    return x.start < y.start;
  });
  for (std::size_t k = 1; k < order.size(); ++k)
    if (span_of(order[k]) == span_of(order[k - 1]))
      throw ContractError("build_forest: duplicate span (" + std::to_string(span_of(order[k]).start) +
                          "," + std::to_string(span_of(order[k]).end) + ")");

  std::vector<long> parent(entities.size(), -1);
  for (std::size_t k = 0; k < order.size(); ++k) {
    const SpanIndex s = span_of(order[k]);
    long best = -1;
    for (std::size_t q = 0; q < k; ++q) {
      const SpanIndex c = span_of(order[q]);
      if (!strictly_contains(c.start, c.end, s.start, s.end)) continue;
      // placed in (width desc, start asc) order, so the last hit is narrowest
      // and the first hit among equal widths has the earliest start
      if (best < 0 || c.width() < span_of(static_cast<std::size_t>(best)).width())
        best = static_cast<long>(order[q]);
    }
    parent[order[k]] = best;
  }
  return parent;
}

/// Arranges entities so each node hangs under its narrowest strict container.
/// Crossing entities never become parent and child. Siblings are ordered by
/// (start, end).
inline ContainmentForest build_forest(const std::vector<PredictedEntity>& entities) {
  const std::vector<long> parent = forest_parents(entities);
  std::vector<std::vector<std::size_t>> kids(entities.size());
  std::vector<std::size_t> roots;
  for (std::size_t i = 0; i < entities.size(); ++i) {
    if (parent[i] < 0) roots.push_back(i);
    else kids[static_cast<std::size_t>(parent[i])].push_back(i);
  }
  auto by_span = [&](std::size_t a, std::size_t b) { return entities[a].span < entities[b].span; };
  auto make = [&](auto&& self, std::size_t i) -> ForestNode {
    ForestNode n{entities[i], {}};
    std::sort(kids[i].begin(), kids[i].end(), by_span);
    for (std::size_t c : kids[i]) n.children.push_back(self(self, c));
    return n;
  };
  std::sort(roots.begin(), roots.end(), by_span);
  ContainmentForest forest;
  for (std::size_t r : roots) forest.roots.push_back(make(make, r));
  return forest;
}

}  // namespace structspan
