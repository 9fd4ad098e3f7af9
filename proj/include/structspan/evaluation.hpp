#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "structspan/classifier.hpp"
#include "structspan/corpus.hpp"
#include "structspan/decoder.hpp"
#include "structspan/model.hpp"

namespace structspan {

struct MatchCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  MatchCounts& operator+=(const MatchCounts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  bool operator==(const MatchCounts&) const = default;
};

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Empty-set conventions: nothing predicted and nothing gold scores P=R=F1=1;
/// an empty prediction set has P=1, an empty gold set R=1, and F1 is 0
/// whenever exactly one side is empty.
inline Prf prf(const MatchCounts& c) {
  const std::size_t pred = c.tp + c.fp, gold = c.tp + c.fn;
  Prf out;
  out.precision = pred == 0 ? 1.0 : static_cast<double>(c.tp) / static_cast<double>(pred);
  out.recall = gold == 0 ? 1.0 : static_cast<double>(c.tp) / static_cast<double>(gold);
  if (pred == 0 && gold == 0) out.f1 = 1.0;
  else if (pred == 0 || gold == 0) out.f1 = 0.0;
  else if (out.precision + out.recall == 0.0) out.f1 = 0.0;
  else out.f1 = 2.0 * out.precision * out.recall / (out.precision + out.recall);
  return out;
}

inline void require_unique(const std::vector<EntitySpan>& v, const char* what) {
  std::set<EntitySpan> seen;
  for (const auto& e : v)
    if (!seen.insert(e).second)
      throw ContractError(std::string(what) + " contains duplicate (" + std::to_string(e.start) +
                          "," + std::to_string(e.end) + "," + e.type + ")");
}

/// Exact (start, end, type) matching.
inline MatchCounts exact_match_prf(const std::vector<EntitySpan>& gold,
                                   const std::vector<EntitySpan>& pred) {
  require_unique(gold, "gold");
  require_unique(pred, "prediction");
  const std::set<EntitySpan> g(gold.begin(), gold.end());
  MatchCounts c;
  for (const auto& p : pred) c.tp += g.count(p);
  c.fp = pred.size() - c.tp;
  c.fn = gold.size() - c.tp;
  return c;
}

inline std::vector<EntitySpan> to_entity_spans(const std::vector<PredictedEntity>& pred,
                                               const TypeInventory& types) {
  std::vector<EntitySpan> out;
  out.reserve(pred.size());
  for (const auto& p : pred) out.push_back({p.span.start, p.span.end, types.name_of(p.type)});
  return out;
}

/// Mentions that strictly contain, or sit strictly inside, another mention
/// of the same set.
inline std::vector<bool> nested_members(const std::vector<EntitySpan>& v) {
  std::vector<bool> in(v.size(), false);
  for (std::size_t a = 0; a < v.size(); ++a)
    for (std::size_t b = 0; b < v.size(); ++b)
      if (a != b && (strictly_contains(v[a].start, v[a].end, v[b].start, v[b].end) ||
                     strictly_contains(v[b].start, v[b].end, v[a].start, v[a].end)))
        in[a] = true;
  return in;
}

/// Mentions that cross another mention of the same set.
inline std::vector<bool> overlap_members(const std::vector<EntitySpan>& v) {
  std::vector<bool> in(v.size(), false);
  for (std::size_t a = 0; a < v.size(); ++a)
    for (std::size_t b = 0; b < v.size(); ++b)
      if (a != b && crosses(v[a].start, v[a].end, v[b].start, v[b].end)) in[a] = true;
  return in;
}

/// Counts for one structural subset. Recall runs over gold subset members
/// (found by any prediction); precision over predictions that are subset
/// members within the prediction set.
struct SubsetCounts {
  std::size_t gold_total = 0;
  std::size_t gold_found = 0;
  std::size_t pred_total = 0;
  std::size_t pred_correct = 0;

  SubsetCounts& operator+=(const SubsetCounts& o) {
    gold_total += o.gold_total;
    gold_found += o.gold_found;
    pred_total += o.pred_total;
    pred_correct += o.pred_correct;
    return *this;
  }
  bool operator==(const SubsetCounts&) const = default;

  /// Absent when the subset is empty on that side.
  std::optional<double> recall() const {
    if (gold_total == 0) return std::nullopt;
    return static_cast<double>(gold_found) / static_cast<double>(gold_total);
  }
  std::optional<double> precision() const {
    if (pred_total == 0) return std::nullopt;
    return static_cast<double>(pred_correct) / static_cast<double>(pred_total);
  }
  std::optional<double> f1() const {
    auto p = precision(), r = recall();
    if (!r) return std::nullopt;
    if (!p) return 0.0;
    return *p + *r == 0.0 ? 0.0 : 2.0 * *p * *r / (*p + *r);
  }
};

struct SubsetMetrics {
  SubsetCounts nested;
  SubsetCounts overlap;
};

inline SubsetCounts subset_counts(const std::vector<EntitySpan>& gold,
                                  const std::vector<EntitySpan>& pred,
                                  std::vector<bool> (*membership)(const std::vector<EntitySpan>&)) {
  const std::set<EntitySpan> g(gold.begin(), gold.end()), p(pred.begin(), pred.end());
  const auto gm = membership(gold), pm = membership(pred);
  SubsetCounts c;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (!gm[i]) continue;
    ++c.gold_total;
    c.gold_found += p.count(gold[i]);
  }
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!pm[i]) continue;
    ++c.pred_total;
    c.pred_correct += g.count(pred[i]);
  }
  return c;
}

inline SubsetMetrics subset_metrics(const std::vector<EntitySpan>& gold,
                                    const std::vector<EntitySpan>& pred) {
  require_unique(gold, "gold");
  require_unique(pred, "prediction");
  return {subset_counts(gold, pred, nested_members), subset_counts(gold, pred, overlap_members)};
}

struct AccuracyCounts {
  std::size_t correct = 0;
  std::size_t total = 0;
};

/// Candidates (NONE-gold ones included) whose argmax class is the gold class.
inline AccuracyCounts candidate_accuracy_counts(const Tensor& probs, const GoldAlignment& gold) {
  if (probs.rows() != gold.labels.size())
    throw DimensionError("candidate_accuracy: " + std::to_string(gold.labels.size()) +
                         " labels for probabilities of shape " + shape_str(probs.shape()));
  AccuracyCounts a;
  a.total = probs.rows();
  for (std::size_t r = 0; r < probs.rows(); ++r) a.correct += argmax_row(probs.row(r)) == gold.labels[r];
  return a;
}

inline double candidate_accuracy(const Tensor& probs, const GoldAlignment& gold) {
  const auto a = candidate_accuracy_counts(probs, gold);
  return a.total == 0 ? 1.0 : static_cast<double>(a.correct) / static_cast<double>(a.total);
}

struct EvalReport {
  MatchCounts counts;
  AccuracyCounts accuracy;
  std::map<std::string, MatchCounts> per_type;
  SubsetMetrics subsets;
  std::size_t sentences = 0;

  Prf micro() const { return prf(counts); }
  double candidate_accuracy() const {
    return accuracy.total == 0 ? 1.0
                               : static_cast<double>(accuracy.correct) /
                                     static_cast<double>(accuracy.total);
  }

  void add(const std::vector<EntitySpan>& gold, const std::vector<EntitySpan>& pred) {
    counts += exact_match_prf(gold, pred);
    const auto s = subset_metrics(gold, pred);
    subsets.nested += s.nested;
    subsets.overlap += s.overlap;
    std::set<std::string> types;
    for (const auto& e : gold) types.insert(e.type);
    for (const auto& e : pred) types.insert(e.type);
    for (const auto& t : types) {
      std::vector<EntitySpan> g, p;
      for (const auto& e : gold)
        if (e.type == t) g.push_back(e);
      for (const auto& e : pred)
        if (e.type == t) p.push_back(e);
      per_type[t] += exact_match_prf(g, p);
    }
    ++sentences;
  }

  Json to_json() const {
    auto opt = [](std::optional<double> v) { return v ? Json(*v) : Json("n/a"); };
    auto prf_json = [](const MatchCounts& c) {
      const Prf m = prf(c);
      return Json{{"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}, {"precision", m.precision},
                  {"recall", m.recall}, {"f1", m.f1}};
    };
    auto subset_json = [&](const SubsetCounts& s) {
      return Json{{"gold_total", s.gold_total}, {"gold_found", s.gold_found},
                  {"pred_total", s.pred_total}, {"pred_correct", s.pred_correct},
                  {"precision", opt(s.precision())}, {"recall", opt(s.recall())},
                  {"f1", opt(s.f1())}};
    };
    Json types = Json::object();
    for (const auto& [t, c] : per_type) types[t] = prf_json(c);
    Json j = prf_json(counts);
    j["sentences"] = sentences;
    j["candidate_accuracy"] = candidate_accuracy();
    j["candidate_accuracy_note"] =
        "fraction of enumerated candidate spans (NONE included) whose argmax class is the gold "
        "class; a stand-in definition, not a mention-level accuracy";
    j["per_type"] = std::move(types);
    j["nested"] = subset_json(subsets.nested);
    j["overlap"] = subset_json(subsets.overlap);
    return j;
  }
};

/// Decoded entities of one sentence, windowed when longer than max_len.
struct SentencePrediction {
  std::vector<PredictedEntity> entities;
  ContainmentForest forest;
};

/// Runs the model over every window, decodes each, and merges. When `gold`
/// is given the candidate-level accuracy counts are accumulated into it.
inline SentencePrediction predict_sentence(const Model& m, const Sentence& s,
                                           AccuracyCounts* accuracy = nullptr) {
  const RunConfig& c = m.config;
  const WindowedSentence ws = sliding_window(s, c.max_len, c.max_span_width);
  std::vector<WindowPrediction> per_window;
  for (const auto& w : ws.windows) {
    std::vector<SpanIndex> candidates;
    const Tensor probs = candidate_probabilities(m.vocab.ids(w.sentence.tokens), m, &candidates);
    per_window.push_back({w.offset, w.sentence.length(),
                          select_entities(probs, candidates, c.threshold)});
    if (accuracy) {
      const auto gold = align_gold(candidates, w.sentence.entities, w.sentence.length(), m.types);
      const auto a = candidate_accuracy_counts(probs, gold);
      accuracy->correct += a.correct;
      accuracy->total += a.total;
    }
  }
  SentencePrediction out;
  out.entities = merge_windows(per_window, s.length());
  out.forest = build_forest(out.entities);
  return out;
}

inline EvalReport evaluate_corpus(const Model& m, const std::vector<Sentence>& sentences) {
  EvalReport report;
  for (const auto& s : sentences) {
    const auto pred = predict_sentence(m, s, &report.accuracy);
    report.add(s.entities, to_entity_spans(pred.entities, m.types));
  }
  return report;
}

// Prediction output: one JSON object per sentence.
inline Json entity_json(const PredictedEntity& e, const TypeInventory& types) {
  return Json{{"start", e.span.start}, {"end", e.span.end}, {"type", types.name_of(e.type)},
              {"confidence", e.confidence}};
}

inline Json forest_json(const std::vector<ForestNode>& nodes, const TypeInventory& types) {
  Json arr = Json::array();
  for (const auto& n : nodes) {
    Json j = entity_json(n.entity, types);
    j["children"] = forest_json(n.children, types);
    arr.push_back(std::move(j));
  }
  return arr;
}

inline Json prediction_json(const std::string& id, const SentencePrediction& p,
                            const TypeInventory& types) {
  Json ents = Json::array();
  for (const auto& e : p.entities) ents.push_back(entity_json(e, types));
  return Json{{"id", id}, {"entities", std::move(ents)}, {"forest", forest_json(p.forest.roots, types)}};
}

}  // namespace structspan
