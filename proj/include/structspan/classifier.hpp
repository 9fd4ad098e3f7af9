#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "structspan/autodiff.hpp"
#include "structspan/params.hpp"
#include "structspan/rng.hpp"
#include "structspan/sentence.hpp"
#include "structspan/spans.hpp"

namespace structspan {

namespace cls_names {
inline const std::string wc = "cls.W_c";
inline const std::string bc = "cls.b_c";
}  // namespace cls_names

inline constexpr double kNoneBiasInit = 3.0;

/// W_c uniform in ±1/√d, b_c zero except the NONE entry.
inline void init_classifier(ParamStore& p, std::size_t d, std::size_t classes, RngStream& rng) {
  const double a = 1.0 / std::sqrt(static_cast<double>(d));
  Tensor w({classes, d});
  for (double& v : w.raw()) v = rng.uniform(-a, a);
  p.add(cls_names::wc, std::move(w));
  Tensor b({classes});
  b[0] = kNoneBiasInit;
  p.add(cls_names::bc, std::move(b));
}

/// Pre-softmax class scores s̃ · W_cᵀ + b_c, M×(K+1).
inline Var class_logits(Var s_struct, Var wc, Var bc) {
  return ops::add(ops::matmul(s_struct, wc, ops::Trans::Yes), bc);
}

/// Row r is P(class | s̃_r) over NONE and the K entity types.
inline Var classify(Var s_struct, Var wc, Var bc) {
  return ops::softmax_rows(class_logits(s_struct, wc, bc));
}

struct GoldAlignment {
  std::vector<std::size_t> labels;  // per candidate, 0 = NONE
  /// (outer, inner) candidate rows whose gold spans nest strictly.
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::size_t dropped_too_wide = 0;
  std::size_t dropped_same_span = 0;

  bool operator==(const GoldAlignment&) const = default;
};

/// Labels candidates from gold mentions. Mentions wider than the candidate
/// window are dropped; when two mentions share (start, end) the first wins.
inline GoldAlignment align_gold(const std::vector<SpanIndex>& candidates,
                                const std::vector<EntitySpan>& gold, int sentence_length,
                                const TypeInventory& types) {
  GoldAlignment out;
  out.labels.assign(candidates.size(), TypeInventory::kNone);
  std::vector<std::size_t> gold_rows;
  for (const auto& e : gold) {
    if (e.start < 0 || e.end < e.start || e.end >= sentence_length)
      throw DataError("gold span (" + std::to_string(e.start) + "," + std::to_string(e.end) +
                      ") outside sentence of " + std::to_string(sentence_length) + " tokens");
    const std::size_t cls = types.class_of(e.type);
    const long row = candidate_position(candidates, {e.start, e.end});
    if (row < 0) {
      ++out.dropped_too_wide;
      continue;
    }
    auto r = static_cast<std::size_t>(row);
    if (out.labels[r] != TypeInventory::kNone) {
      ++out.dropped_same_span;
      continue;
    }
    out.labels[r] = cls;
    gold_rows.push_back(r);
  }
  std::sort(gold_rows.begin(), gold_rows.end());
  for (std::size_t a = 0; a < gold_rows.size(); ++a) {
    for (std::size_t b = a + 1; b < gold_rows.size(); ++b) {
      const SpanIndex& x = candidates[gold_rows[a]];
      const SpanIndex& y = candidates[gold_rows[b]];
      if (strictly_contains(x.start, x.end, y.start, y.end))
        out.pairs.emplace_back(gold_rows[a], gold_rows[b]);
      else if (strictly_contains(y.start, y.end, x.start, x.end))
        out.pairs.emplace_back(gold_rows[b], gold_rows[a]);
    }
  }
  return out;
}

/// Mean over candidates of −log P(gold class), probabilities floored at
/// 1e-12. `clamped` counts floored rows.
inline double cls_loss(const Tensor& probs, const GoldAlignment& gold,
                       std::size_t* clamped = nullptr) {
  if (probs.rows() != gold.labels.size())
    throw DimensionError("cls_loss: " + std::to_string(gold.labels.size()) +
                         " labels for probabilities of shape " + shape_str(probs.shape()));
  double total = 0.0;
  for (std::size_t r = 0; r < probs.rows(); ++r) {
    double p = probs(r, gold.labels[r]);
    if (p < ops::kProbFloor) {
      p = ops::kProbFloor;
      if (clamped) ++*clamped;
    }
    total -= std::log(p);
  }
  return total / static_cast<double>(probs.rows());
}

/// Mean squared distance between the structure-aware rows of each nested
/// gold pair; 0 when there are no pairs.
inline double struct_loss(const Tensor& s_struct, const GoldAlignment& gold) {
  if (gold.pairs.empty()) return 0.0;
  double total = 0.0;
  for (auto [a, b] : gold.pairs) {
    double d2 = 0.0;
    for (std::size_t c = 0; c < s_struct.cols(); ++c) {
      const double diff = s_struct(a, c) - s_struct(b, c);
      d2 += diff * diff;
    }
    total += d2;
  }
  return total / static_cast<double>(gold.pairs.size());
}

/// Graph form of struct_loss. Returns a constant zero when there are no pairs.
inline Var struct_loss(Tape& tape, Var s_struct, const GoldAlignment& gold) {
  if (gold.pairs.empty()) return tape.constant(Tensor::scalar(0.0));
  std::vector<std::size_t> outer, inner;
  for (auto [a, b] : gold.pairs) {
    outer.push_back(a);
    inner.push_back(b);
  }
  Var d2 = ops::squared_distance(ops::gather_rows(s_struct, std::move(outer)),
                                 ops::gather_rows(s_struct, std::move(inner)));
  return ops::scale(d2, 1.0 / static_cast<double>(gold.pairs.size()));
}

}  // namespace structspan
