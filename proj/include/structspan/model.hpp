#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "structspan/autodiff.hpp"
#include "structspan/classifier.hpp"
#include "structspan/config.hpp"
#include "structspan/encoder.hpp"
#include "structspan/params.hpp"
#include "structspan/rng.hpp"
#include "structspan/sentence.hpp"
#include "structspan/spans.hpp"
#include "structspan/struct_attention.hpp"

namespace structspan {

/// Everything needed to run the network: hyperparameters, alphabet, types
/// and the learnable arrays.
struct Model {
  RunConfig config;
  Vocabulary vocab;
  TypeInventory types;
  ParamStore params;

  EncoderDims encoder_dims() const {
    return {vocab.size(), static_cast<std::size_t>(config.hidden_dim),
            static_cast<std::size_t>(config.ff_dim), static_cast<std::size_t>(config.encoder_layers),
            static_cast<std::size_t>(config.max_len), config.encoder_rescale};
  }
};

/// Declared shape of every parameter for a configuration. Checkpoint loading
/// validates against this.
inline std::vector<std::pair<std::string, Shape>> expected_shapes(const RunConfig& c,
                                                                  std::size_t vocab,
                                                                  std::size_t classes) {
  const auto d = static_cast<std::size_t>(c.hidden_dim);
  const auto f = static_cast<std::size_t>(c.ff_dim);
  const auto dk = static_cast<std::size_t>(c.key_dim);
  std::vector<std::pair<std::string, Shape>> out;
  out.emplace_back(encoder_names::embedding(), Shape{vocab, d});
  for (std::size_t l = 0; l < static_cast<std::size_t>(c.encoder_layers); ++l) {
    out.emplace_back(encoder_names::layer(l, "wq"), Shape{d, d});
    out.emplace_back(encoder_names::layer(l, "wk"), Shape{d, d});
    out.emplace_back(encoder_names::layer(l, "wv"), Shape{d, d});
    out.emplace_back(encoder_names::layer(l, "wo"), Shape{d, d});
    out.emplace_back(encoder_names::layer(l, "ff1"), Shape{d, f});
    out.emplace_back(encoder_names::layer(l, "ff1_b"), Shape{f});
    out.emplace_back(encoder_names::layer(l, "ff2"), Shape{f, d});
    out.emplace_back(encoder_names::layer(l, "ff2_b"), Shape{d});
  }
  out.emplace_back(span_names::ws, Shape{3 * d, d});
  out.emplace_back(span_names::bs, Shape{d});
  out.emplace_back(attn_names::wq, Shape{d, dk});
  out.emplace_back(attn_names::wk, Shape{d, dk});
  out.emplace_back(cls_names::wc, Shape{classes, d});
  out.emplace_back(cls_names::bc, Shape{classes});
  return out;
}

/// Fresh seeded parameters. Initialization draws from the "init" stream only.
inline Model init_model(const RunConfig& config, Vocabulary vocab, TypeInventory types) {
  config.validate();
  Model m{config, std::move(vocab), std::move(types), {}};
  RngStream rng = RngStream::named(config.seed, "init");
  const auto d = static_cast<std::size_t>(config.hidden_dim);
  init_encoder(m.params, m.encoder_dims(), rng);
  init_span_layer(m.params, d, rng);
  init_struct_attention(m.params, d, static_cast<std::size_t>(config.key_dim), rng);
  init_classifier(m.params, d, m.types.num_classes(), rng);
  return m;
}

/// Intermediate nodes of one forward pass over a token sequence.
struct ForwardPass {
  std::vector<SpanIndex> candidates;
  Var hidden;    // n×d
  Var s_raw;     // M×d
  Var alpha;     // M×M
  Var s_struct;  // M×d
  Var logits;    // M×(K+1)
};

inline ForwardPass forward(Tape& tape, const std::vector<int>& ids, const RunConfig& config,
                           const EncoderDims& dims, const ParamStore& p) {
  ForwardPass f;
  f.candidates = enumerate_candidates(static_cast<int>(ids.size()), config.max_span_width);
  f.hidden = encode(tape, ids, p, dims);
  f.s_raw = span_repr(tape, f.hidden, f.candidates, p);
  f.alpha = attention_weights(f.s_raw, p.leaf(tape, attn_names::wq), p.leaf(tape, attn_names::wk));
  f.s_struct = aggregate(f.alpha, f.s_raw);
  if (config.struct_residual) f.s_struct = ops::add(f.s_raw, f.s_struct);
  f.logits = class_logits(f.s_struct, p.leaf(tape, cls_names::wc), p.leaf(tape, cls_names::bc));
  return f;
}

inline ForwardPass forward(Tape& tape, const std::vector<int>& ids, const Model& m) {
  return forward(tape, ids, m.config, m.encoder_dims(), m.params);
}

struct LossBreakdown {
  double l_cls = 0.0;
  double l_struct = 0.0;
  double total = 0.0;
  double lambda = 0.0;
  std::size_t clamped = 0;
};

struct LossGraph {
  Var total;
  LossBreakdown parts;
};

/// L = L_cls + λ·L_struct on one token sequence with its gold alignment.
inline LossGraph total_loss(Tape& tape, const std::vector<int>& ids, const GoldAlignment& gold,
                            const RunConfig& config, const EncoderDims& dims,
                            const ParamStore& p, double lambda) {
  if (!(lambda >= 0.0)) throw ContractError("total_loss: lambda must be >= 0");
  ForwardPass f = forward(tape, ids, config, dims, p);
  if (gold.labels.size() != f.candidates.size())
    throw DimensionError("total_loss: alignment has " + std::to_string(gold.labels.size()) +
                         " labels for " + std::to_string(f.candidates.size()) + " candidates");
  LossGraph g;
  Var l_cls = ops::softmax_cross_entropy(f.logits, gold.labels, &g.parts.clamped);
  Var l_struct = struct_loss(tape, f.s_struct, gold);
  g.total = ops::add(l_cls, ops::scale(l_struct, lambda));
  g.parts.l_cls = evaluate(l_cls).item();
  g.parts.l_struct = evaluate(l_struct).item();
  g.parts.total = evaluate(g.total).item();
  g.parts.lambda = lambda;
  return g;
}

inline LossGraph total_loss(Tape& tape, const std::vector<int>& ids, const GoldAlignment& gold,
                            const Model& m, double lambda) {
  return total_loss(tape, ids, gold, m.config, m.encoder_dims(), m.params, lambda);
}

/// Class probabilities for every candidate of a token sequence.
inline Tensor candidate_probabilities(const std::vector<int>& ids, const Model& m,
                                      std::vector<SpanIndex>* candidates = nullptr) {
  Tape tape;
  ForwardPass f = forward(tape, ids, m);
  if (candidates) *candidates = f.candidates;
  return evaluate(ops::softmax_rows(f.logits));
}

}  // namespace structspan
