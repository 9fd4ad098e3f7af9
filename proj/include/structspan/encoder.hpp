#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "structspan/autodiff.hpp"
#include "structspan/params.hpp"
#include "structspan/rng.hpp"

namespace structspan {

struct EncoderDims {
  std::size_t vocab = 2;
  std::size_t hidden = 64;
  std::size_t ff = 128;
  std::size_t layers = 2;
  std::size_t max_len = 64;
  bool rescale = false;  // scale each residual sum by 1/sqrt(2)
};

namespace encoder_names {
inline std::string embedding() { return "encoder.embedding"; }
inline std::string layer(std::size_t l, const char* what) {
  return "encoder.layer" + std::to_string(l) + "." + what;
}
}  // namespace encoder_names

/// Fixed sinusoidal positions: even column 2k is sin(pos / 10000^(2k/d)),
/// odd column 2k+1 the matching cos.
inline Tensor positional_encoding(std::size_t n, std::size_t d) {
  Tensor pe({n, d});
  for (std::size_t pos = 0; pos < n; ++pos) {
    for (std::size_t c = 0; c < d; ++c) {
      const double k2 = static_cast<double>(c - c % 2);
      const double angle = static_cast<double>(pos) / std::pow(10000.0, k2 / static_cast<double>(d));
      pe(pos, c) = c % 2 == 0 ? std::sin(angle) : std::cos(angle);
    }
  }
  return pe;
}

inline void init_encoder(ParamStore& p, const EncoderDims& dims, RngStream& rng) {
  const std::size_t d = dims.hidden, f = dims.ff;
  auto uniform = [&](Shape shape, double a) {
    Tensor t(std::move(shape));
    for (double& v : t.raw()) v = rng.uniform(-a, a);
    return t;
  };
  const double a_d = 1.0 / std::sqrt(static_cast<double>(d));
  const double a_f = 1.0 / std::sqrt(static_cast<double>(f));
  Tensor emb = uniform({dims.vocab, d}, 1.0);
  for (std::size_t c = 0; c < d; ++c) emb(0, c) = 0.0;  // padding row
  p.add(encoder_names::embedding(), std::move(emb));
  for (std::size_t l = 0; l < dims.layers; ++l) {
    p.add(encoder_names::layer(l, "wq"), uniform({d, d}, a_d));
    p.add(encoder_names::layer(l, "wk"), uniform({d, d}, a_d));
    p.add(encoder_names::layer(l, "wv"), uniform({d, d}, a_d));
    p.add(encoder_names::layer(l, "wo"), uniform({d, d}, a_d));
    p.add(encoder_names::layer(l, "ff1"), uniform({d, f}, a_d));
    p.add(encoder_names::layer(l, "ff1_b"), Tensor({f}));
    p.add(encoder_names::layer(l, "ff2"), uniform({f, d}, a_f));
    p.add(encoder_names::layer(l, "ff2_b"), Tensor({d}));
  }
}

/// Token embeddings plus positions, n×d.
inline Var embed(Tape& tape, const std::vector<int>& ids, const ParamStore& p) {
  if (ids.empty()) throw ContractError("embed: empty token sequence");
  const Tensor& table = p.at(encoder_names::embedding());
  std::vector<std::size_t> rows;
  rows.reserve(ids.size());
  for (int id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= table.rows())
      throw VocabularyError("token id " + std::to_string(id) + " outside vocabulary of size " +
                            std::to_string(table.rows()));
    rows.push_back(static_cast<std::size_t>(id));
  }
  Var tokens = ops::gather_rows(p.leaf(tape, encoder_names::embedding()), std::move(rows));
  return ops::add(tokens, tape.constant(positional_encoding(ids.size(), table.cols())));
}

/// H = Encoder(X): `layers` blocks of single-head scaled dot-product
/// self-attention and a tanh feed-forward, each wrapped in a residual.
inline Var encode(Tape& tape, const std::vector<int>& ids, const ParamStore& p,
                  const EncoderDims& dims) {
  if (ids.empty()) throw ContractError("encode: empty token sequence");
  if (ids.size() > dims.max_len)
    throw ContractError("encode: sequence of " + std::to_string(ids.size()) +
                        " tokens exceeds max_len " + std::to_string(dims.max_len));
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(dims.hidden));
  const double residual_scale = dims.rescale ? 1.0 / std::sqrt(2.0) : 1.0;
  auto residual = [&](Var x, Var f) {
    Var s = ops::add(x, f);
    return dims.rescale ? ops::scale(s, residual_scale) : s;
  };

  Var x = embed(tape, ids, p);
  for (std::size_t l = 0; l < dims.layers; ++l) {
    auto w = [&](const char* what) { return p.leaf(tape, encoder_names::layer(l, what)); };
    Var q = ops::matmul(x, w("wq"));
    Var k = ops::matmul(x, w("wk"));
    Var v = ops::matmul(x, w("wv"));
    Var attn = ops::softmax_rows(ops::scale(ops::matmul(q, k, ops::Trans::Yes), inv_sqrt_d));
    x = residual(x, ops::matmul(ops::matmul(attn, v), w("wo")));

    Var hidden = ops::tanh(ops::add(ops::matmul(x, w("ff1")), w("ff1_b")));
    x = residual(x, ops::add(ops::matmul(hidden, w("ff2")), w("ff2_b")));
  }
  return x;
}

}  // namespace structspan
