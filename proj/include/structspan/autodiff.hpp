#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "structspan/errors.hpp"
#include "structspan/tensor.hpp"

namespace structspan {

enum class OpKind {
  Leaf,
  MatMul,
  Add,
  Tanh,
  Mul,
  Concat,
  SoftmaxRows,
  GatherRows,
  Scale,
  Sum,
  Mean,
  SquaredDistance,
  SoftmaxCrossEntropy,
};

class Tape;

/// Handle to a node on a tape. Cheap to copy; only valid while the tape lives.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
};

/// Eager reverse-mode tape. Each op computes its forward value on creation and
/// records a closure that pushes the node's gradient into its inputs. Node ids
/// grow monotonically, so reverse id order is a reverse topological order.
class Tape {
 public:
  struct Node {
    OpKind kind = OpKind::Leaf;
    std::vector<std::size_t> inputs;
    Tensor owned;
    const Tensor* borrowed = nullptr;  // parameter leaves reference caller storage
    std::string param_name;            // non-empty for parameter leaves
    std::function<void(Tape&, std::size_t)> backward;

    const Tensor& value() const { return borrowed ? *borrowed : owned; }
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Trainable leaf. The tensor must outlive the tape and stay unmodified.
  Var param(const std::string& name, const Tensor& value) {
    check_finite(value, "parameter " + name);
    for (const auto& n : nodes_)
      if (n.param_name == name) throw ContractError("parameter registered twice: " + name);
    Node n;
    n.borrowed = &value;
    n.param_name = name;
    return push(std::move(n));
  }

  /// Non-trainable leaf; the tape takes a copy.
  Var constant(Tensor value) {
    check_finite(value, "constant");
    Node n;
    n.owned = std::move(value);
    return push(std::move(n));
  }

  const Tensor& value(Var v) const { return nodes_[v.id].value(); }
  const Node& node(Var v) const { return nodes_[v.id]; }
  std::size_t size() const { return nodes_.size(); }

  /// Gradients of a scalar root with respect to every parameter leaf, keyed
  /// by parameter name. Parameters the root does not depend on get zeros.
  std::map<std::string, Tensor> backward(Var root) {
    if (root.tape != this) throw ContractError("backward: root belongs to another tape");
    if (value(root).size() != 1)
      throw ContractError("backward: root must be scalar, got shape " +
                          shape_str(value(root).shape()));
    grads_.assign(nodes_.size(), Tensor());
    touched_.assign(nodes_.size(), false);
    grads_[root.id] = Tensor::scalar(1.0);
    touched_[root.id] = true;
    for (std::size_t i = root.id + 1; i-- > 0;) {
      if (!touched_[i] || !nodes_[i].backward) continue;
      nodes_[i].backward(*this, i);
    }
    std::map<std::string, Tensor> out;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      if (nodes_[i].param_name.empty()) continue;
      out.emplace(nodes_[i].param_name,
                  touched_[i] ? grads_[i] : Tensor(nodes_[i].value().shape()));
    }
    grads_.clear();
    touched_.clear();
    return out;
  }

  // Used by backward closures.
  const Tensor& grad(std::size_t id) const { return grads_[id]; }

  /// Accumulator for the gradient of node `id`, zero-initialized on first use.
  Tensor& grad_acc(std::size_t id) {
    if (!touched_[id]) {
      grads_[id] = Tensor(nodes_[id].value().shape());
      touched_[id] = true;
    }
    return grads_[id];
  }

  Var record(OpKind kind, std::vector<std::size_t> inputs, Tensor out,
             std::function<void(Tape&, std::size_t)> backward) {
    Node n;
    n.kind = kind;
    n.inputs = std::move(inputs);
    n.owned = std::move(out);
    n.backward = std::move(backward);
    return push(std::move(n));
  }

  const Tensor& value_of(std::size_t id) const { return nodes_[id].value(); }
  const std::vector<std::size_t>& inputs_of(std::size_t id) const { return nodes_[id].inputs; }

 private:
  static void check_finite(const Tensor& t, const std::string& what) {
    if (!t.all_finite()) throw NumericError("non-finite value in " + what);
  }

  Var push(Node n) {
    nodes_.push_back(std::move(n));
    return Var{this, nodes_.size() - 1};
  }

  std::vector<Node> nodes_;
  std::vector<Tensor> grads_;
  std::vector<bool> touched_;
};

inline const Tensor& Var::value() const { return tape->value(*this); }

/// The closed op set. Every function records one node on the inputs' tape.
namespace ops {

namespace detail {

inline Tape& same_tape(Var a, Var b) {
  if (a.tape != b.tape) throw ContractError("operands live on different tapes");
  return *a.tape;
}

inline void require_matrix(const Tensor& t, const char* op) {
  if (t.rank() != 2)
    throw DimensionError(std::string(op) + ": expected a matrix, got shape " +
                         shape_str(t.shape()));
}

}  // namespace detail

enum class Trans { No, Yes };

/// A · B, or A · Bᵀ with Trans::Yes.
inline Var matmul(Var a, Var b, Trans tb = Trans::No) {
  Tape& t = detail::same_tape(a, b);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  detail::require_matrix(A, "matmul");
  detail::require_matrix(B, "matmul");
  const bool bt = tb == Trans::Yes;
  const std::size_t m = A.rows(), k = A.cols();
  const std::size_t kb = bt ? B.cols() : B.rows();
  const std::size_t n = bt ? B.rows() : B.cols();
  if (k != kb)
    throw DimensionError("matmul: shapes " + shape_str(A.shape()) + " and " +
                         shape_str(B.shape()) + (bt ? " (transposed)" : "") + " do not chain");
  Tensor out({m, n});
  if (bt) {
    auto btr = kernel::transpose(B.raw().data(), B.rows(), B.cols());
    kernel::gemm_acc(A.raw().data(), btr.data(), out.raw().data(), m, k, n);
  } else {
    kernel::gemm_acc(A.raw().data(), B.raw().data(), out.raw().data(), m, k, n);
  }
  return t.record(OpKind::MatMul, {a.id, b.id}, std::move(out),
                  [bt, m, k, n](Tape& tp, std::size_t self) {
                    const std::size_t ia = tp.inputs_of(self)[0], ib = tp.inputs_of(self)[1];
                    const Tensor& G = tp.grad(self);
                    const Tensor& A = tp.value_of(ia);
                    const Tensor& B = tp.value_of(ib);
                    // dA = G · Bᵀ (or G · B when B was transposed)
                    {
                      Tensor& dA = tp.grad_acc(ia);
                      if (bt) {
                        kernel::gemm_acc(G.raw().data(), B.raw().data(), dA.raw().data(), m, n, k);
                      } else {
                        auto btr = kernel::transpose(B.raw().data(), k, n);
                        kernel::gemm_acc(G.raw().data(), btr.data(), dA.raw().data(), m, n, k);
                      }
                    }
                    // dB = Aᵀ · G (or Gᵀ · A when B was transposed)
                    {
                      Tensor& dB = tp.grad_acc(ib);
                      if (bt) {
                        auto gt = kernel::transpose(G.raw().data(), m, n);
                        kernel::gemm_acc(gt.data(), A.raw().data(), dB.raw().data(), n, m, k);
                      } else {
                        auto at = kernel::transpose(A.raw().data(), m, k);
                        kernel::gemm_acc(at.data(), G.raw().data(), dB.raw().data(), k, m, n);
                      }
                    }
                  });
}

/// Elementwise sum of equal shapes, or a matrix plus a bias row broadcast
/// over every row (bias of shape {cols} or {1, cols}).
inline Var add(Var a, Var b) {
  Tape& t = detail::same_tape(a, b);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  const bool same = A.shape() == B.shape();
  const bool row_bias = !same && A.rank() == 2 && B.rows() == 1 && B.cols() == A.cols();
  if (!same && !row_bias)
    throw DimensionError("add: shapes " + shape_str(A.shape()) + " and " +
                         shape_str(B.shape()) + " are incompatible");
  Tensor out = A;
  const std::size_t cols = A.cols();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += same ? B[i] : B[i % cols];
  return t.record(OpKind::Add, {a.id, b.id}, std::move(out),
                  [same, cols](Tape& tp, std::size_t self) {
                    const std::size_t ia = tp.inputs_of(self)[0], ib = tp.inputs_of(self)[1];
                    const Tensor& G = tp.grad(self);
                    Tensor& dA = tp.grad_acc(ia);
                    for (std::size_t i = 0; i < G.size(); ++i) dA[i] += G[i];
                    Tensor& dB = tp.grad_acc(ib);
                    for (std::size_t i = 0; i < G.size(); ++i) dB[same ? i : i % cols] += G[i];
                  });
}

inline Var tanh(Var a) {
  Tensor out = a.value();
  for (double& v : out.raw()) v = std::tanh(v);
  return a.tape->record(OpKind::Tanh, {a.id}, std::move(out), [](Tape& tp, std::size_t self) {
    const std::size_t ia = tp.inputs_of(self)[0];
    const Tensor& G = tp.grad(self);
    const Tensor& Y = tp.value_of(self);
    Tensor& dA = tp.grad_acc(ia);
    for (std::size_t i = 0; i < G.size(); ++i) dA[i] += G[i] * (1.0 - Y[i] * Y[i]);
  });
}

/// Elementwise (Hadamard) product.
inline Var mul(Var a, Var b) {
  Tape& t = detail::same_tape(a, b);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (A.shape() != B.shape())
    throw DimensionError("mul: shapes " + shape_str(A.shape()) + " and " +
                         shape_str(B.shape()) + " differ");
  Tensor out = A;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= B[i];
  return t.record(OpKind::Mul, {a.id, b.id}, std::move(out), [](Tape& tp, std::size_t self) {
    const std::size_t ia = tp.inputs_of(self)[0], ib = tp.inputs_of(self)[1];
    const Tensor& G = tp.grad(self);
    const Tensor& A = tp.value_of(ia);
    const Tensor& B = tp.value_of(ib);
    Tensor& dA = tp.grad_acc(ia);
    for (std::size_t i = 0; i < G.size(); ++i) dA[i] += G[i] * B[i];
    Tensor& dB = tp.grad_acc(ib);
    for (std::size_t i = 0; i < G.size(); ++i) dB[i] += G[i] * A[i];
  });
}

/// Concatenation along the feature (column) axis.
inline Var concat(const std::vector<Var>& parts) {
  if (parts.empty()) throw ContractError("concat: no inputs");
  Tape& t = *parts.front().tape;
  const std::size_t rows = parts.front().value().rows();
  std::vector<std::size_t> ids, widths;
  std::size_t total = 0;
  for (Var p : parts) {
    detail::same_tape(parts.front(), p);
    const Tensor& P = p.value();
    detail::require_matrix(P, "concat");
    if (P.rows() != rows)
      throw DimensionError("concat: row counts differ, " + shape_str(parts.front().shape()) +
                           " vs " + shape_str(P.shape()));
    ids.push_back(p.id);
    widths.push_back(P.cols());
    total += P.cols();
  }
  Tensor out({rows, total});
  std::size_t off = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Tensor& P = parts[k].value();
    for (std::size_t r = 0; r < rows; ++r)
      std::copy(P.row(r).begin(), P.row(r).end(), out.row(r).begin() + off);
    off += widths[k];
  }
  return t.record(OpKind::Concat, ids, std::move(out),
                  [widths, rows](Tape& tp, std::size_t self) {
                    const Tensor& G = tp.grad(self);
                    std::size_t off = 0;
                    for (std::size_t k = 0; k < widths.size(); ++k) {
                      Tensor& dP = tp.grad_acc(tp.inputs_of(self)[k]);
                      for (std::size_t r = 0; r < rows; ++r)
                        for (std::size_t c = 0; c < widths[k]; ++c) dP(r, c) += G(r, off + c);
                      off += widths[k];
                    }
                  });
}

/// Softmax along each row, max-subtracted.
inline Var softmax_rows(Var a) {
  const Tensor& A = a.value();
  detail::require_matrix(A, "softmax_rows");
  Tensor out = A;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    const double mx = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (double& v : row) z += (v = std::exp(v - mx));
    for (double& v : row) v /= z;
  }
  return a.tape->record(OpKind::SoftmaxRows, {a.id}, std::move(out),
                        [](Tape& tp, std::size_t self) {
                          const Tensor& G = tp.grad(self);
                          const Tensor& Y = tp.value_of(self);
                          Tensor& dA = tp.grad_acc(tp.inputs_of(self)[0]);
                          for (std::size_t r = 0; r < Y.rows(); ++r) {
                            auto y = Y.row(r);
                            auto g = G.row(r);
                            double dot = 0.0;
                            for (std::size_t c = 0; c < y.size(); ++c) dot += g[c] * y[c];
                            auto d = dA.row(r);
                            for (std::size_t c = 0; c < y.size(); ++c) d[c] += y[c] * (g[c] - dot);
                          }
                        });
}

/// Rows of A selected by index (repeats allowed).
inline Var gather_rows(Var a, std::vector<std::size_t> index) {
  const Tensor& A = a.value();
  detail::require_matrix(A, "gather_rows");
  if (index.empty()) throw ContractError("gather_rows: empty index list");
  Tensor out({index.size(), A.cols()});
  for (std::size_t r = 0; r < index.size(); ++r) {
    if (index[r] >= A.rows())
      throw ContractError("gather_rows: index " + std::to_string(index[r]) +
                          " out of range for shape " + shape_str(A.shape()));
    std::copy(A.row(index[r]).begin(), A.row(index[r]).end(), out.row(r).begin());
  }
  return a.tape->record(OpKind::GatherRows, {a.id}, std::move(out),
                        [index = std::move(index)](Tape& tp, std::size_t self) {
                          const Tensor& G = tp.grad(self);
                          Tensor& dA = tp.grad_acc(tp.inputs_of(self)[0]);
                          for (std::size_t r = 0; r < index.size(); ++r) {
                            auto d = dA.row(index[r]);
                            auto g = G.row(r);
                            for (std::size_t c = 0; c < g.size(); ++c) d[c] += g[c];
                          }
                        });
}

inline Var scale(Var a, double s) {
  Tensor out = a.value();
  for (double& v : out.raw()) v *= s;
  return a.tape->record(OpKind::Scale, {a.id}, std::move(out), [s](Tape& tp, std::size_t self) {
    const Tensor& G = tp.grad(self);
    Tensor& dA = tp.grad_acc(tp.inputs_of(self)[0]);
    for (std::size_t i = 0; i < G.size(); ++i) dA[i] += s * G[i];
  });
}

inline Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value().raw()) s += v;
  return a.tape->record(OpKind::Sum, {a.id}, Tensor::scalar(s), [](Tape& tp, std::size_t self) {
    const double g = tp.grad(self)[0];
    Tensor& dA = tp.grad_acc(tp.inputs_of(self)[0]);
    for (double& v : dA.raw()) v += g;
  });
}

inline Var mean(Var a) {
  const double n = static_cast<double>(a.value().size());
  double s = 0.0;
  for (double v : a.value().raw()) s += v;
  return a.tape->record(OpKind::Mean, {a.id}, Tensor::scalar(s / n),
                        [n](Tape& tp, std::size_t self) {
                          const double g = tp.grad(self)[0] / n;
                          Tensor& dA = tp.grad_acc(tp.inputs_of(self)[0]);
                          for (double& v : dA.raw()) v += g;
                        });
}

/// Σ (a − b)², a scalar.
inline Var squared_distance(Var a, Var b) {
  Tape& t = detail::same_tape(a, b);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (A.shape() != B.shape())
    throw DimensionError("squared_distance: shapes " + shape_str(A.shape()) + " and " +
                         shape_str(B.shape()) + " differ");
  double s = 0.0;
  for (std::size_t i = 0; i < A.size(); ++i) {
    const double d = A[i] - B[i];
    s += d * d;
  }
  return t.record(OpKind::SquaredDistance, {a.id, b.id}, Tensor::scalar(s),
                  [](Tape& tp, std::size_t self) {
                    const std::size_t ia = tp.inputs_of(self)[0], ib = tp.inputs_of(self)[1];
                    const double g = tp.grad(self)[0];
                    const Tensor& A = tp.value_of(ia);
                    const Tensor& B = tp.value_of(ib);
                    Tensor& dA = tp.grad_acc(ia);
                    for (std::size_t i = 0; i < A.size(); ++i) dA[i] += 2.0 * g * (A[i] - B[i]);
                    Tensor& dB = tp.grad_acc(ib);
                    for (std::size_t i = 0; i < A.size(); ++i) dB[i] -= 2.0 * g * (A[i] - B[i]);
                  });
}

/// Probabilities below this are clamped before the log.
inline constexpr double kProbFloor = 1e-12;

/// Mean over rows of −log softmax(logits)[row, gold[row]]. `clamped`, when
/// given, is incremented once per row whose gold probability hit the floor.
inline Var softmax_cross_entropy(Var logits, std::vector<std::size_t> gold,
                                 std::size_t* clamped = nullptr) {
  const Tensor& Z = logits.value();
  detail::require_matrix(Z, "softmax_cross_entropy");
  if (gold.size() != Z.rows())
    throw DimensionError("softmax_cross_entropy: " + std::to_string(gold.size()) +
                         " labels for logits of shape " + shape_str(Z.shape()));
  Tensor probs({Z.rows(), Z.cols()});
  double total = 0.0;
  for (std::size_t r = 0; r < Z.rows(); ++r) {
    if (gold[r] >= Z.cols())
      throw ContractError("softmax_cross_entropy: class " + std::to_string(gold[r]) +
                          " out of range");
    auto z = Z.row(r);
    auto p = probs.row(r);
    const double mx = *std::max_element(z.begin(), z.end());
    double s = 0.0;
    for (std::size_t c = 0; c < z.size(); ++c) s += (p[c] = std::exp(z[c] - mx));
    for (double& v : p) v /= s;
    double pg = p[gold[r]];
    if (pg < kProbFloor) {
      pg = kProbFloor;
      if (clamped) ++*clamped;
    }
    total -= std::log(pg);
  }
  const double rows = static_cast<double>(Z.rows());
  return logits.tape->record(
      OpKind::SoftmaxCrossEntropy, {logits.id}, Tensor::scalar(total / rows),
      [probs = std::move(probs), gold = std::move(gold), rows](Tape& tp, std::size_t self) {
        const double g = tp.grad(self)[0] / rows;
        Tensor& dZ = tp.grad_acc(tp.inputs_of(self)[0]);
        for (std::size_t r = 0; r < probs.rows(); ++r) {
          auto p = probs.row(r);
          auto d = dZ.row(r);
          for (std::size_t c = 0; c < p.size(); ++c) d[c] += g * (p[c] - (c == gold[r] ? 1.0 : 0.0));
        }
      });
}

}  // namespace ops

/// Forward value of a graph root. The tape is eager, so this is a lookup; the
/// tape keeps every intermediate for a later backward pass.
inline const Tensor& evaluate(Var root) { return root.value(); }

inline std::map<std::string, Tensor> backward(Var root) { return root.tape->backward(root); }

}  // namespace structspan
