#include <gtest/gtest.h>

#include <cmath>

#include "structspan/gradcheck.hpp"
#include "structspan/struct_attention.hpp"
#include "test_util.hpp"

using namespace structspan;
using structspan::testing::random_tensor;

namespace {

Tensor weights(const Tensor& s, const Tensor& wq, const Tensor& wk) {
  Tape t;
  return evaluate(attention_weights(t.constant(s), t.constant(wq), t.constant(wk)));
}

Tensor mix(const Tensor& alpha, const Tensor& s) {
  Tape t;
  return evaluate(aggregate(t.constant(alpha), t.constant(s)));
}

}  // namespace

TEST(Attention, SingleCandidateAttendsToItself) {
  RngStream rng(1);
  const Tensor a = weights(random_tensor({1, 4}, rng), random_tensor({4, 2}, rng), random_tensor({4, 2}, rng));
  EXPECT_EQ(a, Tensor::matrix(1, 1, {1.0}));
}

TEST(Attention, IdenticalRowsGiveUniformWeights) {
  RngStream rng(2);
  Tensor s({2, 3});
  const Tensor row = random_tensor({3}, rng);
  for (std::size_t c = 0; c < 3; ++c) s(0, c) = s(1, c) = row[c];
  const Tensor a = weights(s, random_tensor({3, 2}, rng), random_tensor({3, 2}, rng));
  for (double v : a.raw()) EXPECT_NEAR(v, 0.5, 1e-15);
}

TEST(Attention, OneDimensionalScoresOneAndZero) {
  // Row 0 scores (s0·q)(s_c·k) = [1, 0] with d_k = 1.
  const Tensor s = Tensor::matrix(2, 1, {1.0, 0.0});
  const Tensor wq = Tensor::matrix(1, 1, {1.0});
  const Tensor wk = Tensor::matrix(1, 1, {1.0});
  const Tensor a = weights(s, wq, wk);
  EXPECT_NEAR(a(0, 0), 0.7311, 5e-5);
  EXPECT_NEAR(a(0, 1), 0.2689, 5e-5);
}

TEST(Attention, MatchesScalarOracleAndRowsAreStochastic) {
  RngStream rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t m = 5, d = 4, dk = 3;
    const Tensor s = random_tensor({m, d}, rng);
    const Tensor wq = random_tensor({d, dk}, rng, -2, 2);
    const Tensor wk = random_tensor({d, dk}, rng, -2, 2);
    const Tensor a = weights(s, wq, wk);
    for (std::size_t r = 0; r < m; ++r) {
      std::vector<double> score(m);
      for (std::size_t c = 0; c < m; ++c) {
        double acc = 0;
        for (std::size_t k = 0; k < dk; ++k) {
          double q = 0, kk = 0;
          for (std::size_t i = 0; i < d; ++i) {
            q += s(r, i) * wq(i, k);
            kk += s(c, i) * wk(i, k);
          }
          acc += q * kk;
        }
        score[c] = std::exp(acc / std::sqrt(static_cast<double>(dk)));
      }
      double z = 0, row_sum = 0;
      for (double e : score) z += e;
      for (std::size_t c = 0; c < m; ++c) {
        EXPECT_NEAR(a(r, c), score[c] / z, 1e-14);
        EXPECT_GE(a(r, c), 0.0);
        EXPECT_LE(a(r, c), 1.0);
        row_sum += a(r, c);
      }
      EXPECT_NEAR(row_sum, 1.0, 1e-12);
    }
  }
}

TEST(Attention, BilinearRescalingLeavesWeightsUnchanged) {
  RngStream rng(4);
  const Tensor s = random_tensor({6, 4}, rng);
  const Tensor wq = random_tensor({4, 2}, rng);
  const Tensor wk = random_tensor({4, 2}, rng);
  Tensor wq2 = wq, wk2 = wk;
  for (double& v : wq2.raw()) v *= 3.7;
  for (double& v : wk2.raw()) v /= 3.7;
  EXPECT_LT(structspan::testing::max_abs_diff(weights(s, wq, wk), weights(s, wq2, wk2)), 1e-9);
}

TEST(Attention, ShiftingScoresLeavesRowsUnchanged) {
  RngStream rng(5);
  Tensor scores = random_tensor({4, 4}, rng, -3, 3);
  Tape t;
  const Tensor a = evaluate(ops::softmax_rows(t.constant(scores)));
  for (std::size_t c = 0; c < 4; ++c) scores(2, c) += 17.25;
  const Tensor b = evaluate(ops::softmax_rows(t.constant(scores)));
  EXPECT_LT(structspan::testing::max_abs_diff(a, b), 1e-12);
}

TEST(Aggregate, IdentityWeightsReturnInput) {
  RngStream rng(6);
  const Tensor s = random_tensor({4, 3}, rng);
  EXPECT_EQ(mix(Tensor::identity(4), s), s);
}

TEST(Aggregate, UniformWeightsGiveColumnMeans) {
  RngStream rng(7);
  const Tensor s = random_tensor({4, 3}, rng);
  const Tensor out = mix(Tensor({4, 4}, 0.25), s);
  for (std::size_t c = 0; c < 3; ++c) {
    double mean = 0;
    for (std::size_t r = 0; r < 4; ++r) mean += s(r, c) / 4.0;
    for (std::size_t r = 0; r < 4; ++r) EXPECT_NEAR(out(r, c), mean, 1e-15);
  }
}

TEST(Aggregate, MatchesTripleLoopAndStaysInConvexHull) {
  RngStream rng(8);
  const Tensor s = random_tensor({3, 4}, rng);
  const Tensor alpha = weights(s, random_tensor({4, 2}, rng), random_tensor({4, 2}, rng));
  const Tensor out = mix(alpha, s);
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 4; ++c) {
      double acc = 0, lo = 1e300, hi = -1e300;
      for (std::size_t k = 0; k < 3; ++k) {
        acc += alpha(r, k) * s(k, c);
        lo = std::min(lo, s(k, c));
        hi = std::max(hi, s(k, c));
      }
      EXPECT_NEAR(out(r, c), acc, 1e-15);
      EXPECT_GE(out(r, c), lo - 1e-15);
      EXPECT_LE(out(r, c), hi + 1e-15);
    }
}

TEST(Attention, GradientsPassGradCheck) {
  RngStream rng(9);
  ParamStore p;
  p.add("s", random_tensor({5, 4}, rng));
  p.add("attn.W_Q", random_tensor({4, 2}, rng));
  p.add("attn.W_K", random_tensor({4, 2}, rng));
  const Tensor target = random_tensor({5, 4}, rng);
  auto r = grad_check(
      [&](Tape& t, const ParamStore& ps) {
        Var s = ps.leaf(t, "s");
        Var a = attention_weights(s, ps.leaf(t, "attn.W_Q"), ps.leaf(t, "attn.W_K"));
        return ops::sum(ops::mul(aggregate(a, s), t.constant(target)));
      },
      p);
  EXPECT_TRUE(r.pass) << r.worst();
}

TEST(Attention, InitShapes) {
  ParamStore p;
  RngStream rng(10);
  init_struct_attention(p, 6, 3, rng);
  EXPECT_EQ(p.at("attn.W_Q").shape(), (Shape{6, 3}));
  EXPECT_EQ(p.at("attn.W_K").shape(), (Shape{6, 3}));
  for (const char* name : {"attn.W_Q", "attn.W_K"})
    for (double v : p.at(name).raw()) EXPECT_TRUE(std::isfinite(v));
}
