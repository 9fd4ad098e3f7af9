#include <gtest/gtest.h>

#include <cmath>

#include "structspan/gradcheck.hpp"
#include "structspan/spans.hpp"
#include "test_util.hpp"

using namespace structspan;
using structspan::testing::random_tensor;

namespace {

Tensor repr(const Tensor& h, const std::vector<SpanIndex>& spans, const Tensor& ws, const Tensor& bs) {
  Tape t;
  return evaluate(span_repr(t.constant(h), spans, t.constant(ws), t.constant(bs)));
}

}  // namespace

TEST(Enumerate, ThreeTokensWidthTwo) {
  const std::vector<SpanIndex> expect = {{0, 0}, {0, 1}, {1, 1}, {1, 2}, {2, 2}};
  EXPECT_EQ(enumerate_candidates(3, 2), expect);
}

TEST(Enumerate, UnrestrictedCountIsTriangular) {
  EXPECT_EQ(enumerate_candidates(4, 4).size(), 10u);
  EXPECT_EQ(candidate_count(4, 4), 10u);
}

TEST(Enumerate, SingleToken) {
  for (int w : {1, 3, 8}) EXPECT_EQ(enumerate_candidates(1, w), (std::vector<SpanIndex>{{0, 0}}));
}

TEST(Enumerate, CountFormulaAndOrderingHold) {
  for (int n = 1; n <= 40; ++n) {
    for (int w = 1; w <= 12; ++w) {
      const auto spans = enumerate_candidates(n, w);
      std::size_t expect = 0;
      for (int k = 1; k <= std::min(w, n); ++k) expect += static_cast<std::size_t>(n - k + 1);
      ASSERT_EQ(spans.size(), expect) << n << "," << w;
      ASSERT_EQ(candidate_count(n, w), expect);
      for (std::size_t r = 1; r < spans.size(); ++r) ASSERT_LT(spans[r - 1], spans[r]);
      for (std::size_t r = 0; r < spans.size(); ++r)
        ASSERT_EQ(candidate_position(spans, spans[r]), static_cast<long>(r));
    }
  }
  EXPECT_EQ(candidate_position(enumerate_candidates(5, 2), {0, 3}), -1);
}

TEST(SpanRepr, ZeroWeightsGiveZeroRows) {
  RngStream rng(1);
  const Tensor h = random_tensor({3, 2}, rng);
  const Tensor out = repr(h, enumerate_candidates(3, 3), Tensor({6, 2}), Tensor({2}));
  for (double v : out.raw()) EXPECT_EQ(v, 0.0);
}

TEST(SpanRepr, OrthogonalEndpointsHaveZeroProductBlock) {
  const Tensor h = Tensor::matrix(2, 2, {1, 0, 0, 1});
  Tensor ws({6, 2});
  ws(4, 0) = 1.0;
  ws(5, 1) = 1.0;
  const Tensor out = repr(h, {{0, 1}}, ws, Tensor({2}));
  EXPECT_EQ(out, Tensor({1, 2}));
}

TEST(SpanRepr, MatchesScalarLoopOracle) {
  RngStream rng(2);
  const std::size_t d = 2;
  for (int trial = 0; trial < 10; ++trial) {
    const Tensor h = random_tensor({3, d}, rng);
    const Tensor ws = random_tensor({3 * d, d}, rng);
    const Tensor bs = random_tensor({d}, rng);
    const auto spans = enumerate_candidates(3, 3);
    const Tensor out = repr(h, spans, ws, bs);
    for (std::size_t r = 0; r < spans.size(); ++r) {
      const auto i = static_cast<std::size_t>(spans[r].start);
      const auto j = static_cast<std::size_t>(spans[r].end);
      for (std::size_t c = 0; c < d; ++c) {
        double z = bs[c];
        for (std::size_t k = 0; k < d; ++k) {
          z += h(i, k) * ws(k, c);
          z += h(j, k) * ws(d + k, c);
          z += h(i, k) * h(j, k) * ws(2 * d + k, c);
        }
        EXPECT_NEAR(out(r, c), std::tanh(z), 1e-14);
      }
    }
  }
}

TEST(SpanRepr, EntriesStayInsideOpenUnitInterval) {
  RngStream rng(3);
  const Tensor h = random_tensor({6, 4}, rng, -3, 3);
  const Tensor out = repr(h, enumerate_candidates(6, 4), random_tensor({12, 4}, rng), random_tensor({4}, rng));
  for (double v : out.raw()) {
    EXPECT_GT(v, -1.0);
    EXPECT_LT(v, 1.0);
  }
}

TEST(SpanRepr, DegenerateSpanUsesGeneralPath) {
  RngStream rng(4);
  const std::size_t d = 3;
  const Tensor h = random_tensor({4, d}, rng);
  const Tensor ws = random_tensor({3 * d, d}, rng);
  const Tensor bs = random_tensor({d}, rng);
  const Tensor single = repr(h, {{2, 2}}, ws, bs);
  Tensor feat({1, 3 * d});
  for (std::size_t k = 0; k < d; ++k) {
    feat[k] = h(2, k);
    feat[d + k] = h(2, k);
    feat[2 * d + k] = h(2, k) * h(2, k);
  }
  Tape t;
  const Tensor manual =
      evaluate(ops::tanh(ops::add(ops::matmul(t.constant(feat), t.constant(ws)), t.constant(bs))));
  EXPECT_EQ(single, manual);
}

TEST(SpanRepr, OutOfRangeSpanIsContractError) {
  RngStream rng(5);
  const Tensor h = random_tensor({3, 2}, rng);
  EXPECT_THROW(repr(h, {{1, 3}}, Tensor({6, 2}), Tensor({2})), ContractError);
  EXPECT_THROW(repr(h, {{2, 1}}, Tensor({6, 2}), Tensor({2})), ContractError);
}

TEST(SpanRepr, InitBoundsFollowFanIn) {
  ParamStore p;
  RngStream rng(6);
  init_span_layer(p, 5, rng);
  const double a = 1.0 / std::sqrt(15.0);
  EXPECT_EQ(p.at("span.W_s").shape(), (Shape{15, 5}));
  for (double v : p.at("span.W_s").raw()) EXPECT_LE(std::abs(v), a);
  EXPECT_EQ(p.at("span.b_s"), Tensor({5}));
}

TEST(SpanRepr, GradientsPassGradCheck) {
  RngStream rng(7);
  ParamStore p;
  p.add("h", random_tensor({4, 3}, rng));
  p.add("span.W_s", random_tensor({9, 3}, rng));
  p.add("span.b_s", random_tensor({3}, rng));
  const Tensor target = random_tensor({candidate_count(4, 3), 3}, rng);
  auto r = grad_check(
      [&](Tape& t, const ParamStore& ps) {
        Var s = span_repr(t, ps.leaf(t, "h"), enumerate_candidates(4, 3), ps);
        return ops::sum(ops::mul(s, t.constant(target)));
      },
      p);
  EXPECT_TRUE(r.pass) << r.worst();
}
