#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "structspan/evaluation.hpp"
#include "structspan/sweep.hpp"

using namespace structspan;

namespace {

EntitySpan span(int s, int e, const char* t) { return {s, e, t}; }

const char* kTypes[] = {"PER", "ORG", "GPE", "LOC"};

std::vector<EntitySpan> random_spans(int n, int count, RngStream& rng) {
  std::vector<EntitySpan> out;
  for (int k = 0; k < count * 4 && static_cast<int>(out.size()) < count; ++k) {
    const int s = rng.range(0, n - 1);
    const EntitySpan e{s, rng.range(s, n - 1), kTypes[rng.range(0, 3)]};
    if (std::find(out.begin(), out.end(), e) == out.end()) out.push_back(e);
  }
  return out;
}

// Prediction set sharing some members with gold.
std::vector<EntitySpan> perturb(const std::vector<EntitySpan>& gold, int n, RngStream& rng) {
  std::vector<EntitySpan> out;
  for (const auto& g : gold)
    if (rng.bernoulli(0.6)) out.push_back(g);
  for (const auto& e : random_spans(n, rng.range(0, 3), rng))
    if (std::find(out.begin(), out.end(), e) == out.end()) out.push_back(e);
  return out;
}

RunConfig tiny_config() {
  RunConfig c;
  c.hidden_dim = 8;
  c.key_dim = 4;
  c.ff_dim = 16;
  c.max_span_width = 4;
  c.epochs = 1;
  c.batch_size = 4;
  c.synth_sentences = 30;
  return c;
}

}  // namespace

TEST(ExactMatch, HalfPrecisionFullRecall) {
  const std::vector<EntitySpan> gold = {span(0, 1, "PER")};
  const std::vector<EntitySpan> pred = {span(0, 1, "PER"), span(2, 2, "ORG")};
  const MatchCounts c = exact_match_prf(gold, pred);
  EXPECT_EQ(c, (MatchCounts{1, 1, 0}));
  const Prf m = prf(c);
  EXPECT_DOUBLE_EQ(m.precision, 0.5);
  EXPECT_DOUBLE_EQ(m.recall, 1.0);
  EXPECT_NEAR(m.f1, 2.0 / 3.0, 1e-15);
}

TEST(ExactMatch, TypeAndBoundariesMustAgree) {
  const std::vector<EntitySpan> gold = {span(0, 1, "PER")};
  EXPECT_EQ(exact_match_prf(gold, {span(0, 1, "ORG")}), (MatchCounts{0, 1, 1}));
  EXPECT_EQ(exact_match_prf(gold, {span(0, 2, "PER")}), (MatchCounts{0, 1, 1}));
}

TEST(ExactMatch, EmptySetConventions) {
  const Prf both = prf(exact_match_prf({}, {}));
  EXPECT_EQ(both.precision, 1.0);
  EXPECT_EQ(both.recall, 1.0);
  EXPECT_EQ(both.f1, 1.0);
  const Prf no_pred = prf(exact_match_prf({span(0, 0, "PER")}, {}));
  EXPECT_EQ(no_pred.precision, 1.0);
  EXPECT_EQ(no_pred.recall, 0.0);
  EXPECT_EQ(no_pred.f1, 0.0);
  const Prf no_gold = prf(exact_match_prf({}, {span(0, 0, "PER")}));
  EXPECT_EQ(no_gold.precision, 0.0);
  EXPECT_EQ(no_gold.recall, 1.0);
  EXPECT_EQ(no_gold.f1, 0.0);
}

TEST(ExactMatch, DuplicatesAreContractError) {
  const std::vector<EntitySpan> dup = {span(0, 1, "PER"), span(0, 1, "PER")};
  EXPECT_THROW(exact_match_prf(dup, {}), ContractError);
  EXPECT_THROW(exact_match_prf({}, dup), ContractError);
  EXPECT_THROW(subset_metrics(dup, {}), ContractError);
}

TEST(ExactMatch, CountsAreAdditiveAndConsistent) {
  RngStream rng(11);
  MatchCounts total;
  std::size_t gold_size = 0, pred_size = 0;
  std::vector<EntitySpan> all_gold, all_pred;
  for (int s = 0; s < 20; ++s) {
    const int n = rng.range(1, 12);
    const auto gold = random_spans(n, rng.range(0, 5), rng);
    auto pred = perturb(gold, n, rng);
    const MatchCounts c = exact_match_prf(gold, pred);
    ASSERT_EQ(c.tp + c.fn, gold.size());
    ASSERT_EQ(c.tp + c.fp, pred.size());
    rng.shuffle(pred);
    ASSERT_EQ(exact_match_prf(gold, pred), c);
    total += c;
    gold_size += gold.size();
    pred_size += pred.size();
    // Offsetting each sentence into its own range turns the corpus into one set.
    for (auto e : gold) all_gold.push_back({e.start + 100 * s, e.end + 100 * s, e.type});
    for (auto e : pred) all_pred.push_back({e.start + 100 * s, e.end + 100 * s, e.type});
  }
  EXPECT_EQ(total.tp + total.fn, gold_size);
  EXPECT_EQ(total.tp + total.fp, pred_size);
  EXPECT_EQ(exact_match_prf(all_gold, all_pred), total);
}

TEST(Subsets, NestedAndOverlapMembership) {
  const std::vector<EntitySpan> v = {span(0, 4, "ORG"), span(1, 2, "GPE"), span(3, 6, "PER"),
                                     span(8, 8, "LOC")};
  EXPECT_EQ(nested_members(v), (std::vector<bool>{true, true, false, false}));
  EXPECT_EQ(overlap_members(v), (std::vector<bool>{true, false, true, false}));
  // same boundaries, different type: neither nested nor crossing
  EXPECT_EQ(nested_members({span(0, 1, "PER"), span(0, 1, "ORG")}), (std::vector<bool>{false, false}));
}

TEST(Subsets, NestedRecallCountsFoundInnerAndOuter) {
  const std::vector<EntitySpan> gold = {span(0, 4, "ORG"), span(1, 2, "GPE"), span(6, 6, "PER")};
  const std::vector<EntitySpan> pred = {span(1, 2, "GPE"), span(6, 6, "PER")};
  const SubsetMetrics m = subset_metrics(gold, pred);
  EXPECT_EQ(m.nested.gold_total, 2u);
  EXPECT_EQ(m.nested.gold_found, 1u);
  EXPECT_EQ(*m.nested.recall(), 0.5);
  // no nested structure among the predictions
  EXPECT_EQ(m.nested.pred_total, 0u);
  EXPECT_FALSE(m.nested.precision().has_value());
  EXPECT_EQ(*m.nested.f1(), 0.0);
}

TEST(Subsets, FlatGoldHasNoNestedRecall) {
  const std::vector<EntitySpan> gold = {span(0, 0, "PER"), span(2, 3, "ORG")};
  const SubsetMetrics m = subset_metrics(gold, gold);
  EXPECT_FALSE(m.nested.recall().has_value());
  EXPECT_FALSE(m.nested.f1().has_value());
  EXPECT_FALSE(m.overlap.recall().has_value());
  EvalReport r;
  r.add(gold, gold);
  EXPECT_EQ(r.to_json()["nested"]["recall"], "n/a");
}

TEST(Subsets, PerfectPredictionScoresOne) {
  RngStream rng(5);
  for (int t = 0; t < 50; ++t) {
    const auto gold = random_spans(10, rng.range(1, 6), rng);
    const SubsetMetrics m = subset_metrics(gold, gold);
    for (const SubsetCounts* c : {&m.nested, &m.overlap}) {
      EXPECT_EQ(c->gold_total, c->pred_total);
      if (c->gold_total) {
        EXPECT_EQ(*c->f1(), 1.0);
      }
    }
  }
}

TEST(Subsets, SwappingSidesSwapsPrecisionAndRecall) {
  RngStream rng(9);
  for (int t = 0; t < 100; ++t) {
    const int n = rng.range(2, 12);
    const auto gold = random_spans(n, rng.range(0, 6), rng);
    const auto pred = perturb(gold, n, rng);
    const SubsetMetrics a = subset_metrics(gold, pred), b = subset_metrics(pred, gold);
    EXPECT_EQ(a.nested.recall(), b.nested.precision());
    EXPECT_EQ(a.nested.precision(), b.nested.recall());
    EXPECT_EQ(a.overlap.recall(), b.overlap.precision());
    const Prf x = prf(exact_match_prf(gold, pred)), y = prf(exact_match_prf(pred, gold));
    EXPECT_EQ(x.precision, y.recall);
    EXPECT_EQ(x.f1, y.f1);
  }
}

TEST(CandidateAccuracy, PerfectAndAllNone) {
  GoldAlignment gold;
  gold.labels = {0, 2, 0};
  const Tensor sharp = Tensor::matrix(3, 3, {0.9, 0.05, 0.05, 0.1, 0.1, 0.8, 0.7, 0.2, 0.1});
  EXPECT_EQ(candidate_accuracy(sharp, gold), 1.0);
  // uniform rows tie; argmax goes to the lowest class, which is NONE
  const Tensor uniform({3, 3}, 1.0 / 3.0);
  GoldAlignment none;
  none.labels = {0, 0, 0};
  EXPECT_EQ(candidate_accuracy(uniform, none), 1.0);
  EXPECT_NEAR(candidate_accuracy(uniform, gold), 2.0 / 3.0, 1e-15);
  EXPECT_THROW(candidate_accuracy(uniform, GoldAlignment{}), DimensionError);
}

TEST(CandidateAccuracy, MatchesCountingOracle) {
  RngStream rng(3);
  for (int t = 0; t < 50; ++t) {
    const std::size_t rows = static_cast<std::size_t>(rng.range(1, 30));
    Tensor p({rows, 5});
    GoldAlignment g;
    std::size_t correct = 0;
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < 5; ++c) p(r, c) = rng.uniform();
      g.labels.push_back(static_cast<std::size_t>(rng.range(0, 4)));
      bool is_max = true;
      for (std::size_t c = 0; c < 5; ++c)
        if (p(r, c) > p(r, g.labels[r]) || (p(r, c) == p(r, g.labels[r]) && c < g.labels[r])) is_max = false;
      correct += is_max;
    }
    const AccuracyCounts a = candidate_accuracy_counts(p, g);
    EXPECT_EQ(a.correct, correct);
    EXPECT_EQ(a.total, rows);
  }
}

TEST(Report, PerTypeCountsSumToMicro) {
  RngStream rng(21);
  EvalReport r;
  for (int s = 0; s < 20; ++s) {
    const int n = rng.range(1, 10);
    const auto gold = random_spans(n, rng.range(0, 4), rng);
    r.add(gold, perturb(gold, n, rng));
  }
  MatchCounts sum;
  for (const auto& [t, c] : r.per_type) sum += c;
  EXPECT_EQ(sum, r.counts);
  EXPECT_EQ(r.sentences, 20u);
  const Json j = r.to_json();
  EXPECT_EQ(j["tp"], r.counts.tp);
  EXPECT_DOUBLE_EQ(j["f1"].get<double>(), r.micro().f1);
}

TEST(Sweep, SingleValueEqualsDirectRun) {
  const RunConfig base = tiny_config();
  const SweepResult s = sweep(SweepAxis::LearningRate, {2e-3}, base);
  ASSERT_EQ(s.rows.size(), 1u);
  ASSERT_FALSE(s.rows[0].failed) << s.rows[0].error;
  RunConfig c = base;
  c.learning_rate = 2e-3;
  const Experiment e = run_experiment(c, synthetic_split(c), synthetic_types());
  EXPECT_EQ(s.rows[0].f1, e.test.micro().f1);
  EXPECT_EQ(s.rows[0].precision, e.test.micro().precision);
  EXPECT_EQ(s.rows[0].accuracy, e.test.candidate_accuracy());
  EXPECT_EQ(s.rows[0].epochs, 1);
}

TEST(Sweep, RepeatedSweepIsIdentical) {
  const RunConfig base = tiny_config();
  const auto a = sweep(SweepAxis::HiddenDim, {4, 6}, base).csv(false);
  const auto b = sweep(SweepAxis::HiddenDim, {4, 6}, base).csv(false);
  EXPECT_EQ(a, b);
  EXPECT_EQ(std::count(a.begin(), a.end(), '\n'), 3);
  EXPECT_EQ(a.rfind("axis,value,", 0), 0u);
}

TEST(Sweep, InvalidRowIsRecordedAsFailed) {
  const auto s = sweep(SweepAxis::HiddenDim, {4.5, 4}, tiny_config());
  ASSERT_EQ(s.rows.size(), 2u);
  EXPECT_TRUE(s.rows[0].failed);
  EXPECT_FALSE(s.rows[1].failed);
  EXPECT_NE(s.csv(false).find("failed"), std::string::npos);
  EXPECT_THROW(sweep(SweepAxis::LearningRate, {}, tiny_config()), ConfigError);
  EXPECT_THROW(parse_axis("depth"), ConfigError);
}
