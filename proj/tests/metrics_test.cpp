#include "inspl/metrics.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "inspl/rng.hpp"

using namespace inspl;

namespace {

constexpr Label I = Label::Illicit;
constexpr Label L = Label::Licit;

// O(P*N) pairwise comparison with ties worth one half
double auc_pairwise_oracle(const std::vector<Label>& truth,
                           const std::vector<double>& scores) {
  double wins = 0.0;
  std::size_t pairs = 0;
  for (std::size_t p = 0; p < truth.size(); ++p) {
    if (truth[p] != I) continue;
    for (std::size_t n = 0; n < truth.size(); ++n) {
      if (truth[n] != L) continue;
      ++pairs;
      if (scores[p] > scores[n]) wins += 1.0;
      else if (scores[p] == scores[n]) wins += 0.5;
    }
  }
  return wins / static_cast<double>(pairs);
}

}  // namespace

TEST(Confusion, PerfectPredictions) {
  const std::vector<Label> truth = {I, L, I, L};
  const auto cm = confusion(truth, truth);
  EXPECT_EQ(cm.tp, 2u);
  EXPECT_EQ(cm.tn, 2u);
  EXPECT_EQ(cm.fp, 0u);
  EXPECT_EQ(cm.fn, 0u);
}

TEST(Confusion, AllPredictedLicit) {
  const auto cm = confusion({I, L, I}, {L, L, L});
  EXPECT_EQ(cm.tp, 0u);
  EXPECT_EQ(cm.fp, 0u);
  EXPECT_EQ(cm.fn, 2u);
  EXPECT_EQ(cm.tn, 1u);
}

TEST(Confusion, HandCountedMix) {
  // truth [I,I,L,L,I], pred [I,L,I,L,L]
  const auto cm = confusion({I, I, L, L, I}, {I, L, I, L, L});
  EXPECT_EQ(cm.tp, 1u);
  EXPECT_EQ(cm.fn, 2u);
  EXPECT_EQ(cm.fp, 1u);
  EXPECT_EQ(cm.tn, 1u);
  EXPECT_EQ(cm.total(), 5u);
}

TEST(Confusion, LengthMismatchThrows) {
  EXPECT_THROW(confusion({I}, {I, L}), Error);
}

TEST(PrecisionRecallF1, HandComputedValues) {
  ConfusionMatrix cm;
  cm.tp = 2;
  cm.fp = 1;
  cm.fn = 2;
  EXPECT_NEAR(precision(cm).value, 0.6667, 1e-4);
  EXPECT_NEAR(recall(cm).value, 0.5, 1e-12);
  EXPECT_NEAR(f1(cm).value, 0.5714, 1e-4);
  EXPECT_FALSE(f1(cm).degenerate);
}

TEST(PrecisionRecallF1, DegenerateDenominators) {
  ConfusionMatrix cm;
  cm.tn = 5;
  const auto p = precision(cm);
  EXPECT_EQ(p.value, 0.0);
  EXPECT_TRUE(p.degenerate);
  EXPECT_TRUE(recall(cm).degenerate);
  EXPECT_TRUE(f1(cm).degenerate);
}

TEST(PrecisionRecallF1, PerfectMatrix) {
  ConfusionMatrix cm;
  cm.tp = 10;
  cm.tn = 90;
  EXPECT_DOUBLE_EQ(precision(cm).value, 1.0);
  EXPECT_DOUBLE_EQ(recall(cm).value, 1.0);
  EXPECT_DOUBLE_EQ(f1(cm).value, 1.0);
}

TEST(PrecisionRecallF1, F1BetweenPrecisionAndRecall) {
  Rng rng(41);
  for (int trial = 0; trial < 200; ++trial) {
    ConfusionMatrix cm;
    cm.tp = 1 + rng.next_below(50);
    cm.fp = rng.next_below(50);
    cm.fn = rng.next_below(50);
    cm.tn = rng.next_below(50);
    const double p = precision(cm).value;
    const double r = recall(cm).value;
    const double f = f1(cm).value;
    if (p > 0.0 && r > 0.0) {
      EXPECT_GE(f, std::min(p, r) - 1e-12);
      EXPECT_LE(f, std::max(p, r) + 1e-12);
    }
  }
}

TEST(Auc, SeparatedScoresGiveOne) {
  EXPECT_DOUBLE_EQ(auc({I, I, L, L}, {0.9, 0.8, 0.2, 0.1}), 1.0);
  EXPECT_DOUBLE_EQ(auc({I, I, L, L}, {0.1, 0.2, 0.8, 0.9}), 0.0);
}

TEST(Auc, AllTiedScoresGiveHalf) {
  EXPECT_DOUBLE_EQ(auc({I, L, I, L}, {0.3, 0.3, 0.3, 0.3}), 0.5);
}

TEST(Auc, HandComputedPairwiseCase) {
  // pos scores [0.8, 0.4], neg [0.6, 0.2] -> 3 of 4 pairs win
  EXPECT_DOUBLE_EQ(auc({I, I, L, L}, {0.8, 0.4, 0.6, 0.2}), 0.75);
}

TEST(Auc, SingleClassThrows) {
  try {
    auc({I, I}, {0.5, 0.6});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SingleClass);
  }
}

TEST(Auc, MatchesPairwiseOracleExactly) {
  Rng rng(42);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 5 + rng.next_below(40);
    std::vector<Label> truth(n);
    std::vector<double> scores(n);
    bool has_pos = false, has_neg = false;
    for (std::size_t i = 0; i < n; ++i) {
      truth[i] = rng.next_bernoulli(0.4) ? I : L;
      (truth[i] == I ? has_pos : has_neg) = true;
      // quantized scores so ties actually occur
      scores[i] = static_cast<double>(rng.next_below(8)) / 8.0;
    }
    if (!has_pos || !has_neg) continue;
    EXPECT_DOUBLE_EQ(auc(truth, scores), auc_pairwise_oracle(truth, scores));
  }
}

TEST(Auc, InvariantUnderMonotoneTransforms) {
  Rng rng(43);
  std::vector<Label> truth;
  std::vector<double> scores;
  for (int i = 0; i < 60; ++i) {
    truth.push_back(rng.next_bernoulli(0.3) ? I : L);
    scores.push_back(rng.next_double());
  }
  truth[0] = I;
  truth[1] = L;
  const double base = auc(truth, scores);
  std::vector<double> exp_scores, affine_scores, cube_scores;
  for (double s : scores) {
    exp_scores.push_back(std::exp(3.0 * s));
    affine_scores.push_back(5.0 * s - 11.0);
    cube_scores.push_back(s * s * s);
  }
  EXPECT_DOUBLE_EQ(auc(truth, exp_scores), base);
  EXPECT_DOUBLE_EQ(auc(truth, affine_scores), base);
  EXPECT_DOUBLE_EQ(auc(truth, cube_scores), base);
}

TEST(Metrics, InvariantUnderJointPermutation) {
  Rng rng(44);
  std::vector<Label> truth, pred;
  for (int i = 0; i < 50; ++i) {
    truth.push_back(rng.next_bernoulli(0.4) ? I : L);
    pred.push_back(rng.next_bernoulli(0.4) ? I : L);
  }
  const auto base = confusion(truth, pred);
  const auto perm = rng.next_permutation(50);
  std::vector<Label> truth_p(50), pred_p(50);
  for (std::size_t i = 0; i < 50; ++i) {
    truth_p[i] = truth[perm[i]];
    pred_p[i] = pred[perm[i]];
  }
  EXPECT_EQ(confusion(truth_p, pred_p), base);
}

// ---------------------------------------------------------------------------
// per-timestep series

namespace {

TemporalDataset tiny_test_set() {
  TemporalDataset ds;
  ds.feature_dim = 1;
  int next_id = 1;
  const std::vector<std::vector<Label>> step_labels = {
      {I, L, Label::Unknown, I},
      {L, L},
      {Label::Unknown, Label::Unknown},
  };
  for (std::size_t t = 0; t < step_labels.size(); ++t) {
    const auto& labels = step_labels[t];
    std::vector<NodeId> ids;
    for (std::size_t i = 0; i < labels.size(); ++i) ids.push_back(next_id++);
    Matrixf features(labels.size(), 1);
    ds.graphs.push_back(std::make_shared<TransactionGraph>(
        build_graph(static_cast<int>(t + 40), ids, {}, features, labels)));
  }
  return ds;
}

}  // namespace

TEST(PerTimestep, OneEntryPerGraphInTimeOrder) {
  const auto ds = tiny_test_set();
  const std::vector<std::vector<Label>> preds = {{I, L, I}, {L, L}, {}};
  const auto series = per_timestep_f1(ds, preds);
  ASSERT_EQ(series.size(), 3u);
  EXPECT_EQ(series[0].time_step, 40);
  EXPECT_EQ(series[1].time_step, 41);
  EXPECT_EQ(series[2].time_step, 42);
  // step 40: truth I,L,I vs pred I,L,I -> perfect
  EXPECT_DOUBLE_EQ(series[0].f1.value, 1.0);
  // step 41: no illicit nodes at all -> degenerate 0
  EXPECT_TRUE(series[1].f1.degenerate);
  EXPECT_DOUBLE_EQ(series[1].f1.value, 0.0);
  // step 42: all unknown -> empty confusion, degenerate
  EXPECT_EQ(series[2].confusion.total(), 0u);
  EXPECT_TRUE(series[2].f1.degenerate);
}

TEST(PerTimestep, ConfusionsSumToPooled) {
  const auto ds = tiny_test_set();
  const std::vector<std::vector<Label>> preds = {{I, I, L}, {L, I}, {}};
  const auto series = per_timestep_f1(ds, preds);
  ConfusionMatrix pooled;
  for (const auto& e : series) pooled += e.confusion;

  std::vector<Label> all_truth, all_pred;
  for (std::size_t g = 0; g < ds.num_graphs(); ++g) {
    std::size_t k = 0;
    for (Label l : ds.graphs[g]->labels)
      if (l != Label::Unknown) {
        all_truth.push_back(l);
        all_pred.push_back(preds[g][k++]);
      }
  }
  EXPECT_EQ(pooled, confusion(all_truth, all_pred));
}

TEST(PerTimestep, MisalignmentRejected) {
  const auto ds = tiny_test_set();
  EXPECT_THROW(per_timestep_f1(ds, {{I}, {L, L}, {}}), Error);
  EXPECT_THROW(per_timestep_f1(ds, {{I, L, I}}), Error);
}
