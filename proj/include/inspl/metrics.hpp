#pragma once
// Classification metrics with Illicit as the positive class: confusion
// counts, precision/recall/F1, rank-based ROC-AUC, and the per-timestep F1
// series. Zero-denominator metrics report 0 with a degenerate flag rather
// than NaN.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <vector>

#include "inspl/common.hpp"
#include "inspl/graph.hpp"

namespace inspl {

struct ConfusionMatrix {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tn = 0;

  std::uint64_t total() const { return tp + fp + fn + tn; }

  ConfusionMatrix& operator+=(const ConfusionMatrix& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    tn += o.tn;
    return *this;
  }
  bool operator==(const ConfusionMatrix& o) const {
    return tp == o.tp && fp == o.fp && fn == o.fn && tn == o.tn;
  }
};

inline ConfusionMatrix confusion(const std::vector<Label>& y_true,
                                 const std::vector<Label>& y_pred) {
  require(y_true.size() == y_pred.size(), ErrorCode::LengthMismatch,
          "confusion: " + std::to_string(y_true.size()) + " vs " +
              std::to_string(y_pred.size()));
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const bool truth = y_true[i] == Label::Illicit;
    const bool pred = y_pred[i] == Label::Illicit;
    if (truth && pred) ++cm.tp;
    else if (!truth && pred) ++cm.fp;
    else if (truth && !pred) ++cm.fn;
    else ++cm.tn;
  }
  return cm;
}

struct Metric {
  double value = 0.0;
  bool degenerate = false;  // zero denominator
};

inline Metric precision(const ConfusionMatrix& cm) {
  if (cm.tp + cm.fp == 0) return {0.0, true};
  return {static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fp),
          false};
}

// Detection rate.
inline Metric recall(const ConfusionMatrix& cm) {
  if (cm.tp + cm.fn == 0) return {0.0, true};
  return {static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fn),
          false};
}

// Harmonic mean of precision and recall.
inline Metric f1(const ConfusionMatrix& cm) {
  const Metric p = precision(cm);
  const Metric r = recall(cm);
  if (p.degenerate || r.degenerate || p.value + r.value == 0.0)
    return {0.0, true};
  return {2.0 * r.value * p.value / (r.value + p.value), false};
}

// ROC-AUC as the normalized Mann-Whitney U statistic with average ranks for
// ties, which equals the trapezoidal integral of the ROC curve.
inline double auc(const std::vector<Label>& y_true,
                  const std::vector<double>& scores) {
  require(y_true.size() == scores.size(), ErrorCode::LengthMismatch, "auc");
  std::uint64_t positives = 0;
  for (Label l : y_true)
    if (l == Label::Illicit) ++positives;
  const std::uint64_t negatives = y_true.size() - positives;
  require(positives > 0 && negatives > 0, ErrorCode::SingleClass,
          "auc: needs both classes");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] < scores[b];
  });

  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    // ranks i+1 .. j averaged across the tie group
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k)
      if (y_true[order[k]] == Label::Illicit) rank_sum_pos += avg_rank;
    i = j;
  }
  const double u = rank_sum_pos -
                   static_cast<double>(positives) *
                       (static_cast<double>(positives) + 1.0) / 2.0;
  return u / (static_cast<double>(positives) * static_cast<double>(negatives));
}

struct TimestepF1 {
  int time_step = 0;
  Metric f1;
  ConfusionMatrix confusion;
};

// One F1 per test graph over its labeled nodes, in time order. Predictions
// are aligned per graph to the labeled nodes in node order.
inline std::vector<TimestepF1> per_timestep_f1(
    const TemporalDataset& test_set,
    const std::vector<std::vector<Label>>& predictions) {
  require(predictions.size() == test_set.num_graphs(), ErrorCode::Misalignment,
          "per_timestep_f1: one prediction vector per test graph");
  std::vector<TimestepF1> out;
  out.reserve(test_set.num_graphs());
  for (std::size_t gi = 0; gi < test_set.num_graphs(); ++gi) {
    const TransactionGraph& g = *test_set.graphs[gi];
    std::vector<Label> truth;
    for (Label l : g.labels)
      if (l != Label::Unknown) truth.push_back(l);
    require(truth.size() == predictions[gi].size(), ErrorCode::Misalignment,
            "per_timestep_f1: graph " + std::to_string(g.time_step) + " has " +
                std::to_string(truth.size()) + " labeled nodes, got " +
                std::to_string(predictions[gi].size()) + " predictions");
    TimestepF1 entry;
    entry.time_step = g.time_step;
    entry.confusion = confusion(truth, predictions[gi]);
    entry.f1 = f1(entry.confusion);
    out.push_back(entry);
  }
  return out;
}

struct EvalReport {
  Metric precision;
  Metric recall;
  Metric f1;
  double auc = 0.0;
  std::vector<TimestepF1> per_timestep;
  ConfusionMatrix confusion;
};

}  // namespace inspl
