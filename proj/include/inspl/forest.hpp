#pragma once
// Random forest over raw features and/or DGI embeddings. Gini criterion,
// ceil(sqrt(d)) feature candidates per split, bootstrap size n, growth until
// pure or fewer than two samples; a split with no impurity decrease
// terminates the branch. Per-tree RNG streams are derived from the forest
// seed by tree index, so parallel and serial fits produce identical trees.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "inspl/dgi.hpp"
#include "inspl/graph.hpp"

namespace inspl {

struct LabeledMatrix {
  Matrixf x;
  std::vector<Label> y;  // Illicit or Licit only

  std::size_t rows() const { return y.size(); }
};

// Raw feature block (none / 94 local / all 166) concatenated with the 128
// embedding columns; rows with Unknown labels are dropped.
inline LabeledMatrix assemble_features(const TransactionGraph& g,
                                       const EmbeddingTable& embeddings,
                                       Scenario scenario) {
  require(embeddings.embeddings.rows() == g.num_nodes() &&
              embeddings.node_ids == g.node_ids,
          ErrorCode::Misalignment, "assemble_features: embeddings not aligned");
  const std::size_t raw_cols = scenario == Scenario::DNE      ? 0
                               : scenario == Scenario::LF_DNE ? kLfWidth
                                                              : kAfWidth;
  require(g.feature_dim() >= raw_cols, ErrorCode::InsufficientColumns,
          "assemble_features: dataset has " + std::to_string(g.feature_dim()) +
              " feature columns");
  const std::size_t emb_cols = embeddings.embeddings.cols();

  std::size_t labeled = 0;
  for (Label l : g.labels)
    if (l != Label::Unknown) ++labeled;

  LabeledMatrix out;
  out.x = Matrixf(labeled, raw_cols + emb_cols);
  out.y.reserve(labeled);
  std::size_t r = 0;
  for (std::size_t i = 0; i < g.num_nodes(); ++i) {
    if (g.labels[i] == Label::Unknown) continue;
    float* dst = out.x.row(r);
    const float* raw = g.features.row(i);
    std::copy(raw, raw + raw_cols, dst);
    const float* emb = embeddings.embeddings.row(i);
    std::copy(emb, emb + emb_cols, dst + raw_cols);
    out.y.push_back(g.labels[i]);
    ++r;
  }
  return out;
}

struct TreeNode {
  std::int32_t feature_index = -1;  // -1 marks a leaf
  float threshold = 0.0f;
  std::int32_t left = -1;
  std::int32_t right = -1;
  std::uint64_t count_illicit = 0;  // leaf sample counts
  std::uint64_t count_licit = 0;

  bool is_leaf() const { return feature_index < 0; }
};

struct Tree {
  std::vector<TreeNode> nodes;  // preorder, root at 0

  // Leaf illicit fraction for one sample.
  double leaf_fraction(const float* row) const {
    std::size_t idx = 0;
    while (!nodes[idx].is_leaf()) {
      const TreeNode& n = nodes[idx];
      idx = row[n.feature_index] <= n.threshold
                ? static_cast<std::size_t>(n.left)
                : static_cast<std::size_t>(n.right);
    }
    const TreeNode& leaf = nodes[idx];
    return static_cast<double>(leaf.count_illicit) /
           static_cast<double>(leaf.count_illicit + leaf.count_licit);
  }
};

struct ForestConfig {
  std::size_t num_trees = 100;
  std::uint64_t seed = 1;
  bool bootstrap = true;     // off only for single-tree property tests
  std::size_t max_depth = 0; // 0 = grow until pure
};

struct ForestModel {
  std::vector<Tree> trees;
  std::size_t num_features_total = 0;
  std::size_t features_per_split = 0;
  std::uint64_t seed = 0;
  bool degenerate = false;  // trained on a single class
};

namespace detail {

struct SplitChoice {
  double decrease = 0.0;
  std::size_t feature = 0;
  float threshold = 0.0f;
  bool valid = false;
};

inline double gini(std::uint64_t illicit, std::uint64_t licit) {
  const double n = static_cast<double>(illicit + licit);
  if (n == 0.0) return 0.0;
  const double pi = static_cast<double>(illicit) / n;
  const double pl = static_cast<double>(licit) / n;
  return 1.0 - pi * pi - pl * pl;
}

// Best threshold on one feature: sort the node's samples by value and scan
// the boundaries between distinct values.
inline void best_split_on_feature(const Matrixf& x, const std::vector<Label>& y,
                                  const std::vector<std::uint32_t>& idx,
                                  std::size_t feature, double parent_gini,
                                  std::uint64_t total_illicit,
                                  std::uint64_t total_licit,
                                  SplitChoice& best) {
  thread_local std::vector<std::pair<float, Label>> order;
  order.clear();
  order.reserve(idx.size());
  for (std::uint32_t i : idx) order.emplace_back(x(i, feature), y[i]);
  std::sort(order.begin(), order.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  if (order.front().first == order.back().first) return;  // constant feature

  const double n = static_cast<double>(idx.size());
  std::uint64_t left_illicit = 0, left_licit = 0;
  for (std::size_t k = 0; k + 1 < order.size(); ++k) {
    if (order[k].second == Label::Illicit) ++left_illicit;
    else ++left_licit;
    if (order[k].first == order[k + 1].first) continue;
    const std::uint64_t right_illicit = total_illicit - left_illicit;
    const std::uint64_t right_licit = total_licit - left_licit;
    const double nl = static_cast<double>(left_illicit + left_licit);
    const double nr = n - nl;
    const double child =
        (nl / n) * gini(left_illicit, left_licit) +
        (nr / n) * gini(right_illicit, right_licit);
    const double decrease = parent_gini - child;
    if (!best.valid || decrease > best.decrease) {
      best.valid = true;
      best.decrease = decrease;
      best.feature = feature;
      // midpoint between the two distinct values
      best.threshold = order[k].first +
                       (order[k + 1].first - order[k].first) / 2.0f;
      // guard against midpoint rounding up to the right value
      if (best.threshold >= order[k + 1].first) best.threshold = order[k].first;
    }
  }
}

inline void grow_tree(const Matrixf& x, const std::vector<Label>& y,
                      std::vector<std::uint32_t>& idx, std::size_t depth,
                      const ForestConfig& config, std::size_t features_per_split,
                      Rng& rng, std::vector<std::uint32_t>& feature_pool,
                      Tree& tree) {
  std::uint64_t illicit = 0, licit = 0;
  for (std::uint32_t i : idx) {
    if (y[i] == Label::Illicit) ++illicit;
    else ++licit;
  }

  const std::size_t node_index = tree.nodes.size();
  tree.nodes.emplace_back();

  const bool pure = illicit == 0 || licit == 0;
  const bool too_small = idx.size() < 2;
  const bool depth_capped = config.max_depth > 0 && depth >= config.max_depth;
  SplitChoice best;
  if (!pure && !too_small && !depth_capped) {
    const double parent = gini(illicit, licit);
    // partial Fisher-Yates: the first `features_per_split` entries become
    // the candidate features, sampled without replacement
    for (std::size_t k = 0; k < features_per_split; ++k) {
      const std::size_t j =
          k + static_cast<std::size_t>(rng.next_below(feature_pool.size() - k));
      std::swap(feature_pool[k], feature_pool[j]);
      best_split_on_feature(x, y, idx, feature_pool[k], parent, illicit, licit,
                            best);
    }
  }

  if (!best.valid || best.decrease <= 0.0) {
    TreeNode& leaf = tree.nodes[node_index];
    leaf.count_illicit = illicit;
    leaf.count_licit = licit;
    return;
  }

  std::vector<std::uint32_t> left_idx, right_idx;
  left_idx.reserve(idx.size());
  for (std::uint32_t i : idx) {
    if (x(i, best.feature) <= best.threshold) left_idx.push_back(i);
    else right_idx.push_back(i);
  }
  idx.clear();
  idx.shrink_to_fit();

  tree.nodes[node_index].feature_index = static_cast<std::int32_t>(best.feature);
  tree.nodes[node_index].threshold = best.threshold;
  tree.nodes[node_index].left = static_cast<std::int32_t>(tree.nodes.size());
  grow_tree(x, y, left_idx, depth + 1, config, features_per_split, rng,
            feature_pool, tree);
  tree.nodes[node_index].right = static_cast<std::int32_t>(tree.nodes.size());
  grow_tree(x, y, right_idx, depth + 1, config, features_per_split, rng,
            feature_pool, tree);
}

}  // namespace detail

inline ForestModel fit_forest(const LabeledMatrix& data,
                              const ForestConfig& config = {}) {
  require(data.rows() >= 1, ErrorCode::EmptyTrainingSet, "fit_forest");
  require(data.x.rows() == data.rows(), ErrorCode::ShapeMismatch,
          "fit_forest: label count");
  require(config.num_trees >= 1, ErrorCode::BadConfig, "fit_forest: num_trees");
  for (Label l : data.y)
    require(l != Label::Unknown, ErrorCode::Internal,
            "fit_forest: Unknown label reached the classifier");

  ForestModel model;
  model.num_features_total = data.x.cols();
  model.features_per_split = static_cast<std::size_t>(
      std::ceil(std::sqrt(static_cast<double>(data.x.cols()))));
  model.seed = config.seed;
  model.trees.resize(config.num_trees);

  bool has_illicit = false, has_licit = false;
  for (Label l : data.y)
    (l == Label::Illicit ? has_illicit : has_licit) = true;
  model.degenerate = !(has_illicit && has_licit);

  const std::size_t n = data.rows();
  parallel_for(config.num_trees, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t t = lo; t < hi; ++t) {
      Rng rng(derive_seed(config.seed, "tree", t));
      std::vector<std::uint32_t> idx(n);
      if (config.bootstrap) {
        for (auto& i : idx) i = static_cast<std::uint32_t>(rng.next_below(n));
      } else {
        std::iota(idx.begin(), idx.end(), 0u);
      }
      std::vector<std::uint32_t> feature_pool(data.x.cols());
      std::iota(feature_pool.begin(), feature_pool.end(), 0u);
      detail::grow_tree(data.x, data.y, idx, 0, config,
                        model.features_per_split, rng, feature_pool,
                        model.trees[t]);
    }
  }, 1);
  return model;
}

// Mean over trees of the leaf illicit fraction.
inline std::vector<double> predict_proba(const ForestModel& model,
                                         const Matrixf& x) {
  require(x.cols() == model.num_features_total, ErrorCode::ShapeMismatch,
          "predict_proba: " + std::to_string(x.cols()) + " columns, model has " +
              std::to_string(model.num_features_total));
  std::vector<double> proba(x.rows(), 0.0);
  parallel_for(x.rows(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      double acc = 0.0;
      for (const Tree& t : model.trees) acc += t.leaf_fraction(x.row(i));
      proba[i] = acc / static_cast<double>(model.trees.size());
    }
  });
  return proba;
}

// Illicit iff probability >= 0.5; an exact tie alarms.
inline std::vector<Label> predict(const ForestModel& model, const Matrixf& x) {
  const auto proba = predict_proba(model, x);
  std::vector<Label> labels(proba.size());
  for (std::size_t i = 0; i < proba.size(); ++i)
    labels[i] = proba[i] >= 0.5 ? Label::Illicit : Label::Licit;
  return labels;
}

// ---------------------------------------------------------------------------
// artifact io: magic, forest header, then each tree in preorder with
// explicit leaf markers.

inline void save_forest(const std::string& path, const ForestModel& model) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorCode::IoError, "cannot write " + path);
  out.write(kForestMagic.data(), kForestMagic.size());
  detail::write_u32(out, static_cast<std::uint32_t>(model.trees.size()));
  detail::write_u32(out, static_cast<std::uint32_t>(model.num_features_total));
  detail::write_u32(out, static_cast<std::uint32_t>(model.features_per_split));
  detail::write_u64(out, model.seed);
  out.put(model.degenerate ? '\1' : '\0');
  for (const Tree& tree : model.trees) {
    detail::write_u32(out, static_cast<std::uint32_t>(tree.nodes.size()));
    for (const TreeNode& n : tree.nodes) {
      if (n.is_leaf()) {
        out.put('\1');
        detail::write_u64(out, n.count_illicit);
        detail::write_u64(out, n.count_licit);
      } else {
        out.put('\0');
        detail::write_u32(out, static_cast<std::uint32_t>(n.feature_index));
        detail::write_f32(out, n.threshold);
        detail::write_u32(out, static_cast<std::uint32_t>(n.left));
        detail::write_u32(out, static_cast<std::uint32_t>(n.right));
      }
    }
  }
  require(out.good(), ErrorCode::IoError, "short write to " + path);
}

inline ForestModel load_forest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::IoError, "cannot open " + path);
  detail::check_magic(in, kForestMagic, path);
  ForestModel model;
  const std::uint32_t num_trees = detail::read_u32_or_fail(in, path);
  model.num_features_total = detail::read_u32_or_fail(in, path);
  model.features_per_split = detail::read_u32_or_fail(in, path);
  model.seed = detail::read_u64_or_fail(in, path);
  const int degenerate = in.get();
  require(degenerate == 0 || degenerate == 1, ErrorCode::VersionMismatch,
          path + ": bad header");
  model.degenerate = degenerate == 1;
  model.trees.resize(num_trees);
  for (Tree& tree : model.trees) {
    const std::uint32_t count = detail::read_u32_or_fail(in, path);
    tree.nodes.resize(count);
    for (TreeNode& n : tree.nodes) {
      const int marker = in.get();
      require(marker == 0 || marker == 1, ErrorCode::VersionMismatch,
              path + ": bad node marker");
      if (marker == 1) {
        n.feature_index = -1;
        n.count_illicit = detail::read_u64_or_fail(in, path);
        n.count_licit = detail::read_u64_or_fail(in, path);
      } else {
        n.feature_index =
            static_cast<std::int32_t>(detail::read_u32_or_fail(in, path));
        n.threshold = detail::read_f32_or_fail(in, path);
        n.left = static_cast<std::int32_t>(detail::read_u32_or_fail(in, path));
        n.right = static_cast<std::int32_t>(detail::read_u32_or_fail(in, path));
        require(n.feature_index >= 0 &&
                    static_cast<std::size_t>(n.feature_index) <
                        model.num_features_total &&
                    n.left > 0 && n.right > 0 &&
                    static_cast<std::uint32_t>(n.left) < count &&
                    static_cast<std::uint32_t>(n.right) < count,
                ErrorCode::VersionMismatch, path + ": corrupt tree node");
      }
    }
  }
  return model;
}

}  // namespace inspl
