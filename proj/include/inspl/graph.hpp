#pragma once
// Temporal transaction graphs: one immutable CSR graph per time step plus
// the dataset wrapper. Edges are undirected (payment flows are symmetrized
// at build time), deduplicated, and self-loop free; neighbor lists are
// sorted ascending.

#include <algorithm>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "inspl/common.hpp"
#include "inspl/matrix.hpp"

namespace inspl {

using NodeId = std::uint64_t;

struct TransactionGraph {
  int time_step = 0;
  std::vector<NodeId> node_ids;           // external ids, input order
  std::vector<std::uint32_t> row_offsets; // CSR, length num_nodes + 1
  std::vector<std::uint32_t> col_indices; // sorted per row, no self loops
  Matrixf features;                       // num_nodes x feature_dim
  std::vector<Label> labels;

  std::size_t num_nodes() const { return node_ids.size(); }
  std::size_t num_undirected_edges() const { return col_indices.size() / 2; }
  std::size_t feature_dim() const { return features.cols(); }

  std::span<const std::uint32_t> neighbors(std::size_t v) const {
    require(v < num_nodes(), ErrorCode::IndexOutOfRange,
            "neighbors: node " + std::to_string(v) + " of " +
                std::to_string(num_nodes()));
    return {col_indices.data() + row_offsets[v],
            col_indices.data() + row_offsets[v + 1]};
  }

  std::size_t degree(std::size_t v) const { return neighbors(v).size(); }

  // Each undirected edge once, as (i, j) with i < j, in CSR order.
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges() const {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> out;
    out.reserve(num_undirected_edges());
    for (std::uint32_t i = 0; i < num_nodes(); ++i)
      for (std::uint32_t k = row_offsets[i]; k < row_offsets[i + 1]; ++k)
        if (i < col_indices[k]) out.emplace_back(i, col_indices[k]);
    return out;
  }
};

// Symmetrizes, deduplicates, drops self-loops, and checks shapes. Node order
// follows the input id order.
inline TransactionGraph build_graph(
    int time_step, std::vector<NodeId> node_ids,
    const std::vector<std::pair<NodeId, NodeId>>& edge_list, Matrixf features,
    std::vector<Label> labels) {
  const std::size_t n = node_ids.size();
  require(features.rows() == n, ErrorCode::ShapeMismatch,
          "build_graph: " + std::to_string(features.rows()) +
              " feature rows for " + std::to_string(n) + " nodes");
  require(labels.size() == n, ErrorCode::ShapeMismatch,
          "build_graph: label count");
  require(features.all_finite(), ErrorCode::Internal,
          "build_graph: non-finite feature");

  std::unordered_map<NodeId, std::uint32_t> index;
  index.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    auto [it, inserted] = index.emplace(node_ids[i], i);
    require(inserted, ErrorCode::DuplicateTxId,
            "build_graph: duplicate node id " + std::to_string(node_ids[i]));
  }

  // both directions of every edge, then sort + unique per row
  std::vector<std::vector<std::uint32_t>> adj(n);
  for (const auto& [a, b] : edge_list) {
    const auto ia = index.find(a);
    require(ia != index.end(), ErrorCode::UnknownEndpoint,
            "build_graph: edge endpoint " + std::to_string(a));
    const auto ib = index.find(b);
    require(ib != index.end(), ErrorCode::UnknownEndpoint,
            "build_graph: edge endpoint " + std::to_string(b));
    if (ia->second == ib->second) continue;  // self-loop
    adj[ia->second].push_back(ib->second);
    adj[ib->second].push_back(ia->second);
  }

  TransactionGraph g;
  g.time_step = time_step;
  g.node_ids = std::move(node_ids);
  g.features = std::move(features);
  g.labels = std::move(labels);
  g.row_offsets.assign(n + 1, 0);
  std::size_t total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    auto& nb = adj[i];
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
    total += nb.size();
  }
  g.col_indices.reserve(total);
  for (std::size_t i = 0; i < n; ++i) {
    g.row_offsets[i + 1] =
        g.row_offsets[i] + static_cast<std::uint32_t>(adj[i].size());
    g.col_indices.insert(g.col_indices.end(), adj[i].begin(), adj[i].end());
  }
  return g;
}

// Selected feature columns for a view; AF needs 166 columns, LF 94.
inline Matrixf select_features(const TransactionGraph& g, FeatureView view) {
  const std::size_t want = static_cast<std::size_t>(view_width(view));
  require(g.feature_dim() >= want, ErrorCode::InsufficientColumns,
          "select_features: need " + std::to_string(want) + " columns, have " +
              std::to_string(g.feature_dim()));
  if (g.feature_dim() == want) return g.features;
  Matrixf out(g.num_nodes(), want);
  for (std::size_t i = 0; i < g.num_nodes(); ++i) {
    const float* src = g.features.row(i);
    std::copy(src, src + want, out.row(i));
  }
  return out;
}

// Graphs are immutable once built, so the dataset shares them; splits alias
// the same graph objects instead of copying feature matrices.
using GraphPtr = std::shared_ptr<const TransactionGraph>;

struct TemporalDataset {
  std::vector<GraphPtr> graphs;  // ascending time_step
  std::size_t feature_dim = 0;

  std::size_t num_graphs() const { return graphs.size(); }
  std::size_t total_nodes() const {
    std::size_t n = 0;
    for (const auto& g : graphs) n += g->num_nodes();
    return n;
  }
  std::size_t total_undirected_edges() const {
    std::size_t n = 0;
    for (const auto& g : graphs) n += g->num_undirected_edges();
    return n;
  }

  void validate() const {
    std::unordered_set<NodeId> seen;
    int prev_step = INT32_MIN;
    for (const auto& g : graphs) {
      require(g->time_step > prev_step, ErrorCode::Internal,
              "dataset: time steps not strictly increasing");
      prev_step = g->time_step;
      require(g->feature_dim() == feature_dim, ErrorCode::ShapeMismatch,
              "dataset: feature_dim mismatch at step " +
                  std::to_string(g->time_step));
      for (NodeId id : g->node_ids)
        require(seen.insert(id).second, ErrorCode::DuplicateTxId,
                "dataset: node id " + std::to_string(id) +
                    " appears in more than one graph");
    }
  }
};

// First `train_count` graphs in time order vs the rest; the split aliases
// the original graph objects.
inline std::pair<TemporalDataset, TemporalDataset> split_temporal(
    const TemporalDataset& ds, std::size_t train_count) {
  require(train_count > 0 && train_count < ds.num_graphs(),
          ErrorCode::BadSplit,
          "split_temporal: train_count " + std::to_string(train_count) +
              " of " + std::to_string(ds.num_graphs()) + " graphs");
  TemporalDataset train, test;
  train.feature_dim = test.feature_dim = ds.feature_dim;
  train.graphs.assign(ds.graphs.begin(), ds.graphs.begin() + train_count);
  test.graphs.assign(ds.graphs.begin() + train_count, ds.graphs.end());
  return {std::move(train), std::move(test)};
}

}  // namespace inspl
