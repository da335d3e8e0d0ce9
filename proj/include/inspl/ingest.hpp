#pragma once
// Dataset ingestion: the Elliptic CSV triplet, deterministic synthetic
// datasets for tests, and fixture re-serialization.
//
// Elliptic formats:
//   features: no header, 167 numeric columns `txId, timeStep, f1..f165`
//   classes:  header `txId,class`, class in {"1", "2", "unknown"}
//   edges:    header `txId1,txId2`
// The time step is retained as the first of the 166 feature columns, so the
// 94-column local view includes it. Feature values are used as shipped; no
// normalization.

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "inspl/graph.hpp"
#include "inspl/rng.hpp"

namespace inspl {

struct EllipticPaths {
  std::string features_path;
  std::string classes_path;
  std::string edgelist_path;
};

struct SynthSpec {
  std::size_t num_timesteps = 5;
  std::size_t nodes_per_step = 100;
  std::size_t feature_dim = kAfWidth;
  double illicit_fraction = 0.1;
  double edge_density = 0.02;
  double unknown_fraction = 0.0;  // fraction of nodes whose label is hidden
  std::uint64_t seed = 1;

  void validate() const {
    require(num_timesteps >= 1, ErrorCode::BadConfig, "synth: num_timesteps");
    require(nodes_per_step >= 1, ErrorCode::BadConfig, "synth: nodes_per_step");
    require(feature_dim >= 1, ErrorCode::BadConfig, "synth: feature_dim");
    require(illicit_fraction >= 0.0 && illicit_fraction <= 1.0,
            ErrorCode::BadConfig, "synth: illicit_fraction");
    require(unknown_fraction >= 0.0 && unknown_fraction <= 1.0,
            ErrorCode::BadConfig, "synth: unknown_fraction");
    require(edge_density >= 0.0 && edge_density <= 1.0, ErrorCode::BadConfig,
            "synth: edge_density");
  }
};

namespace detail {

// Splits one CSV line in place. Plain decimal fields, no quoting; a trailing
// '\r' (CRLF input) is stripped.
inline void split_csv(std::string_view line, std::vector<std::string_view>& out) {
  out.clear();
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

inline std::uint64_t parse_u64(std::string_view s, const std::string& ctx) {
  std::uint64_t v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  require(ec == std::errc() && p == s.data() + s.size(),
          ErrorCode::MalformedRow, ctx + ": bad integer '" + std::string(s) + "'");
  return v;
}

inline double parse_double(std::string_view s, const std::string& ctx) {
  double v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  require(ec == std::errc() && p == s.data() + s.size(),
          ErrorCode::MalformedRow, ctx + ": bad number '" + std::string(s) + "'");
  return v;
}

inline std::ifstream open_or_fail(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::IoError, "cannot open " + path);
  return in;
}

inline std::string line_ctx(const std::string& path, std::size_t line_no) {
  return path + ":" + std::to_string(line_no);
}

// 6 significant digits, the pinned precision of all CSV float output.
inline std::string fmt_float(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace detail

inline TemporalDataset load_elliptic(const EllipticPaths& paths) {
  constexpr std::size_t kRawCols = 167;  // txId + timeStep + 165 features

  struct Bucket {
    std::vector<NodeId> ids;
    std::vector<float> feat;  // row-major, kAfWidth per node
    std::vector<Label> labels;
  };
  std::map<int, Bucket> buckets;               // keyed by time step
  std::unordered_map<NodeId, int> node_step;   // txId -> time step

  // features file: defines the node universe and per-step ordering
  {
    auto in = detail::open_or_fail(paths.features_path);
    std::string line;
    std::vector<std::string_view> fields;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
      const auto ctx = detail::line_ctx(paths.features_path, line_no);
      detail::split_csv(line, fields);
      require(fields.size() == kRawCols, ErrorCode::MalformedRow,
              ctx + ": expected " + std::to_string(kRawCols) + " columns, got " +
                  std::to_string(fields.size()));
      const NodeId id = detail::parse_u64(fields[0], ctx);
      const double step_val = detail::parse_double(fields[1], ctx);
      const int step = static_cast<int>(step_val);
      require(static_cast<double>(step) == step_val && step >= 1,
              ErrorCode::MalformedRow, ctx + ": bad time step");
      require(node_step.emplace(id, step).second, ErrorCode::DuplicateTxId,
              ctx + ": txId " + std::to_string(id));
      auto& b = buckets[step];
      b.ids.push_back(id);
      b.labels.push_back(Label::Unknown);
      b.feat.push_back(static_cast<float>(step_val));
      for (std::size_t j = 2; j < kRawCols; ++j)
        b.feat.push_back(static_cast<float>(detail::parse_double(fields[j], ctx)));
    }
  }

  // classes file: per-node labels; nodes without a row stay Unknown
  {
    std::unordered_map<NodeId, Label> label_of;
    auto in = detail::open_or_fail(paths.classes_path);
    std::string line;
    std::vector<std::string_view> fields;
    std::size_t line_no = 0;
    bool header = true;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
      if (header) {
        header = false;
        continue;
      }
      const auto ctx = detail::line_ctx(paths.classes_path, line_no);
      detail::split_csv(line, fields);
      require(fields.size() == 2, ErrorCode::MalformedRow,
              ctx + ": expected 2 columns");
      const NodeId id = detail::parse_u64(fields[0], ctx);
      Label label;
      if (fields[1] == "1") label = Label::Illicit;
      else if (fields[1] == "2") label = Label::Licit;
      else if (fields[1] == "unknown") label = Label::Unknown;
      else fail(ErrorCode::UnknownClassToken,
                ctx + ": class '" + std::string(fields[1]) + "'");
      require(node_step.count(id) > 0, ErrorCode::MalformedRow,
              ctx + ": txId " + std::to_string(id) + " not in features file");
      require(label_of.emplace(id, label).second, ErrorCode::DuplicateTxId,
              ctx + ": txId " + std::to_string(id));
    }
    for (auto& [step, b] : buckets)
      for (std::size_t i = 0; i < b.ids.size(); ++i) {
        const auto it = label_of.find(b.ids[i]);
        if (it != label_of.end()) b.labels[i] = it->second;
      }
  }

  // edge list: grouped per step; crossing edges are corrupt input
  std::map<int, std::vector<std::pair<NodeId, NodeId>>> edges;
  {
    auto in = detail::open_or_fail(paths.edgelist_path);
    std::string line;
    std::vector<std::string_view> fields;
    std::size_t line_no = 0;
    bool header = true;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
      if (header) {
        header = false;
        continue;
      }
      const auto ctx = detail::line_ctx(paths.edgelist_path, line_no);
      detail::split_csv(line, fields);
      require(fields.size() == 2, ErrorCode::MalformedRow,
              ctx + ": expected 2 columns");
      const NodeId a = detail::parse_u64(fields[0], ctx);
      const NodeId b = detail::parse_u64(fields[1], ctx);
      const auto ia = node_step.find(a);
      require(ia != node_step.end(), ErrorCode::UnknownEndpoint,
              ctx + ": txId " + std::to_string(a) + " not in features file");
      const auto ib = node_step.find(b);
      require(ib != node_step.end(), ErrorCode::UnknownEndpoint,
              ctx + ": txId " + std::to_string(b) + " not in features file");
      require(ia->second == ib->second, ErrorCode::CrossTimestepEdge,
              ctx + ": steps " + std::to_string(ia->second) + " and " +
                  std::to_string(ib->second));
      edges[ia->second].emplace_back(a, b);
    }
  }

  TemporalDataset ds;
  ds.feature_dim = kAfWidth;
  for (auto& [step, b] : buckets) {
    Matrixf features(b.ids.size(), kAfWidth);
    std::copy(b.feat.begin(), b.feat.end(), features.data());
    auto it = edges.find(step);
    static const std::vector<std::pair<NodeId, NodeId>> kNoEdges;
    ds.graphs.push_back(std::make_shared<TransactionGraph>(
        build_graph(step, std::move(b.ids),
                    it == edges.end() ? kNoEdges : it->second,
                    std::move(features), std::move(b.labels))));
  }
  ds.validate();
  return ds;
}

// Deterministic synthetic dataset with a planted class signal: features are
// standard normal, column 0 carries the time step (mirroring the Elliptic
// layout), and illicit nodes get a +3 shift on a quarter of the remaining
// columns. Edges are Erdos-Renyi with probability `edge_density` per pair.
inline TemporalDataset generate_synthetic(const SynthSpec& spec) {
  spec.validate();
  Rng rng(derive_seed(spec.seed, "synth"));

  constexpr float kPlantedShift = 3.0f;
  TemporalDataset ds;
  ds.feature_dim = spec.feature_dim;
  NodeId next_id = 1;
  for (std::size_t t = 1; t <= spec.num_timesteps; ++t) {
    const std::size_t n = spec.nodes_per_step;
    std::vector<NodeId> ids(n);
    std::vector<Label> labels(n);
    Matrixf features(n, spec.feature_dim);
    for (std::size_t i = 0; i < n; ++i) {
      ids[i] = next_id++;
      const bool illicit = rng.next_bernoulli(spec.illicit_fraction);
      float* row = features.row(i);
      row[0] = static_cast<float>(t);
      for (std::size_t j = 1; j < spec.feature_dim; ++j) {
        row[j] = static_cast<float>(rng.next_normal());
        if (illicit && (j - 1) % 4 == 0) row[j] += kPlantedShift;
      }
      labels[i] = illicit ? Label::Illicit : Label::Licit;
      if (spec.unknown_fraction > 0.0 &&
          rng.next_bernoulli(spec.unknown_fraction))
        labels[i] = Label::Unknown;
    }
    std::vector<std::pair<NodeId, NodeId>> edge_list;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (rng.next_bernoulli(spec.edge_density))
          edge_list.emplace_back(ids[i], ids[j]);
    ds.graphs.push_back(std::make_shared<TransactionGraph>(
        build_graph(static_cast<int>(t), std::move(ids), edge_list,
                    std::move(features), std::move(labels))));
  }
  ds.validate();
  return ds;
}

// Writes one `t<step>/nodes.csv` + `t<step>/edges.csv` pair per graph, for
// building test fixtures. Labels use the Elliptic class tokens.
inline void export_dataset(const TemporalDataset& ds, const std::string& dir) {
  namespace fs = std::filesystem;
  for (const auto& g : ds.graphs) {
    const fs::path sub = fs::path(dir) / ("t" + std::to_string(g->time_step));
    fs::create_directories(sub);
    {
      std::ofstream out(sub / "nodes.csv", std::ios::binary);
      require(out.good(), ErrorCode::IoError, "export: " + sub.string());
      out << "txId,label";
      for (std::size_t j = 1; j <= g->feature_dim(); ++j) out << ",f" << j;
      out << "\n";
      for (std::size_t i = 0; i < g->num_nodes(); ++i) {
        const char* token = g->labels[i] == Label::Illicit  ? "1"
                            : g->labels[i] == Label::Licit ? "2"
                                                           : "unknown";
        out << g->node_ids[i] << ',' << token;
        const float* row = g->features.row(i);
        for (std::size_t j = 0; j < g->feature_dim(); ++j)
          out << ',' << detail::fmt_float(row[j]);
        out << "\n";
      }
    }
    {
      std::ofstream out(sub / "edges.csv", std::ios::binary);
      require(out.good(), ErrorCode::IoError, "export: " + sub.string());
      out << "txId1,txId2\n";
      for (const auto& [i, j] : g->edges())
        out << g->node_ids[i] << ',' << g->node_ids[j] << "\n";
    }
  }
}

}  // namespace inspl
