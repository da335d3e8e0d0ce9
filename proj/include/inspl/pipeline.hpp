#pragma once
// Staged pipeline: validate -> train-dgi -> embed -> train-rf -> evaluate,
// plus synthetic-dataset export. Stages communicate only through artifact
// files in the output directory, so `pipeline` equals running the stages by
// hand with the same config. One global seed drives every stage through
// derived streams.
//
// Artifacts, all under out_dir:
//   resolved_config.txt        frozen key=value copy of the effective config
//   encoder.inspl              trained encoder (binary tensor container)
//   dgi_loss.csv               graph,epoch,loss
//   embeddings/t<step>.csv     txId,e0..e127 per graph
//   forest.inspf               trained random forest
//   report.csv                 metric,value
//   per_timestep_f1.csv        time_step,f1
//   confusion.csv              tp,fp,fn,tn

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "inspl/dgi.hpp"
#include "inspl/forest.hpp"
#include "inspl/ingest.hpp"
#include "inspl/metrics.hpp"

namespace inspl {

struct PipelineConfig {
  // data source: the Elliptic triplet when all three paths are set,
  // otherwise the synthetic spec
  std::string features_csv;
  std::string classes_csv;
  std::string edges_csv;
  SynthSpec synth;

  FeatureView view = FeatureView::AF;  // encoder input columns
  Scenario scenario = Scenario::AF_DNE;
  int epochs = 300;
  double learning_rate = 1e-4;
  EpsMode eps_mode = EpsMode::Fixed0;
  std::size_t forest_trees = 100;
  std::uint64_t seed = 1;
  std::size_t train_count = 34;
  std::string out_dir = "out";

  bool uses_elliptic() const {
    return !features_csv.empty() || !classes_csv.empty() || !edges_csv.empty();
  }

  DgiConfig dgi_config() const {
    DgiConfig c;
    c.epochs_per_graph = epochs;
    c.learning_rate = learning_rate;
    c.seed = seed;
    c.eps_mode = eps_mode;
    return c;
  }
};

namespace detail {

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return std::string(s.substr(b, e - b));
}

inline void apply_config_kv(PipelineConfig& c, const std::string& key,
                            const std::string& value, const std::string& ctx) {
  const auto u64 = [&] { return parse_u64(value, ctx); };
  const auto dbl = [&] { return parse_double(value, ctx); };
  if (key == "features_csv") c.features_csv = value;
  else if (key == "classes_csv") c.classes_csv = value;
  else if (key == "edges_csv") c.edges_csv = value;
  else if (key == "synth.timesteps") c.synth.num_timesteps = u64();
  else if (key == "synth.nodes") c.synth.nodes_per_step = u64();
  else if (key == "synth.dim") c.synth.feature_dim = u64();
  else if (key == "synth.illicit") c.synth.illicit_fraction = dbl();
  else if (key == "synth.density") c.synth.edge_density = dbl();
  else if (key == "synth.unknown") c.synth.unknown_fraction = dbl();
  else if (key == "view") {
    if (value == "af") c.view = FeatureView::AF;
    else if (value == "lf") c.view = FeatureView::LF;
    else fail(ErrorCode::BadConfig, ctx + ": view must be af or lf");
  } else if (key == "scenario") {
    if (value == "dne") c.scenario = Scenario::DNE;
    else if (value == "lf-dne") c.scenario = Scenario::LF_DNE;
    else if (value == "af-dne") c.scenario = Scenario::AF_DNE;
    else fail(ErrorCode::BadConfig, ctx + ": scenario must be dne|lf-dne|af-dne");
  } else if (key == "epochs") {
    c.epochs = static_cast<int>(u64());
  } else if (key == "lr") {
    c.learning_rate = dbl();
  } else if (key == "eps_mode") {
    if (value == "fixed") c.eps_mode = EpsMode::Fixed0;
    else if (value == "learnable") c.eps_mode = EpsMode::Learnable;
    else fail(ErrorCode::BadConfig, ctx + ": eps_mode must be fixed|learnable");
  } else if (key == "trees") {
    c.forest_trees = u64();
  } else if (key == "seed") {
    c.seed = u64();
  } else if (key == "train_count") {
    c.train_count = u64();
  } else if (key == "out") {
    c.out_dir = value;
  } else {
    fail(ErrorCode::BadConfig, ctx + ": unknown key '" + key + "'");
  }
}

}  // namespace detail

// Flat key=value file; '#' starts a comment.
inline PipelineConfig load_config(const std::string& path) {
  auto in = detail::open_or_fail(path);
  PipelineConfig config;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const std::string trimmed = detail::trim(line);
    if (trimmed.empty()) continue;
    const auto eq = trimmed.find('=');
    const std::string ctx = detail::line_ctx(path, line_no);
    require(eq != std::string::npos, ErrorCode::BadConfig,
            ctx + ": expected key=value");
    detail::apply_config_kv(config, detail::trim(trimmed.substr(0, eq)),
                            detail::trim(trimmed.substr(eq + 1)), ctx);
  }
  return config;
}

inline void write_resolved_config(const PipelineConfig& c) {
  namespace fs = std::filesystem;
  fs::create_directories(c.out_dir);
  std::ofstream out(fs::path(c.out_dir) / "resolved_config.txt",
                    std::ios::binary);
  require(out.good(), ErrorCode::IoError, "cannot write resolved config");
  if (c.uses_elliptic()) {
    out << "features_csv=" << c.features_csv << "\n"
        << "classes_csv=" << c.classes_csv << "\n"
        << "edges_csv=" << c.edges_csv << "\n";
  } else {
    out << "synth.timesteps=" << c.synth.num_timesteps << "\n"
        << "synth.nodes=" << c.synth.nodes_per_step << "\n"
        << "synth.dim=" << c.synth.feature_dim << "\n"
        << "synth.illicit=" << detail::fmt_float(c.synth.illicit_fraction) << "\n"
        << "synth.density=" << detail::fmt_float(c.synth.edge_density) << "\n"
        << "synth.unknown=" << detail::fmt_float(c.synth.unknown_fraction) << "\n";
  }
  out << "view=" << view_name(c.view) << "\n"
      << "scenario=" << scenario_name(c.scenario) << "\n"
      << "epochs=" << c.epochs << "\n"
      << "lr=" << detail::fmt_float(c.learning_rate) << "\n"
      << "eps_mode=" << (c.eps_mode == EpsMode::Fixed0 ? "fixed" : "learnable")
      << "\n"
      << "trees=" << c.forest_trees << "\n"
      << "seed=" << c.seed << "\n"
      << "train_count=" << c.train_count << "\n"
      << "out=" << c.out_dir << "\n";
}

inline TemporalDataset load_dataset(const PipelineConfig& c) {
  if (c.uses_elliptic()) {
    require(!c.features_csv.empty() && !c.classes_csv.empty() &&
                !c.edges_csv.empty(),
            ErrorCode::BadConfig,
            "all three Elliptic paths are required together");
    return load_elliptic({c.features_csv, c.classes_csv, c.edges_csv});
  }
  SynthSpec spec = c.synth;
  spec.seed = c.seed;
  return generate_synthetic(spec);
}

// ---------------------------------------------------------------------------
// stage: validate

struct DatasetSummary {
  std::size_t timesteps = 0;
  std::size_t nodes = 0;
  std::size_t undirected_edges = 0;
  std::size_t illicit = 0;
  std::size_t licit = 0;
  std::size_t unknown = 0;
  std::size_t feature_dim = 0;
};

inline DatasetSummary cmd_validate(const PipelineConfig& config) {
  const TemporalDataset ds = load_dataset(config);
  ds.validate();
  DatasetSummary s;
  s.timesteps = ds.num_graphs();
  s.nodes = ds.total_nodes();
  s.undirected_edges = ds.total_undirected_edges();
  s.feature_dim = ds.feature_dim;
  for (const auto& g : ds.graphs)
    for (Label l : g->labels) {
      if (l == Label::Illicit) ++s.illicit;
      else if (l == Label::Licit) ++s.licit;
      else ++s.unknown;
    }
  return s;
}

// ---------------------------------------------------------------------------
// stage: train-dgi

namespace detail {

inline std::string encoder_path(const PipelineConfig& c) {
  return (std::filesystem::path(c.out_dir) / "encoder.inspl").string();
}
inline std::string forest_path(const PipelineConfig& c) {
  return (std::filesystem::path(c.out_dir) / "forest.inspf").string();
}
inline std::string embedding_path(const PipelineConfig& c, int time_step) {
  return (std::filesystem::path(c.out_dir) / "embeddings" /
          ("t" + std::to_string(time_step) + ".csv"))
      .string();
}

}  // namespace detail

inline void cmd_train_dgi(const PipelineConfig& config) {
  write_resolved_config(config);
  const TemporalDataset ds = load_dataset(config);
  auto [train, test] = split_temporal(ds, config.train_count);
  (void)test;
  const DgiTrainResult result = train_dgi(train, config.view, config.dgi_config());
  save_dgi_model(detail::encoder_path(config), result.model);

  std::ofstream out(std::filesystem::path(config.out_dir) / "dgi_loss.csv",
                    std::ios::binary);
  require(out.good(), ErrorCode::IoError, "cannot write dgi_loss.csv");
  out << "graph,epoch,loss\n";
  for (const auto& e : result.loss_log)
    out << e.time_step << ',' << e.epoch << ','
        << detail::fmt_float(e.loss) << "\n";
}

// ---------------------------------------------------------------------------
// stage: embed

inline void cmd_embed(const PipelineConfig& config) {
  write_resolved_config(config);
  const TemporalDataset ds = load_dataset(config);
  const DgiModel model = load_dgi_model(detail::encoder_path(config));
  require(model.encoder.input_dim() ==
              static_cast<std::size_t>(view_width(config.view)),
          ErrorCode::VersionMismatch,
          "encoder artifact expects input width " +
              std::to_string(model.encoder.input_dim()) + ", view " +
              view_name(config.view) + " provides " +
              std::to_string(view_width(config.view)));
  const auto tables = embed_all(model, ds, config.view);

  namespace fs = std::filesystem;
  fs::create_directories(fs::path(config.out_dir) / "embeddings");
  for (std::size_t gi = 0; gi < ds.num_graphs(); ++gi) {
    const auto& table = tables[gi];
    std::ofstream out(detail::embedding_path(config, ds.graphs[gi]->time_step),
                      std::ios::binary);
    require(out.good(), ErrorCode::IoError, "cannot write embedding csv");
    out << "txId";
    for (std::size_t j = 0; j < kHiddenDim; ++j) out << ",e" << j;
    out << "\n";
    for (std::size_t i = 0; i < table.node_ids.size(); ++i) {
      out << table.node_ids[i];
      const float* row = table.embeddings.row(i);
      for (std::size_t j = 0; j < table.embeddings.cols(); ++j)
        out << ',' << detail::fmt_float(row[j]);
      out << "\n";
    }
  }
}

inline EmbeddingTable read_embedding_csv(const std::string& path,
                                         const TransactionGraph& g) {
  auto in = detail::open_or_fail(path);
  EmbeddingTable table;
  table.embeddings = Matrixf(g.num_nodes(), kHiddenDim);
  table.node_ids.reserve(g.num_nodes());
  std::string line;
  std::vector<std::string_view> fields;
  std::size_t line_no = 0, row = 0;
  bool header = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
    if (header) {
      header = false;
      continue;
    }
    const auto ctx = detail::line_ctx(path, line_no);
    detail::split_csv(line, fields);
    require(fields.size() == kHiddenDim + 1, ErrorCode::MalformedRow,
            ctx + ": expected " + std::to_string(kHiddenDim + 1) + " columns");
    require(row < g.num_nodes(), ErrorCode::Misalignment,
            ctx + ": more embedding rows than graph nodes");
    table.node_ids.push_back(detail::parse_u64(fields[0], ctx));
    for (std::size_t j = 0; j < kHiddenDim; ++j)
      table.embeddings(row, j) =
          static_cast<float>(detail::parse_double(fields[j + 1], ctx));
    ++row;
  }
  require(row == g.num_nodes() && table.node_ids == g.node_ids,
          ErrorCode::Misalignment, path + ": embeddings not aligned to graph");
  return table;
}

// ---------------------------------------------------------------------------
// stage: train-rf

namespace detail {

inline LabeledMatrix stack_scenario_rows(const PipelineConfig& config,
                                         const TemporalDataset& part) {
  std::vector<LabeledMatrix> pieces;
  std::size_t rows = 0, cols = 0;
  for (const auto& gp : part.graphs) {
    const EmbeddingTable table = read_embedding_csv(
        embedding_path(config, gp->time_step), *gp);
    pieces.push_back(assemble_features(*gp, table, config.scenario));
    rows += pieces.back().rows();
    cols = pieces.back().x.cols();
  }
  LabeledMatrix all;
  all.x = Matrixf(rows, cols);
  all.y.reserve(rows);
  std::size_t r = 0;
  for (const auto& piece : pieces) {
    std::copy(piece.x.raw().begin(), piece.x.raw().end(), all.x.row(r));
    all.y.insert(all.y.end(), piece.y.begin(), piece.y.end());
    r += piece.rows();
  }
  return all;
}

}  // namespace detail

inline void cmd_train_rf(const PipelineConfig& config) {
  write_resolved_config(config);
  const TemporalDataset ds = load_dataset(config);
  auto [train, test] = split_temporal(ds, config.train_count);
  (void)test;
  const LabeledMatrix data = detail::stack_scenario_rows(config, train);
  require(data.rows() > 0, ErrorCode::EmptyTrainingSet,
          "train-rf: all training labels are unknown");
  ForestConfig fc;
  fc.num_trees = config.forest_trees;
  fc.seed = derive_seed(config.seed, "forest");
  save_forest(detail::forest_path(config), fit_forest(data, fc));
}

// ---------------------------------------------------------------------------
// stage: evaluate

inline EvalReport cmd_evaluate(const PipelineConfig& config) {
  write_resolved_config(config);
  const TemporalDataset ds = load_dataset(config);
  auto [train, test] = split_temporal(ds, config.train_count);
  (void)train;
  const ForestModel forest = load_forest(detail::forest_path(config));

  std::vector<std::vector<Label>> predictions;
  std::vector<Label> pooled_truth;
  std::vector<double> pooled_scores;
  for (const auto& gp : test.graphs) {
    const EmbeddingTable table = read_embedding_csv(
        detail::embedding_path(config, gp->time_step), *gp);
    const LabeledMatrix data = assemble_features(*gp, table, config.scenario);
    const auto proba = predict_proba(forest, data.x);
    std::vector<Label> pred(proba.size());
    for (std::size_t i = 0; i < proba.size(); ++i)
      pred[i] = proba[i] >= 0.5 ? Label::Illicit : Label::Licit;
    pooled_truth.insert(pooled_truth.end(), data.y.begin(), data.y.end());
    pooled_scores.insert(pooled_scores.end(), proba.begin(), proba.end());
    predictions.push_back(std::move(pred));
  }

  EvalReport report;
  report.per_timestep = per_timestep_f1(test, predictions);
  for (const auto& entry : report.per_timestep)
    report.confusion += entry.confusion;
  report.precision = precision(report.confusion);
  report.recall = recall(report.confusion);
  report.f1 = f1(report.confusion);
  report.auc = auc(pooled_truth, pooled_scores);

  namespace fs = std::filesystem;
  {
    std::ofstream out(fs::path(config.out_dir) / "report.csv", std::ios::binary);
    require(out.good(), ErrorCode::IoError, "cannot write report.csv");
    out << "metric,value\n"
        << "precision," << detail::fmt_float(report.precision.value) << "\n"
        << "recall," << detail::fmt_float(report.recall.value) << "\n"
        << "f1," << detail::fmt_float(report.f1.value) << "\n"
        << "auc," << detail::fmt_float(report.auc) << "\n";
  }
  {
    std::ofstream out(fs::path(config.out_dir) / "per_timestep_f1.csv",
                      std::ios::binary);
    require(out.good(), ErrorCode::IoError, "cannot write per_timestep_f1.csv");
    out << "time_step,f1\n";
    for (const auto& entry : report.per_timestep)
      out << entry.time_step << ',' << detail::fmt_float(entry.f1.value) << "\n";
  }
  {
    std::ofstream out(fs::path(config.out_dir) / "confusion.csv",
                      std::ios::binary);
    require(out.good(), ErrorCode::IoError, "cannot write confusion.csv");
    out << "tp,fp,fn,tn\n"
        << report.confusion.tp << ',' << report.confusion.fp << ','
        << report.confusion.fn << ',' << report.confusion.tn << "\n";
  }
  return report;
}

// ---------------------------------------------------------------------------
// stage: synth export and the full pipeline

inline void cmd_synth(const PipelineConfig& config) {
  write_resolved_config(config);
  SynthSpec spec = config.synth;
  spec.seed = config.seed;
  export_dataset(generate_synthetic(spec),
                 (std::filesystem::path(config.out_dir) / "dataset").string());
}

// The four stages in sequence, sharing one config and one seed. Artifacts on
// disk are the only coupling, so the composition equals manual stage runs.
inline EvalReport cmd_pipeline(const PipelineConfig& config) {
  cmd_train_dgi(config);
  cmd_embed(config);
  cmd_train_rf(config);
  return cmd_evaluate(config);
}

}  // namespace inspl
