// Command-line front end for the pipeline. Verbs mirror the stages:
//   validate   load + sanity-check the dataset, print a summary
//   train-dgi  self-supervised encoder training, writes encoder + loss log
//   embed      eval-mode embeddings for every graph, one CSV per time step
//   train-rf   random forest on the training-split scenario features
//   evaluate   metrics over the test split, writes report CSVs
//   pipeline   all four stages in sequence
//   synth      export a synthetic dataset as CSV fixtures
//
// Exit codes: 0 ok, 1 input error, 2 artifact/version error, 3 internal.

#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "inspl/pipeline.hpp"

namespace {

void print_summary(const inspl::DatasetSummary& s) {
  std::printf("%zu timesteps, %zu nodes\n", s.timesteps, s.nodes);
  std::printf("undirected edges: %zu\n", s.undirected_edges);
  std::printf("feature columns: %zu\n", s.feature_dim);
  const double total = static_cast<double>(s.illicit + s.licit + s.unknown);
  std::printf("labels: %zu illicit (%.1f%%), %zu licit (%.1f%%), %zu unknown\n",
              s.illicit, 100.0 * static_cast<double>(s.illicit) / total,
              s.licit, 100.0 * static_cast<double>(s.licit) / total,
              s.unknown);
}

void print_report(const inspl::EvalReport& r) {
  std::printf("precision: %.4f%s\n", r.precision.value,
              r.precision.degenerate ? " (degenerate)" : "");
  std::printf("recall:    %.4f%s\n", r.recall.value,
              r.recall.degenerate ? " (degenerate)" : "");
  std::printf("f1:        %.4f%s\n", r.f1.value,
              r.f1.degenerate ? " (degenerate)" : "");
  std::printf("auc:       %.4f\n", r.auc);
  std::printf("confusion: tp=%llu fp=%llu fn=%llu tn=%llu\n",
              static_cast<unsigned long long>(r.confusion.tp),
              static_cast<unsigned long long>(r.confusion.fp),
              static_cast<unsigned long long>(r.confusion.fn),
              static_cast<unsigned long long>(r.confusion.tn));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-supervised graph embeddings + random forest for "
               "illicit-transaction detection"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::string scenario_arg;
  std::string view_arg;
  std::string out_arg;
  std::uint64_t seed_arg = 0;
  int epochs_arg = -1;
  app.add_option("--config", config_path, "key=value config file");
  app.add_option("--seed", seed_arg, "global 64-bit seed");
  app.add_option("--scenario", scenario_arg, "dne | lf-dne | af-dne");
  app.add_option("--view", view_arg, "af | lf (encoder input columns)");
  app.add_option("--epochs", epochs_arg, "DGI epochs per graph");
  app.add_option("--out", out_arg, "output directory");

  auto* cmd_validate = app.add_subcommand("validate", "check the dataset");
  auto* cmd_train_dgi = app.add_subcommand("train-dgi", "train the encoder");
  auto* cmd_embed = app.add_subcommand("embed", "write embedding CSVs");
  auto* cmd_train_rf = app.add_subcommand("train-rf", "train the forest");
  auto* cmd_evaluate = app.add_subcommand("evaluate", "write metric reports");
  auto* cmd_pipeline = app.add_subcommand("pipeline", "run all stages");
  auto* cmd_synth = app.add_subcommand("synth", "export a synthetic dataset");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    inspl::PipelineConfig config;
    if (!config_path.empty()) config = inspl::load_config(config_path);
    if (app.count("--seed") > 0) config.seed = seed_arg;
    if (app.count("--epochs") > 0) config.epochs = epochs_arg;
    if (!out_arg.empty()) config.out_dir = out_arg;
    if (!view_arg.empty()) {
      if (view_arg == "af") config.view = inspl::FeatureView::AF;
      else if (view_arg == "lf") config.view = inspl::FeatureView::LF;
      else inspl::fail(inspl::ErrorCode::BadConfig, "--view must be af or lf");
    }
    if (!scenario_arg.empty()) {
      if (scenario_arg == "dne") config.scenario = inspl::Scenario::DNE;
      else if (scenario_arg == "lf-dne") config.scenario = inspl::Scenario::LF_DNE;
      else if (scenario_arg == "af-dne") config.scenario = inspl::Scenario::AF_DNE;
      else inspl::fail(inspl::ErrorCode::BadConfig,
                       "--scenario must be dne, lf-dne or af-dne");
    }

    if (cmd_validate->parsed()) {
      print_summary(inspl::cmd_validate(config));
    } else if (cmd_train_dgi->parsed()) {
      inspl::cmd_train_dgi(config);
      std::printf("encoder written to %s\n", config.out_dir.c_str());
    } else if (cmd_embed->parsed()) {
      inspl::cmd_embed(config);
      std::printf("embeddings written to %s/embeddings\n", config.out_dir.c_str());
    } else if (cmd_train_rf->parsed()) {
      inspl::cmd_train_rf(config);
      std::printf("forest written to %s\n", config.out_dir.c_str());
    } else if (cmd_evaluate->parsed()) {
      print_report(inspl::cmd_evaluate(config));
    } else if (cmd_pipeline->parsed()) {
      print_report(inspl::cmd_pipeline(config));
    } else if (cmd_synth->parsed()) {
      inspl::cmd_synth(config);
      std::printf("dataset written to %s/dataset\n", config.out_dir.c_str());
    }
    return 0;
  } catch (const inspl::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.exit_class();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 3;
  }
}
