#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "suvr/checkpoint.hpp"
#include "suvr/config.hpp"
#include "suvr/errors.hpp"
#include "suvr/kernels.hpp"
#include "suvr/metrics.hpp"
#include "suvr/neighbors.hpp"
#include "suvr/trainer.hpp"

namespace {

using nlohmann::json;

// Flag values layered over the config file; only flags the user passed are
// applied, so file settings survive unless explicitly overridden.
struct TrainOverrides {
  std::optional<std::string> strategy;
  std::optional<std::size_t> k;
  std::optional<std::size_t> m;
  std::optional<std::size_t> extra_negatives;
  std::optional<double> tau;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> batch_size;
  std::optional<double> base_lr;
  std::optional<double> nesterov_mu;
  std::optional<double> momentum;
  std::optional<std::string> reset_policy;
  std::optional<std::size_t> warmup_epochs;
  std::optional<std::size_t> d;
  std::optional<std::uint64_t> seed;
};

void add_train_flags(CLI::App* cmd, TrainOverrides& ov) {
  cmd->add_option("--strategy", ov.strategy, "Traversal strategy: bfs|dfs|greedy");
  cmd->add_option("--k", ov.k, "Neighbors discovered per instance");
  cmd->add_option("--m", ov.m, "Negatives carved from the discovered set");
  cmd->add_option("--extra-negatives", ov.extra_negatives,
                  "Uniform negatives drawn from the rest of the bank");
  cmd->add_option("--tau", ov.tau, "Softmax temperature");
  cmd->add_option("--epochs", ov.epochs, "Training epochs");
  cmd->add_option("--batch-size", ov.batch_size, "Instances per optimization step");
  cmd->add_option("--lr", ov.base_lr, "Base learning rate");
  cmd->add_option("--nesterov-mu", ov.nesterov_mu, "Nesterov momentum coefficient");
  cmd->add_option("--bank-momentum", ov.momentum, "Memory-bank keep rate");
  cmd->add_option("--reset", ov.reset_policy,
                  "Neighbor reset policy: every-step|every-epoch|never");
  cmd->add_option("--warmup-epochs", ov.warmup_epochs,
                  "Epochs with only the instance term active");
  cmd->add_option("--dim", ov.d, "Embedding dimension");
  cmd->add_option("--seed", ov.seed, "Seed governing all randomness in the run");
}

void apply(const TrainOverrides& ov, suvr::TrainConfig& cfg) {
  if (ov.strategy) cfg.strategy = suvr::strategy_from_string(*ov.strategy);
  if (ov.k) cfg.k = *ov.k;
  if (ov.m) cfg.m = *ov.m;
  if (ov.extra_negatives) cfg.extra_negatives = *ov.extra_negatives;
  if (ov.tau) cfg.tau = *ov.tau;
  if (ov.epochs) cfg.epochs = *ov.epochs;
  if (ov.batch_size) cfg.batch_size = *ov.batch_size;
  if (ov.base_lr) cfg.base_lr = *ov.base_lr;
  if (ov.nesterov_mu) cfg.nesterov_mu = *ov.nesterov_mu;
  if (ov.momentum) cfg.momentum = *ov.momentum;
  if (ov.reset_policy) {
    cfg.reset_policy = suvr::reset_policy_from_string(*ov.reset_policy);
  }
  if (ov.warmup_epochs) cfg.warmup_epochs = *ov.warmup_epochs;
  if (ov.d) cfg.d = *ov.d;
  if (ov.seed) cfg.seed = *ov.seed;
}

// SUVR_METRICS_DIR redirects metrics files into one directory (basename
// kept), so sweeps can be re-pointed without touching configs.
std::filesystem::path resolved_metrics_path(const std::string& configured) {
  const char* dir = std::getenv("SUVR_METRICS_DIR");
  if (dir != nullptr && *dir != '\0') {
    return std::filesystem::path(dir) / std::filesystem::path(configured).filename();
  }
  return configured;
}

suvr::ExperimentConfig load_config_or_default(const std::string& path) {
  if (path.empty()) return suvr::ExperimentConfig{};
  return suvr::load_experiment_file(path);
}

struct TrainCmd {
  std::string config_path;
  TrainOverrides overrides;
  std::optional<std::size_t> test_count;
  std::optional<std::string> metrics_path;
  std::optional<std::string> checkpoint_path;
  bool include_wall = false;

  void run() const {
    suvr::ExperimentConfig cfg = load_config_or_default(config_path);
    apply(overrides, cfg.train);
    if (test_count) cfg.test_count = *test_count;
    if (metrics_path) cfg.metrics_path = *metrics_path;
    if (checkpoint_path) cfg.checkpoint_path = *checkpoint_path;
    resolve(cfg);

    const suvr::LabeledDataset dataset = suvr::load_dataset(cfg.dataset);
    std::optional<suvr::SplitDataset> split;
    if (cfg.test_count > 0) {
      split = suvr::split_dataset(dataset, cfg.test_count,
                                  suvr::holdout_split_seed(cfg.train.seed));
    }
    const suvr::Matrix& features = split ? split->train_features : dataset.features;

    std::optional<suvr::MetricsWriter> metrics;
    if (!cfg.metrics_path.empty()) {
      metrics.emplace(resolved_metrics_path(cfg.metrics_path));
      metrics->write(json{{"type", "config"}, {"config", suvr::to_json(cfg)}});
    }

    suvr::Trainer trainer(features, cfg.train);
    std::optional<suvr::EpochRecord> last;
    for (std::size_t e = 0; e < cfg.train.epochs; ++e) {
      const suvr::EpochRecord rec = trainer.run_epoch();
      if (metrics) metrics->write(suvr::epoch_record(rec, include_wall));
      std::cout << "epoch " << rec.epoch << "/" << cfg.train.epochs << "  lr "
                << rec.lr << "  loss " << rec.mean_loss.total << "\n";
      last = rec;
    }

    std::optional<double> accuracy;
    if (split) {
      accuracy = suvr::evaluate(trainer.encoder(), trainer.bank().embeddings(),
                                split->train_labels, split->test_features,
                                split->test_labels, cfg.eval);
    }
    if (metrics) {
      json summary{{"type", "summary"},
                   {"epochs", trainer.completed_epochs()},
                   {"test_count", cfg.test_count}};
      if (last) {
        summary["final_loss"] = {{"total", last->mean_loss.total},
                                 {"instance", last->mean_loss.instance_term},
                                 {"positive", last->mean_loss.positive_term},
                                 {"negative", last->mean_loss.negative_term}};
      }
      if (accuracy) summary["accuracy"] = *accuracy;
      metrics->write(summary);
    }
    if (!cfg.checkpoint_path.empty()) {
      const suvr::Checkpoint ckpt{cfg,
                                  trainer.encoder(),
                                  trainer.bank(),
                                  trainer.optimizer_state(),
                                  trainer.completed_epochs(),
                                  accuracy};
      save_checkpoint(ckpt, cfg.checkpoint_path);
      std::cout << "checkpoint written to " << cfg.checkpoint_path << "\n";
    }

    std::cout << "trained " << features.rows() << " instances for "
              << trainer.completed_epochs() << " epochs\n";
    if (accuracy) {
      std::cout << "holdout accuracy " << *accuracy << " (k_eval " << cfg.eval.k_eval
                << ", " << cfg.test_count << " held out)\n";
    }
    if (metrics) std::cout << "metrics written to " << metrics->path().string() << "\n";
  }
};

struct EvalCmd {
  std::string checkpoint_path;
  std::optional<std::size_t> k_eval;
  void run() const {
    const suvr::Checkpoint ckpt = suvr::load_checkpoint(checkpoint_path);
    suvr::ExperimentConfig cfg = ckpt.config;
    if (k_eval) cfg.eval.k_eval = *k_eval;
    validate(cfg.eval);
    if (cfg.test_count == 0) {
      throw suvr::ConfigError("eval: the checkpointed run held out no test rows");
    }
    const suvr::LabeledDataset dataset = suvr::load_dataset(cfg.dataset);
    if (!dataset.labels) {
      throw suvr::ConfigError("eval: dataset carries no labels to score against");
    }
    const suvr::SplitDataset split = suvr::split_dataset(
        dataset, cfg.test_count, suvr::holdout_split_seed(cfg.train.seed));
    if (split.train_features.rows() != ckpt.bank.size()) {
      throw suvr::ConfigError(
          "eval: bank size does not match the reconstructed training split");
    }
    const double accuracy =
        suvr::evaluate(ckpt.encoder, ckpt.bank.embeddings(), split.train_labels,
                       split.test_features, split.test_labels, cfg.eval);
    json out{{"type", "eval"},
             {"accuracy", accuracy},
             {"k_eval", cfg.eval.k_eval},
             {"test_count", cfg.test_count}};
    if (ckpt.train_accuracy) out["train_time_accuracy"] = *ckpt.train_accuracy;
    std::cout << out.dump() << "\n";
  }
};

struct AblateCmd {
  std::string config_path;
  TrainOverrides overrides;
  std::vector<std::string> strategies{"bfs", "dfs", "greedy"};
  std::vector<std::size_t> ks{1, 2, 4, 8};
  std::vector<std::string> resets{"every-step"};
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  std::optional<std::size_t> test_count;
  std::optional<std::string> metrics_path;

  void run() const {
    suvr::ExperimentConfig cfg = load_config_or_default(config_path);
    apply(overrides, cfg.train);
    if (test_count) cfg.test_count = *test_count;
    if (metrics_path) cfg.metrics_path = *metrics_path;
    resolve(cfg);
    if (cfg.test_count == 0) {
      throw suvr::ConfigError(
          "test_count: ablation scores need a held-out split (must be > 0)");
    }

    suvr::AblationGrid grid;
    for (const std::string& s : strategies) {
      grid.strategies.push_back(suvr::strategy_from_string(s));
    }
    grid.ks = ks;
    for (const std::string& r : resets) {
      grid.reset_policies.push_back(suvr::reset_policy_from_string(r));
    }

    const suvr::LabeledDataset dataset = suvr::load_dataset(cfg.dataset);
    const std::vector<suvr::AblationCell> cells =
        suvr::ablate(dataset, cfg.train, grid, seeds, cfg.test_count, cfg.eval);

    std::optional<suvr::MetricsWriter> metrics;
    if (!cfg.metrics_path.empty()) {
      metrics.emplace(resolved_metrics_path(cfg.metrics_path));
      json grid_doc{{"strategies", strategies},
                    {"ks", ks},
                    {"reset_policies", resets},
                    {"seeds", seeds},
                    {"test_count", cfg.test_count}};
      metrics->write(json{{"type", "config"},
                          {"config", suvr::to_json(cfg)},
                          {"grid", std::move(grid_doc)}});
    }

    std::cout << "strategy    k  reset        mean    std\n";
    for (const suvr::AblationCell& cell : cells) {
      char line[128];
      std::snprintf(line, sizeof(line), "%-9s %3zu  %-11s %.4f  %.4f",
                    suvr::to_string(cell.strategy).c_str(), cell.k,
                    suvr::to_string(cell.reset_policy).c_str(), cell.mean_accuracy,
                    cell.std_accuracy);
      std::cout << line << "\n";
      if (metrics) metrics->write(suvr::ablation_record(cell));
    }
    if (metrics) {
      metrics->write(json{{"type", "summary"}, {"cells", cells.size()}});
      std::cout << "metrics written to " << metrics->path().string() << "\n";
    }
  }
};

struct ExportCmd {
  std::string checkpoint_path;
  std::string out_path;
  void run() const {
    const suvr::Checkpoint ckpt = suvr::load_checkpoint(checkpoint_path);
    const suvr::LabeledDataset dataset = suvr::load_dataset(ckpt.config.dataset);
    std::optional<std::vector<int>> labels;
    if (ckpt.config.test_count > 0) {
      const suvr::SplitDataset split =
          suvr::split_dataset(dataset, ckpt.config.test_count,
                              suvr::holdout_split_seed(ckpt.config.train.seed));
      if (dataset.labels) labels = split.train_labels;
    } else if (dataset.labels) {
      labels = *dataset.labels;
    }
    suvr::export_embeddings(ckpt.bank.embeddings(), labels, out_path);
    std::cout << "wrote " << ckpt.bank.size() << " x " << ckpt.bank.dim()
              << " embeddings to " << out_path << "\n";
  }
};

struct TraceCmd {
  std::string checkpoint_path;
  std::vector<std::size_t> queries;
  std::optional<std::string> strategy;
  std::optional<std::size_t> k;
  std::optional<std::size_t> m;
  std::string out_path;

  void run() const {
    const suvr::Checkpoint ckpt = suvr::load_checkpoint(checkpoint_path);
    const suvr::Strategy strat = strategy ? suvr::strategy_from_string(*strategy)
                                          : ckpt.config.train.strategy;
    const std::size_t kk = k ? *k : ckpt.config.train.k;
    const std::size_t mm = m ? *m : ckpt.config.train.m;

    std::vector<std::size_t> targets = queries;
    if (targets.empty()) {
      targets.resize(ckpt.bank.size());
      for (std::size_t i = 0; i < targets.size(); ++i) targets[i] = i;
    }

    std::ofstream file;
    if (!out_path.empty()) {
      file.open(out_path);
      if (!file) throw suvr::IoError("trace: cannot open " + out_path + " for writing");
    }
    std::ostream& os = out_path.empty() ? std::cout : file;
    for (std::size_t q : targets) {
      const suvr::NeighborSet set = suvr::discover(ckpt.bank, q, strat, kk, mm);
      suvr::validate(set, ckpt.bank.size(), kk);
      os << suvr::neighbor_set_to_json(set) << "\n";
    }
    if (!out_path.empty() && !file) {
      throw suvr::IoError("trace: write to " + out_path + " failed");
    }
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Unit-norm instance embeddings trained by graph-traversal "
               "neighbor discovery over a memory bank"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads,
                 "Worker thread cap (results do not depend on it; 0 = default)");
  auto dispatch = [&threads](const auto& cmd) {
    if (threads != 0) suvr::kernels::set_max_threads(threads);
    cmd.run();
  };

  TrainCmd train;
  CLI::App* train_cmd = app.add_subcommand("train", "Fit embeddings; write metrics and a checkpoint");
  train_cmd->fallthrough();
  train_cmd->add_option("--config", train.config_path, "Experiment config file (JSON)");
  add_train_flags(train_cmd, train.overrides);
  train_cmd->add_option("--test-count", train.test_count, "Rows held out for evaluation");
  train_cmd->add_option("--metrics", train.metrics_path, "Metrics file path (JSON lines)");
  train_cmd->add_option("--checkpoint", train.checkpoint_path, "Checkpoint file path");
  train_cmd->add_flag("--include-wall-time", train.include_wall,
                      "Record wall time per epoch (makes metrics files run-dependent)");
  train_cmd->callback([&] { dispatch(train); });

  EvalCmd eval;
  CLI::App* eval_cmd =
      app.add_subcommand("eval", "Re-score a checkpoint on its held-out split");
  eval_cmd->fallthrough();
  eval_cmd->add_option("--checkpoint", eval.checkpoint_path, "Checkpoint file")
      ->required();
  eval_cmd->add_option("--k-eval", eval.k_eval, "Votes per prediction");
  eval_cmd->callback([&] { dispatch(eval); });

  AblateCmd ablate;
  CLI::App* ablate_cmd =
      app.add_subcommand("ablate", "Accuracy grid over strategies, k, reset policies");
  ablate_cmd->fallthrough();
  ablate_cmd->add_option("--config", ablate.config_path, "Experiment config file (JSON)");
  add_train_flags(ablate_cmd, ablate.overrides);
  ablate_cmd->add_option("--strategies", ablate.strategies, "Strategies to sweep")
      ->delimiter(',');
  ablate_cmd->add_option("--ks", ablate.ks, "Neighbor counts to sweep")->delimiter(',');
  ablate_cmd->add_option("--resets", ablate.resets, "Reset policies to sweep")
      ->delimiter(',');
  ablate_cmd->add_option("--seeds", ablate.seeds, "Seeds averaged per cell")
      ->delimiter(',');
  ablate_cmd->add_option("--test-count", ablate.test_count,
                         "Rows held out for evaluation");
  ablate_cmd->add_option("--metrics", ablate.metrics_path,
                         "Metrics file path (JSON lines)");
  ablate_cmd->callback([&] { dispatch(ablate); });

  ExportCmd exp;
  CLI::App* export_cmd =
      app.add_subcommand("export", "Dump a checkpoint's bank embeddings to text");
  export_cmd->fallthrough();
  export_cmd->add_option("--checkpoint", exp.checkpoint_path, "Checkpoint file")
      ->required();
  export_cmd->add_option("--out", exp.out_path, "Output file")->required();
  export_cmd->callback([&] { dispatch(exp); });

  TraceCmd trace;
  CLI::App* trace_cmd = app.add_subcommand(
      "trace", "Emit discovered neighbor sets for chosen queries as JSON lines");
  trace_cmd->fallthrough();
  trace_cmd->add_option("--checkpoint", trace.checkpoint_path, "Checkpoint file")
      ->required();
  trace_cmd->add_option("--queries", trace.queries, "Query instances (default: all)")
      ->delimiter(',');
  trace_cmd->add_option("--strategy", trace.strategy,
                        "Override the checkpointed strategy");
  trace_cmd->add_option("--k", trace.k, "Override the checkpointed neighbor count");
  trace_cmd->add_option("--m", trace.m, "Override the checkpointed negative count");
  trace_cmd->add_option("--out", trace.out_path, "Output file (default: stdout)");
  trace_cmd->callback([&] { dispatch(trace); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const suvr::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
