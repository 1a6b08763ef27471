#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "suvr/dataset.hpp"
#include "suvr/encoder.hpp"
#include "suvr/memory_bank.hpp"
#include "suvr/neighbors.hpp"
#include "suvr/numeric.hpp"
#include "suvr/optimizer.hpp"

namespace suvr {

// When discovered neighbor sets are recomputed as the bank evolves:
// every step, once per epoch, or fixed after the first build.
enum class ResetPolicy { every_step, every_epoch, never };

std::string to_string(ResetPolicy p);
ResetPolicy reset_policy_from_string(const std::string& name);

struct TrainConfig {
  Strategy strategy = Strategy::greedy;
  std::size_t k = 4;   // neighbors discovered per instance
  std::size_t m = 2;   // negatives carved from the discovered set
  std::size_t extra_negatives = 0;  // uniform draws from the rest of the bank
  double tau = 0.07;
  std::size_t epochs = 50;
  std::size_t batch_size = 32;
  double base_lr = 0.03;
  double nesterov_mu = 0.9;
  double momentum = 0.5;  // memory-bank keep rate
  ResetPolicy reset_policy = ResetPolicy::every_step;
  std::size_t warmup_epochs = 0;  // instance term only while epoch < this
  std::uint64_t seed = 0;
  std::size_t d = 64;  // embedding dimension
  std::vector<std::size_t> hidden = {64};
};

// Throws ConfigError naming the offending field and its constraint.
void validate(const TrainConfig& cfg);

struct EvalConfig {
  std::size_t k_eval = 5;  // votes per prediction
};

void validate(const EvalConfig& cfg);

// Batch-mean loss terms; total == instance + positive + negative.
struct BatchLoss {
  double instance_term = 0.0;
  double positive_term = 0.0;
  double negative_term = 0.0;
  double total = 0.0;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double lr = 0.0;
  BatchLoss mean_loss;  // instance-weighted mean over the epoch
  double wall_seconds = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
};

// Owns the encoder, optimizer state, and memory bank for one training run.
// Single logical writer: train_step / run_epoch mutate; accessors are
// read-only. Within a step, per-instance forward/discover/loss work runs on
// independent slots (parallelizable); gradient accumulation and bank updates
// happen serially in batch order, so results do not depend on thread count.
class Trainer {
 public:
  Trainer(const Matrix& features, TrainConfig cfg);

  // One optimization step: per instance, forward -> discover (fresh under
  // every-step, cached otherwise; a missing cache entry is filled) ->
  // loss/backprop; then one Nesterov update with the batch-mean gradient and
  // one EMA bank update per instance, in batch order. The bank stays frozen
  // for all discovery and loss work within the step. During warm-up epochs
  // the neighbor terms are inactive (empty positive/negative sets).
  BatchLoss train_step(std::span<const std::size_t> batch, double lr);

  // Shuffles all instances (seeded), runs full batches plus the remainder,
  // maintains the neighbor cache per the reset policy, and advances the
  // epoch counter. lr comes from the decay schedule.
  EpochRecord run_epoch();

  const MlpEncoder& encoder() const { return encoder_; }
  const MemoryBank& bank() const { return bank_; }
  const TrainConfig& config() const { return cfg_; }
  std::size_t completed_epochs() const { return completed_epochs_; }

  // Cached per-instance neighbor sets (empty optionals before first build /
  // under every-step).
  const std::vector<std::optional<NeighborSet>>& neighbor_cache() const {
    return cache_;
  }

  // Serialization hook: checkpoints bundle the optimizer state.
  const OptimizerState& optimizer_state() const { return opt_; }

 private:
  bool neighbors_active() const { return completed_epochs_ >= cfg_.warmup_epochs; }
  NeighborSet discover_for(std::size_t instance, SeededRng* extras_rng);
  void rebuild_cache();

  TrainConfig cfg_;
  Matrix features_;
  MlpEncoder encoder_;
  MemoryBank bank_;
  OptimizerState opt_;
  SeededRng shuffle_rng_;
  std::uint64_t negatives_seed_ = 0;
  std::vector<std::optional<NeighborSet>> cache_;
  bool cache_built_ = false;
  std::size_t completed_epochs_ = 0;
  std::size_t steps_taken_ = 0;
};

struct FitResult {
  MlpEncoder encoder;
  MemoryBank bank;
  TrainHistory history;
};

// Full training run. Takes a bare feature matrix: labels are structurally
// out of reach of the optimization path.
FitResult fit(const Matrix& features, const TrainConfig& cfg);

// Majority label of the k_eval most similar training embeddings (dot
// product). Vote ties go to the label with the larger summed similarity,
// then to the smaller label id.
int knn_predict(const Matrix& train_embeddings, std::span<const int> train_labels,
                std::span<const double> v, std::size_t k_eval);

// Embeds each test row and predicts against the training embeddings
// (typically the memory-bank rows). Returns the fraction correct.
double evaluate(const MlpEncoder& encoder, const Matrix& train_embeddings,
                std::span<const int> train_labels, const Matrix& test_features,
                std::span<const int> test_labels, const EvalConfig& eval_cfg);

struct AblationGrid {
  std::vector<Strategy> strategies;
  std::vector<std::size_t> ks;
  std::vector<ResetPolicy> reset_policies;
};

struct AblationCell {
  Strategy strategy = Strategy::bfs;
  std::size_t k = 0;
  ResetPolicy reset_policy = ResetPolicy::every_step;
  std::vector<double> per_seed_accuracy;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;  // sample standard deviation
};

// fit + evaluate per (strategy, k, reset policy) cell per seed on a fresh
// holdout split. Each run's split and training seeds derive from the cell
// seed, so the table is deterministic and cells are order-independent. m is
// clamped to k-1 per cell so small-k cells stay valid.
std::vector<AblationCell> ablate(const LabeledDataset& dataset,
                                 const TrainConfig& base_cfg, const AblationGrid& grid,
                                 std::span<const std::uint64_t> seeds,
                                 std::size_t test_count, const EvalConfig& eval_cfg);

// Seed for the holdout split of a run seeded by train_seed; one derivation
// shared by the trial runner and the command-line front end, so a saved
// run's split can be reproduced exactly.
std::uint64_t holdout_split_seed(std::uint64_t train_seed);

// The standard holdout protocol shared by the ablation runner and the
// command-line front end: split (seeded), fit on the training rows, evaluate
// on the held-out rows.
struct TrialResult {
  double accuracy = 0.0;
  TrainHistory history;
};
TrialResult run_trial(const LabeledDataset& dataset, const TrainConfig& cfg,
                      std::size_t test_count, const EvalConfig& eval_cfg);

}  // namespace suvr
