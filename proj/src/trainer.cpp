#include "suvr/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <map>
#include <numeric>
#include <string>
#include <utility>

#include "suvr/errors.hpp"
#include "suvr/kernels.hpp"
#include "suvr/objective.hpp"

namespace suvr {

namespace {

// Seed-stream tags; each consumer of randomness gets its own lane off the
// config seed so adding one never shifts another.
constexpr std::uint64_t kEncoderTag = 1;
constexpr std::uint64_t kBankTag = 2;
constexpr std::uint64_t kShuffleTag = 3;
constexpr std::uint64_t kNegativesTag = 4;
constexpr std::uint64_t kSplitTag = 5;
constexpr std::uint64_t kStepDrawLane = 1;
constexpr std::uint64_t kEpochDrawLane = 2;

TrainConfig validated(TrainConfig cfg) {
  validate(cfg);
  return cfg;
}

const Matrix& checked_features(const Matrix& features) {
  if (features.rows() == 0 || features.cols() == 0) {
    throw DimensionMismatch("Trainer: feature matrix is empty");
  }
  return features;
}

void rethrow_first(std::vector<std::exception_ptr>& errors) {
  for (std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

std::string to_string(ResetPolicy p) {
  switch (p) {
    case ResetPolicy::every_step: return "every-step";
    case ResetPolicy::every_epoch: return "every-epoch";
    case ResetPolicy::never: return "never";
  }
  throw ConfigError("unknown reset policy value");
}

ResetPolicy reset_policy_from_string(const std::string& name) {
  if (name == "every-step") return ResetPolicy::every_step;
  if (name == "every-epoch") return ResetPolicy::every_epoch;
  if (name == "never") return ResetPolicy::never;
  throw ConfigError("reset_policy: expected every-step, every-epoch, or never; got '" +
                    name + "'");
}

void validate(const TrainConfig& cfg) {
  if (cfg.k < 1) throw ConfigError("k: must be >= 1, got " + std::to_string(cfg.k));
  if (cfg.m >= cfg.k) {
    throw ConfigError("m: must be < k (" + std::to_string(cfg.m) +
                      " >= " + std::to_string(cfg.k) + ")");
  }
  if (!(cfg.tau > 0.0)) {
    throw ConfigError("tau: must be positive, got " + std::to_string(cfg.tau));
  }
  if (cfg.batch_size < 1) throw ConfigError("batch_size: must be >= 1");
  if (!(cfg.base_lr > 0.0)) {
    throw ConfigError("base_lr: must be positive, got " + std::to_string(cfg.base_lr));
  }
  if (!(cfg.nesterov_mu >= 0.0) || cfg.nesterov_mu >= 1.0) {
    throw ConfigError("nesterov_mu: must lie in [0, 1), got " +
                      std::to_string(cfg.nesterov_mu));
  }
  if (!(cfg.momentum >= 0.0) || cfg.momentum > 1.0) {
    throw ConfigError("momentum: must lie in [0, 1], got " +
                      std::to_string(cfg.momentum));
  }
  if (cfg.d < 1) throw ConfigError("d: embedding dimension must be >= 1");
  for (std::size_t width : cfg.hidden) {
    if (width < 1) throw ConfigError("hidden: layer widths must be >= 1");
  }
}

void validate(const EvalConfig& cfg) {
  if (cfg.k_eval < 1) throw ConfigError("k_eval: must be >= 1");
}

Trainer::Trainer(const Matrix& features, TrainConfig cfg)
    : cfg_(validated(std::move(cfg))),
      features_(checked_features(features)),
      encoder_([this] {
        SeededRng enc_rng(mix_seed(cfg_.seed, kEncoderTag));
        return MlpEncoder::make(features_.cols(), cfg_.hidden, cfg_.d, enc_rng);
      }()),
      bank_(features_.rows(), cfg_.d, mix_seed(cfg_.seed, kBankTag), cfg_.momentum),
      opt_([this] {
        auto params = encoder_.parameter_views();
        return OptimizerState::like(params, cfg_.nesterov_mu, cfg_.base_lr);
      }()),
      shuffle_rng_(mix_seed(cfg_.seed, kShuffleTag)),
      negatives_seed_(mix_seed(cfg_.seed, kNegativesTag)),
      cache_(features_.rows()) {}

NeighborSet Trainer::discover_for(std::size_t instance, SeededRng* extras_rng) {
  if (cfg_.extra_negatives > 0) {
    return discover(bank_, instance, cfg_.strategy, cfg_.k, cfg_.m,
                    cfg_.extra_negatives, *extras_rng, kernels::Exec::serial);
  }
  return discover(bank_, instance, cfg_.strategy, cfg_.k, cfg_.m,
                  kernels::Exec::serial);
}

void Trainer::rebuild_cache() {
  const std::size_t n = bank_.size();
  std::vector<std::exception_ptr> errors(n);
  const std::uint64_t base =
      mix_seed(mix_seed(negatives_seed_, kEpochDrawLane), completed_epochs_);
  kernels::for_each_index(n, kernels::Exec::parallel, [&](std::size_t i) {
    try {
      SeededRng rng(mix_seed(base, i));
      cache_[i] = discover_for(i, &rng);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  });
  rethrow_first(errors);
}

BatchLoss Trainer::train_step(std::span<const std::size_t> batch, double lr) {
  if (batch.empty()) throw ConfigError("train_step: empty batch");
  if (!(lr > 0.0)) throw ConfigError("train_step: lr must be positive");
  for (std::size_t idx : batch) {
    if (idx >= bank_.size()) {
      throw IndexOutOfRange("train_step: instance " + std::to_string(idx) +
                            " out of range for " + std::to_string(bank_.size()));
    }
  }

  const std::size_t b = batch.size();
  const bool active = neighbors_active();
  const bool cached_policy = cfg_.reset_policy != ResetPolicy::every_step;
  const std::uint64_t step_base =
      mix_seed(mix_seed(negatives_seed_, kStepDrawLane), steps_taken_);

  // Phase one: per-instance work against the frozen encoder and bank. Slots
  // are independent, so this loop may run on any number of threads; all
  // mutation waits for phase two.
  std::vector<Vec> embeddings(b);
  std::vector<ParamGrads> slot_grads(b);
  std::vector<BatchLoss> slot_loss(b);
  std::vector<std::optional<NeighborSet>> fresh(b);
  std::vector<std::exception_ptr> errors(b);
  kernels::for_each_index(b, kernels::Exec::parallel, [&](std::size_t s) {
    const std::size_t idx = batch[s];
    try {
      ForwardCache fc = encoder_.forward(features_.row(idx));
      std::vector<std::size_t> positives;
      std::vector<std::size_t> negatives;
      if (active) {
        const NeighborSet* set = nullptr;
        if (cached_policy && cache_[idx]) {
          set = &*cache_[idx];
        } else {
          SeededRng slot_rng(mix_seed(step_base, s));
          fresh[s] = discover_for(idx, &slot_rng);
          set = &*fresh[s];
        }
        positives = set->positive_indices();
        negatives = set->negative_indices();
      }
      LossWithGradient lg = loss_with_gradient(bank_, fc.output, idx, positives,
                                               negatives, cfg_.tau,
                                               kernels::Exec::serial);
      slot_grads[s] = encoder_.backward(fc, lg.gradient);
      slot_loss[s] = {lg.instance_term, lg.positive_term, lg.negative_term, lg.total};
      embeddings[s] = std::move(fc.output);
    } catch (const NormTooSmall& e) {
      errors[s] = std::make_exception_ptr(NormTooSmall(
          "train_step: instance " + std::to_string(idx) + ": " + e.what()));
    } catch (...) {
      errors[s] = std::current_exception();
    }
  });
  rethrow_first(errors);

  // Phase two: serial, batch order. Mean-reduced gradients keep the lr
  // meaning independent of batch size.
  BatchLoss mean;
  ParamGrads total = encoder_.zero_grads();
  for (std::size_t s = 0; s < b; ++s) {
    total.add(slot_grads[s]);
    mean.instance_term += slot_loss[s].instance_term;
    mean.positive_term += slot_loss[s].positive_term;
    mean.negative_term += slot_loss[s].negative_term;
    mean.total += slot_loss[s].total;
  }
  const double inv_b = 1.0 / static_cast<double>(b);
  total.scale(inv_b);
  mean.instance_term *= inv_b;
  mean.positive_term *= inv_b;
  mean.negative_term *= inv_b;
  mean.total *= inv_b;

  if (cached_policy) {
    for (std::size_t s = 0; s < b; ++s) {
      if (fresh[s]) cache_[batch[s]] = std::move(*fresh[s]);
    }
  }

  auto params = encoder_.parameter_views();
  nesterov_step(params, MlpEncoder::grad_views(total), opt_, lr);
  for (std::size_t s = 0; s < b; ++s) bank_.ema_update(batch[s], embeddings[s]);
  ++steps_taken_;
  return mean;
}

EpochRecord Trainer::run_epoch() {
  const auto start = std::chrono::steady_clock::now();
  const double lr = lr_at_epoch(cfg_.base_lr, static_cast<int>(completed_epochs_));

  if (neighbors_active()) {
    if (cfg_.reset_policy == ResetPolicy::every_epoch) {
      rebuild_cache();
    } else if (cfg_.reset_policy == ResetPolicy::never && !cache_built_) {
      rebuild_cache();
      cache_built_ = true;
    }
  }

  const std::size_t n = bank_.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  shuffle_rng_.shuffle(order);

  BatchLoss sum;  // instance-weighted
  for (std::size_t begin = 0; begin < n; begin += cfg_.batch_size) {
    const std::size_t len = std::min(cfg_.batch_size, n - begin);
    const BatchLoss bl =
        train_step(std::span<const std::size_t>(order).subspan(begin, len), lr);
    const double w = static_cast<double>(len);
    sum.instance_term += bl.instance_term * w;
    sum.positive_term += bl.positive_term * w;
    sum.negative_term += bl.negative_term * w;
    sum.total += bl.total * w;
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  sum.instance_term *= inv_n;
  sum.positive_term *= inv_n;
  sum.negative_term *= inv_n;
  sum.total *= inv_n;

  ++completed_epochs_;
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
  return EpochRecord{completed_epochs_, lr, sum, elapsed.count()};
}

FitResult fit(const Matrix& features, const TrainConfig& cfg) {
  Trainer trainer(features, cfg);
  TrainHistory history;
  history.epochs.reserve(cfg.epochs);
  for (std::size_t e = 0; e < cfg.epochs; ++e) {
    history.epochs.push_back(trainer.run_epoch());
  }
  return FitResult{trainer.encoder(), trainer.bank(), std::move(history)};
}

int knn_predict(const Matrix& train_embeddings, std::span<const int> train_labels,
                std::span<const double> v, std::size_t k_eval) {
  const std::size_t n = train_embeddings.rows();
  if (n == 0) throw DimensionMismatch("knn_predict: empty training set");
  if (train_labels.size() != n) {
    throw DimensionMismatch("knn_predict: " + std::to_string(train_labels.size()) +
                            " labels for " + std::to_string(n) + " embeddings");
  }
  if (k_eval < 1) throw ConfigError("k_eval: must be >= 1");
  if (k_eval > n) {
    throw NotEnoughCandidates("knn_predict: k_eval " + std::to_string(k_eval) +
                              " exceeds training size " + std::to_string(n));
  }
  if (v.size() != train_embeddings.cols()) {
    throw DimensionMismatch("knn_predict: query dim " + std::to_string(v.size()) +
                            " vs embedding dim " +
                            std::to_string(train_embeddings.cols()));
  }

  Vec scores(n);
  kernels::matvec(train_embeddings, v, scores, kernels::Exec::serial);
  const std::vector<std::size_t> top = top_k_excluding(scores, k_eval, {});

  struct Tally {
    std::size_t votes = 0;
    double similarity = 0.0;
  };
  std::map<int, Tally> tallies;
  for (std::size_t idx : top) {
    Tally& t = tallies[train_labels[idx]];
    ++t.votes;
    t.similarity += scores[idx];
  }
  // Ascending label order, strict improvement: equal votes and similarity
  // keep the smaller label.
  int best_label = 0;
  Tally best;
  bool first = true;
  for (const auto& [label, tally] : tallies) {
    const bool wins = first || tally.votes > best.votes ||
                      (tally.votes == best.votes && tally.similarity > best.similarity);
    if (wins) {
      best_label = label;
      best = tally;
      first = false;
    }
  }
  return best_label;
}

double evaluate(const MlpEncoder& encoder, const Matrix& train_embeddings,
                std::span<const int> train_labels, const Matrix& test_features,
                std::span<const int> test_labels, const EvalConfig& eval_cfg) {
  validate(eval_cfg);
  const std::size_t n_test = test_features.rows();
  if (n_test == 0) throw DimensionMismatch("evaluate: empty test set");
  if (test_labels.size() != n_test) {
    throw DimensionMismatch("evaluate: " + std::to_string(test_labels.size()) +
                            " labels for " + std::to_string(n_test) + " test rows");
  }
  if (train_labels.size() != train_embeddings.rows()) {
    throw DimensionMismatch("evaluate: training label count mismatch");
  }
  if (encoder.output_dim() != train_embeddings.cols()) {
    throw DimensionMismatch("evaluate: encoder output dim " +
                            std::to_string(encoder.output_dim()) +
                            " vs embedding dim " +
                            std::to_string(train_embeddings.cols()));
  }
  if (encoder.input_dim() != test_features.cols()) {
    throw DimensionMismatch("evaluate: encoder input dim " +
                            std::to_string(encoder.input_dim()) + " vs test dim " +
                            std::to_string(test_features.cols()));
  }

  std::vector<unsigned char> hit(n_test, 0);
  std::vector<std::exception_ptr> errors(n_test);
  kernels::for_each_index(n_test, kernels::Exec::parallel, [&](std::size_t t) {
    try {
      ForwardCache fc = encoder.forward(test_features.row(t));
      const int predicted =
          knn_predict(train_embeddings, train_labels, fc.output, eval_cfg.k_eval);
      hit[t] = predicted == test_labels[t] ? 1 : 0;
    } catch (...) {
      errors[t] = std::current_exception();
    }
  });
  rethrow_first(errors);

  std::size_t correct = 0;
  for (unsigned char h : hit) correct += h;
  return static_cast<double>(correct) / static_cast<double>(n_test);
}

std::uint64_t holdout_split_seed(std::uint64_t train_seed) {
  return mix_seed(train_seed, kSplitTag);
}

TrialResult run_trial(const LabeledDataset& dataset, const TrainConfig& cfg,
                      std::size_t test_count, const EvalConfig& eval_cfg) {
  if (!dataset.labels) {
    throw ConfigError("run_trial: dataset carries no labels to score against");
  }
  validate(cfg);
  validate(eval_cfg);
  const SplitDataset split =
      split_dataset(dataset, test_count, holdout_split_seed(cfg.seed));
  FitResult result = fit(split.train_features, cfg);
  const double accuracy =
      evaluate(result.encoder, result.bank.embeddings(), split.train_labels,
               split.test_features, split.test_labels, eval_cfg);
  return TrialResult{accuracy, std::move(result.history)};
}

std::vector<AblationCell> ablate(const LabeledDataset& dataset,
                                 const TrainConfig& base_cfg, const AblationGrid& grid,
                                 std::span<const std::uint64_t> seeds,
                                 std::size_t test_count, const EvalConfig& eval_cfg) {
  if (grid.strategies.empty() || grid.ks.empty() || grid.reset_policies.empty()) {
    throw ConfigError("ablate: every grid axis needs at least one value");
  }
  if (seeds.empty()) throw ConfigError("ablate: at least one seed required");

  std::vector<AblationCell> cells;
  for (Strategy strategy : grid.strategies) {
    for (std::size_t k : grid.ks) {
      for (ResetPolicy policy : grid.reset_policies) {
        AblationCell cell;
        cell.strategy = strategy;
        cell.k = k;
        cell.reset_policy = policy;
        cell.per_seed_accuracy.assign(seeds.size(), 0.0);
        cells.push_back(std::move(cell));
      }
    }
  }

  // Every (cell, seed) run is independent; results land in their own slots
  // so the table is identical however the runs are scheduled.
  const std::size_t runs = cells.size() * seeds.size();
  std::vector<std::exception_ptr> errors(runs);
  kernels::for_each_index(runs, kernels::Exec::parallel, [&](std::size_t r) {
    try {
      AblationCell& cell = cells[r / seeds.size()];
      const std::size_t si = r % seeds.size();
      TrainConfig cfg = base_cfg;
      cfg.strategy = cell.strategy;
      cfg.k = cell.k;
      cfg.m = std::min(base_cfg.m, cell.k - 1);  // keep m < k at every cell
      cfg.reset_policy = cell.reset_policy;
      cfg.seed = seeds[si];
      cell.per_seed_accuracy[si] = run_trial(dataset, cfg, test_count, eval_cfg).accuracy;
    } catch (...) {
      errors[r] = std::current_exception();
    }
  });
  rethrow_first(errors);

  for (AblationCell& cell : cells) {
    const std::size_t s = cell.per_seed_accuracy.size();
    double mean = 0.0;
    for (double a : cell.per_seed_accuracy) mean += a;
    mean /= static_cast<double>(s);
    double var = 0.0;
    for (double a : cell.per_seed_accuracy) var += (a - mean) * (a - mean);
    cell.mean_accuracy = mean;
    cell.std_accuracy = s > 1 ? std::sqrt(var / static_cast<double>(s - 1)) : 0.0;
  }
  return cells;
}

}  // namespace suvr
