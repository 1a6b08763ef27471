#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "suvr/dataset.hpp"
#include "suvr/errors.hpp"
#include "suvr/objective.hpp"
#include "suvr/trainer.hpp"

using namespace suvr;

namespace {

LabeledDataset small_blobs(std::uint64_t seed, std::size_t per_class = 20) {
  BlobSpec spec;
  spec.num_classes = 3;
  spec.per_class = per_class;
  spec.feature_dim = 8;
  spec.center_radius = 5.0;
  spec.noise_sigma = 0.5;
  spec.seed = seed;
  return make_blobs(spec);
}

TrainConfig small_config() {
  TrainConfig cfg;
  cfg.k = 3;
  cfg.m = 1;
  cfg.epochs = 3;
  cfg.batch_size = 16;
  cfg.d = 12;
  cfg.hidden = {12};
  cfg.seed = 5;
  return cfg;
}

MlpEncoder identity_encoder(std::size_t d) {
  Layer layer;
  layer.weights = Matrix(d, d);
  for (std::size_t i = 0; i < d; ++i) layer.weights(i, i) = 1.0;
  layer.biases = Vec(d, 0.0);
  layer.activation = Activation::linear;
  return MlpEncoder({layer});
}

}  // namespace

TEST_CASE("config validation names the offending field") {
  TrainConfig cfg = small_config();

  cfg.k = 0;
  CHECK_THROWS_WITH_AS(validate(cfg), doctest::Contains("k:"), ConfigError);
  cfg = small_config();
  cfg.m = cfg.k;
  CHECK_THROWS_WITH_AS(validate(cfg), doctest::Contains("m:"), ConfigError);
  cfg = small_config();
  cfg.tau = 0.0;
  CHECK_THROWS_WITH_AS(validate(cfg), doctest::Contains("tau:"), ConfigError);
  cfg = small_config();
  cfg.batch_size = 0;
  CHECK_THROWS_WITH_AS(validate(cfg), doctest::Contains("batch_size:"), ConfigError);
  cfg = small_config();
  cfg.base_lr = 0.0;
  CHECK_THROWS_WITH_AS(validate(cfg), doctest::Contains("base_lr:"), ConfigError);
  cfg = small_config();
  cfg.nesterov_mu = 1.0;
  CHECK_THROWS_WITH_AS(validate(cfg), doctest::Contains("nesterov_mu:"), ConfigError);
  cfg = small_config();
  cfg.momentum = 1.5;
  CHECK_THROWS_WITH_AS(validate(cfg), doctest::Contains("momentum:"), ConfigError);
  cfg = small_config();
  cfg.d = 0;
  CHECK_THROWS_WITH_AS(validate(cfg), doctest::Contains("d:"), ConfigError);
  cfg = small_config();
  cfg.hidden = {8, 0};
  CHECK_THROWS_WITH_AS(validate(cfg), doctest::Contains("hidden:"), ConfigError);

  EvalConfig ev;
  ev.k_eval = 0;
  CHECK_THROWS_WITH_AS(validate(ev), doctest::Contains("k_eval:"), ConfigError);
}

TEST_CASE("a degenerate config reduces to pure instance discrimination") {
  LabeledDataset ds = small_blobs(1);
  TrainConfig cfg = small_config();
  cfg.k = 1;
  cfg.m = 0;
  cfg.warmup_epochs = 1;  // neighbor terms inactive in the first epoch
  Trainer trainer(ds.features, cfg);

  std::vector<std::size_t> batch{0, 1, 2, 3};
  BatchLoss bl = trainer.train_step(batch, 0.03);
  CHECK(bl.positive_term == 0.0);
  CHECK(bl.negative_term == 0.0);
  CHECK(bl.total == bl.instance_term);
  CHECK(bl.instance_term > 0.0);
}

TEST_CASE("after warm-up the neighbor terms activate") {
  LabeledDataset ds = small_blobs(2);
  TrainConfig cfg = small_config();
  cfg.warmup_epochs = 1;
  Trainer trainer(ds.features, cfg);

  std::vector<std::size_t> batch{0, 1};
  BatchLoss during = trainer.train_step(batch, 0.03);
  CHECK(during.positive_term == 0.0);
  CHECK(during.negative_term == 0.0);

  trainer.run_epoch();  // completes epoch 0 (still warm-up inside)
  BatchLoss after = trainer.train_step(batch, 0.03);
  CHECK(after.positive_term > 0.0);  // k - m = 2 positives per instance
}

TEST_CASE("one step changes exactly the batch rows of the bank") {
  LabeledDataset ds = small_blobs(3);
  TrainConfig cfg = small_config();
  Trainer trainer(ds.features, cfg);
  Matrix before = trainer.bank().embeddings();

  std::vector<std::size_t> batch{4, 17, 23, 42, 51};
  trainer.train_step(batch, 0.03);
  const Matrix& after = trainer.bank().embeddings();

  std::size_t changed = 0;
  for (std::size_t r = 0; r < before.rows(); ++r) {
    bool same = std::equal(before.row(r).begin(), before.row(r).end(),
                           after.row(r).begin());
    if (!same) {
      ++changed;
      CHECK(std::find(batch.begin(), batch.end(), r) != batch.end());
    }
  }
  CHECK(changed == batch.size());
}

TEST_CASE("the reported batch loss equals an objective recomputation on frozen state") {
  LabeledDataset ds = small_blobs(4);
  TrainConfig cfg = small_config();
  cfg.reset_policy = ResetPolicy::every_step;
  Trainer trainer(ds.features, cfg);

  // freeze copies of everything the step reads
  const MlpEncoder frozen_encoder = trainer.encoder();
  const MemoryBank frozen_bank =
      MemoryBank::restore(trainer.bank().embeddings(), trainer.bank().momentum());

  std::vector<std::size_t> batch{7, 30, 55};
  BatchLoss reported = trainer.train_step(batch, 0.03);

  BatchLoss oracle;
  for (std::size_t idx : batch) {
    ForwardCache fc = frozen_encoder.forward(ds.features.row(idx));
    NeighborSet set = discover(frozen_bank, idx, cfg.strategy, cfg.k, cfg.m,
                               kernels::Exec::serial);
    LossBreakdown lb =
        suvr_loss(frozen_bank, fc.output, idx, set.positive_indices(),
                  set.negative_indices(), cfg.tau, kernels::Exec::serial);
    oracle.instance_term += lb.instance_term;
    oracle.positive_term += lb.positive_term;
    oracle.negative_term += lb.negative_term;
    oracle.total += lb.total;
  }
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  oracle.instance_term *= inv_b;
  oracle.positive_term *= inv_b;
  oracle.negative_term *= inv_b;
  oracle.total *= inv_b;

  CHECK(reported.instance_term == oracle.instance_term);
  CHECK(reported.positive_term == oracle.positive_term);
  CHECK(reported.negative_term == oracle.negative_term);
  CHECK(reported.total == oracle.total);
}

TEST_CASE("train_step rejects bad batches") {
  LabeledDataset ds = small_blobs(5);
  Trainer trainer(ds.features, small_config());
  std::vector<std::size_t> empty;
  CHECK_THROWS_AS(trainer.train_step(empty, 0.03), ConfigError);
  std::vector<std::size_t> oob{1000};
  CHECK_THROWS_AS(trainer.train_step(oob, 0.03), IndexOutOfRange);
  std::vector<std::size_t> ok{0};
  CHECK_THROWS_AS(trainer.train_step(ok, 0.0), ConfigError);
}

TEST_CASE("trainer rejects an empty feature matrix") {
  CHECK_THROWS_AS(Trainer(Matrix(), small_config()), DimensionMismatch);
}

TEST_CASE("fit is deterministic and epochs=0 is a no-op run") {
  LabeledDataset ds = small_blobs(6);
  TrainConfig cfg = small_config();

  FitResult a = fit(ds.features, cfg);
  FitResult b = fit(ds.features, cfg);
  CHECK(a.bank.embeddings() == b.bank.embeddings());
  REQUIRE(a.history.epochs.size() == cfg.epochs);
  REQUIRE(b.history.epochs.size() == cfg.epochs);
  for (std::size_t e = 0; e < cfg.epochs; ++e) {
    CHECK(a.history.epochs[e].mean_loss.total == b.history.epochs[e].mean_loss.total);
    CHECK(a.history.epochs[e].lr == b.history.epochs[e].lr);
    CHECK(a.history.epochs[e].epoch == e + 1);
    CHECK(std::isfinite(a.history.epochs[e].mean_loss.total));
  }
  for (std::size_t l = 0; l < a.encoder.layers().size(); ++l) {
    CHECK(a.encoder.layers()[l].weights == b.encoder.layers()[l].weights);
    CHECK(a.encoder.layers()[l].biases == b.encoder.layers()[l].biases);
  }

  TrainConfig none = cfg;
  none.epochs = 0;
  FitResult empty_run = fit(ds.features, none);
  CHECK(empty_run.history.epochs.empty());
  Trainer untouched(ds.features, none);
  CHECK(empty_run.bank.embeddings() == untouched.bank().embeddings());
}

TEST_CASE("a different seed moves the run") {
  LabeledDataset ds = small_blobs(7);
  TrainConfig cfg = small_config();
  FitResult a = fit(ds.features, cfg);
  cfg.seed += 1;
  FitResult b = fit(ds.features, cfg);
  CHECK(a.bank.embeddings() != b.bank.embeddings());
}

TEST_CASE("mean epoch loss falls over a short training run") {
  LabeledDataset ds = small_blobs(8, 30);
  TrainConfig cfg = small_config();
  cfg.epochs = 12;
  FitResult result = fit(ds.features, cfg);
  CHECK(result.history.epochs.back().mean_loss.total <
        result.history.epochs.front().mean_loss.total);
}

TEST_CASE("bank rows stay unit through a full run") {
  LabeledDataset ds = small_blobs(9);
  TrainConfig cfg = small_config();
  cfg.epochs = 5;
  FitResult result = fit(ds.features, cfg);
  for (std::size_t r = 0; r < result.bank.size(); ++r) {
    CHECK(std::abs(norm2(result.bank.row(r)) - 1.0) < 1e-9);
  }
}

TEST_CASE("under the never policy the cached sets stay fixed across epochs") {
  LabeledDataset ds = small_blobs(10);
  TrainConfig cfg = small_config();
  cfg.reset_policy = ResetPolicy::never;
  cfg.epochs = 1;
  Trainer trainer(ds.features, cfg);
  trainer.run_epoch();
  const std::vector<std::optional<NeighborSet>> snapshot = trainer.neighbor_cache();
  for (const auto& entry : snapshot) REQUIRE(entry.has_value());

  trainer.run_epoch();
  trainer.run_epoch();
  CHECK(trainer.neighbor_cache() == snapshot);
}

TEST_CASE("the every-step policy never materializes a cache") {
  LabeledDataset ds = small_blobs(11);
  TrainConfig cfg = small_config();
  cfg.reset_policy = ResetPolicy::every_step;
  Trainer trainer(ds.features, cfg);
  trainer.run_epoch();
  for (const auto& entry : trainer.neighbor_cache()) CHECK_FALSE(entry.has_value());
}

TEST_CASE("the every-epoch policy rebuilds against the moved bank") {
  LabeledDataset ds = small_blobs(12);
  TrainConfig cfg = small_config();
  cfg.reset_policy = ResetPolicy::every_epoch;
  Trainer trainer(ds.features, cfg);
  trainer.run_epoch();
  const std::vector<std::optional<NeighborSet>> first = trainer.neighbor_cache();
  for (const auto& entry : first) REQUIRE(entry.has_value());
  for (const auto& entry : first) CHECK_NOTHROW(validate(*entry, ds.size(), cfg.k));

  // several more epochs move the bank; at least one cached set must change
  trainer.run_epoch();
  trainer.run_epoch();
  CHECK(trainer.neighbor_cache() != first);
}

TEST_CASE("majority vote: [A, A, B] predicts A") {
  Matrix train(3, 2);
  train(0, 0) = 1.0;                      // A
  train(1, 0) = 0.9701425001453319;       // A (normalized (2,0.5))
  train(1, 1) = 0.24253562503633297;
  train(2, 1) = 1.0;                      // B
  std::vector<int> labels{0, 0, 1};
  Vec v{1.0, 0.0};
  CHECK(knn_predict(train, labels, v, 3) == 0);
  // k_eval=1: the single nearest neighbor decides
  CHECK(knn_predict(train, labels, v, 1) == 0);
  Vec toward_b{0.0, 1.0};
  CHECK(knn_predict(train, labels, toward_b, 1) == 1);
}

TEST_CASE("vote ties break on summed similarity, then the smaller label") {
  // labels {1, 0}, similarities {0.9, 0.8}: label 1 wins despite the larger id
  Matrix train(2, 2);
  train(0, 0) = 0.9;
  train(0, 1) = std::sqrt(1.0 - 0.81);
  train(1, 0) = 0.8;
  train(1, 1) = -0.6;
  std::vector<int> labels{1, 0};
  Vec v{1.0, 0.0};
  CHECK(knn_predict(train, labels, v, 2) == 1);

  // exactly equal similarity and votes: the smaller label id wins
  Matrix sym(2, 3);
  sym(0, 0) = 0.8;
  sym(0, 1) = 0.6;
  sym(1, 0) = 0.8;
  sym(1, 1) = -0.6;
  std::vector<int> ids{5, 3};
  Vec q{1.0, 0.0, 0.0};
  CHECK(knn_predict(sym, ids, q, 2) == 3);
}

TEST_CASE("knn_predict validates its inputs") {
  Matrix train(2, 2);
  train(0, 0) = 1.0;
  train(1, 1) = 1.0;
  std::vector<int> labels{0, 1};
  Vec v{1.0, 0.0};
  CHECK_THROWS_AS(knn_predict(Matrix(), {}, v, 1), DimensionMismatch);
  CHECK_THROWS_AS(knn_predict(train, labels, v, 3), NotEnoughCandidates);
  std::vector<int> short_labels{0};
  CHECK_THROWS_AS(knn_predict(train, short_labels, v, 1), DimensionMismatch);
  Vec bad_dim{1.0, 0.0, 0.0};
  CHECK_THROWS_AS(knn_predict(train, labels, bad_dim, 1), DimensionMismatch);
}

TEST_CASE("evaluate scores self-retrieval at 1.0") {
  SeededRng rng(31);
  Matrix bank_rows = random_unit_rows(10, 4, rng);
  std::vector<int> labels;
  for (std::size_t i = 0; i < 10; ++i) labels.push_back(static_cast<int>(i % 2));
  MlpEncoder enc = identity_encoder(4);
  EvalConfig ev;
  ev.k_eval = 1;
  const double acc = evaluate(enc, bank_rows, labels, bank_rows, labels, ev);
  CHECK(acc == 1.0);
}

TEST_CASE("evaluate sits at chance level for random labels") {
  EvalConfig ev;  // k_eval = 5
  double total = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    SeededRng rng(100 + seed);
    Matrix train = random_unit_rows(400, 6, rng);
    Matrix test = random_unit_rows(200, 6, rng);
    std::vector<int> train_labels, test_labels;
    for (int i = 0; i < 400; ++i)
      train_labels.push_back(static_cast<int>(rng.next_below(2)));
    for (int i = 0; i < 200; ++i)
      test_labels.push_back(static_cast<int>(rng.next_below(2)));
    total += evaluate(identity_encoder(6), train, train_labels, test, test_labels, ev);
  }
  const double mean = total / 5.0;
  CHECK(mean > 0.38);
  CHECK(mean < 0.62);
}

TEST_CASE("evaluate rejects an empty test set") {
  SeededRng rng(41);
  Matrix train = random_unit_rows(5, 3, rng);
  std::vector<int> labels{0, 1, 0, 1, 0};
  EvalConfig ev;
  CHECK_THROWS_AS(
      evaluate(identity_encoder(3), train, labels, Matrix(), {}, ev),
      DimensionMismatch);
}

TEST_CASE("run_trial is deterministic and scores within range") {
  LabeledDataset ds = small_blobs(50, 25);
  TrainConfig cfg = small_config();
  cfg.epochs = 4;
  EvalConfig ev;
  TrialResult a = run_trial(ds, cfg, 15, ev);
  TrialResult b = run_trial(ds, cfg, 15, ev);
  CHECK(a.accuracy == b.accuracy);
  CHECK(a.accuracy >= 0.0);
  CHECK(a.accuracy <= 1.0);
  CHECK(a.history.epochs.size() == 4);

  LabeledDataset unlabeled = ds;
  unlabeled.labels.reset();
  CHECK_THROWS_AS(run_trial(unlabeled, cfg, 15, ev), ConfigError);
}

TEST_CASE("the ablation grid enumerates strategy-major cells deterministically") {
  LabeledDataset ds = small_blobs(60, 15);
  TrainConfig base = small_config();
  base.epochs = 2;
  base.m = 2;  // clamped to k-1 inside k=1 cells
  AblationGrid grid;
  grid.strategies = {Strategy::bfs, Strategy::dfs, Strategy::greedy};
  grid.ks = {1, 4};
  grid.reset_policies = {ResetPolicy::every_step};
  std::vector<std::uint64_t> seeds{1, 2};
  EvalConfig ev;

  std::vector<AblationCell> cells = ablate(ds, base, grid, seeds, 9, ev);
  REQUIRE(cells.size() == 6);
  CHECK(cells[0].strategy == Strategy::bfs);
  CHECK(cells[0].k == 1);
  CHECK(cells[1].strategy == Strategy::bfs);
  CHECK(cells[1].k == 4);
  CHECK(cells[2].strategy == Strategy::dfs);
  CHECK(cells[5].strategy == Strategy::greedy);

  for (const AblationCell& cell : cells) {
    REQUIRE(cell.per_seed_accuracy.size() == 2);
    double sum = 0.0;
    for (double acc : cell.per_seed_accuracy) {
      CHECK(acc >= 0.0);
      CHECK(acc <= 1.0);
      sum += acc;
    }
    const double mean = sum / 2.0;
    CHECK(cell.mean_accuracy == doctest::Approx(mean).epsilon(1e-15));
    double var = 0.0;
    for (double acc : cell.per_seed_accuracy) {
      var += (acc - mean) * (acc - mean);
    }
    CHECK(cell.std_accuracy == doctest::Approx(std::sqrt(var / 1.0)).epsilon(1e-12));
  }

  std::vector<AblationCell> again = ablate(ds, base, grid, seeds, 9, ev);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    CHECK(cells[i].per_seed_accuracy == again[i].per_seed_accuracy);
  }
}

TEST_CASE("ablate validates the grid and seeds") {
  LabeledDataset ds = small_blobs(61, 10);
  TrainConfig base = small_config();
  AblationGrid empty_axis;
  empty_axis.strategies = {};
  empty_axis.ks = {1};
  empty_axis.reset_policies = {ResetPolicy::never};
  std::vector<std::uint64_t> seeds{1};
  EvalConfig ev;
  CHECK_THROWS_AS(ablate(ds, base, empty_axis, seeds, 5, ev), ConfigError);

  AblationGrid ok;
  ok.strategies = {Strategy::bfs};
  ok.ks = {2};
  ok.reset_policies = {ResetPolicy::never};
  std::vector<std::uint64_t> no_seeds;
  CHECK_THROWS_AS(ablate(ds, base, ok, no_seeds, 5, ev), ConfigError);
}

TEST_CASE("reset policy names round-trip") {
  for (ResetPolicy p :
       {ResetPolicy::every_step, ResetPolicy::every_epoch, ResetPolicy::never}) {
    CHECK(reset_policy_from_string(to_string(p)) == p);
  }
  CHECK_THROWS_AS(reset_policy_from_string("sometimes"), ConfigError);
}
