// Timing comparison: serial reference kernels vs the OpenMP variants, plus
// the trainer paths built on them. Also asserts bitwise agreement on every
// measured input, since that is the contract that makes the comparison fair.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "suvr/dataset.hpp"
#include "suvr/kernels.hpp"
#include "suvr/memory_bank.hpp"
#include "suvr/numeric.hpp"
#include "suvr/objective.hpp"
#include "suvr/trainer.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double time_best_of(int repeats, const std::function<void()>& fn) {
  double best = 1e300;
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = Clock::now();
    fn();
    const std::chrono::duration<double, std::milli> dt = Clock::now() - t0;
    best = std::min(best, dt.count());
  }
  return best;
}

void report(const char* name, double serial_ms, double parallel_ms) {
  std::printf("%-24s serial %9.3f ms   parallel %9.3f ms   speedup %5.2fx\n", name,
              serial_ms, parallel_ms, serial_ms / parallel_ms);
}

[[noreturn]] void mismatch(const char* what) {
  std::fprintf(stderr, "bitwise mismatch in %s: serial and parallel diverged\n", what);
  std::exit(1);
}

}  // namespace

int main(int argc, char** argv) {
  std::size_t n = 4096;
  std::size_t d = 128;
  int repeats = 5;
  CLI::App app{"Kernel and trainer timing: serial reference vs OpenMP"};
  app.add_option("--n", n, "Bank rows");
  app.add_option("--d", d, "Embedding dimension");
  app.add_option("--repeats", repeats, "Timed repetitions (best-of)");
  CLI11_PARSE(app, argc, argv);

  std::printf("bank %zu x %zu, best of %d, %d thread(s) available\n\n", n, d, repeats,
              suvr::kernels::max_threads());

  suvr::SeededRng rng(99);
  const suvr::Matrix bank_rows = suvr::random_unit_rows(n, d, rng);
  suvr::Vec query = suvr::l2_normalize([&] {
    suvr::Vec v(d);
    for (double& x : v) x = rng.next_normal();
    return v;
  }());

  suvr::Vec out_serial(n), out_parallel(n);
  using suvr::kernels::Exec;

  double s = time_best_of(repeats, [&] {
    suvr::kernels::reference::matvec(bank_rows, query, out_serial);
  });
  double p = time_best_of(repeats, [&] {
    suvr::kernels::matvec(bank_rows, query, out_parallel, Exec::parallel);
  });
  if (out_serial != out_parallel) mismatch("matvec");
  report("matvec", s, p);

  suvr::Vec exp_serial(n), exp_parallel(n);
  s = time_best_of(repeats, [&] {
    suvr::kernels::reference::exp_shifted(out_serial, 1.0, 1.0 / 0.07, exp_serial);
  });
  p = time_best_of(repeats, [&] {
    suvr::kernels::exp_shifted(out_serial, 1.0, 1.0 / 0.07, exp_parallel,
                               Exec::parallel);
  });
  if (exp_serial != exp_parallel) mismatch("exp_shifted");
  report("exp_shifted", s, p);

  suvr::Vec scale_serial(n), scale_parallel(n);
  s = time_best_of(repeats, [&] {
    suvr::kernels::reference::scale(exp_serial, 0.125, scale_serial);
  });
  p = time_best_of(repeats, [&] {
    suvr::kernels::scale(exp_serial, 0.125, scale_parallel, Exec::parallel);
  });
  if (scale_serial != scale_parallel) mismatch("scale");
  report("scale", s, p);

  suvr::Vec col_serial(d), col_parallel(d);
  s = time_best_of(repeats, [&] {
    suvr::kernels::reference::weighted_colsum(bank_rows, scale_serial, col_serial);
  });
  p = time_best_of(repeats, [&] {
    suvr::kernels::weighted_colsum(bank_rows, scale_serial, col_parallel,
                                   Exec::parallel);
  });
  if (col_serial != col_parallel) mismatch("weighted_colsum");
  report("weighted_colsum", s, p);

  const suvr::MemoryBank bank = suvr::MemoryBank::from_rows(bank_rows);
  suvr::Vec probs_serial, probs_parallel;
  s = time_best_of(repeats, [&] {
    probs_serial = suvr::instance_probabilities(bank, query, 0.07, Exec::serial);
  });
  p = time_best_of(repeats, [&] {
    probs_parallel = suvr::instance_probabilities(bank, query, 0.07, Exec::parallel);
  });
  if (probs_serial != probs_parallel) mismatch("instance_probabilities");
  report("instance_probabilities", s, p);

  // One full epoch over a synthetic workload; per-instance phase parallelism
  // and kernel parallelism both capped by the thread setting.
  suvr::BlobSpec spec;
  spec.num_classes = 4;
  spec.per_class = 128;
  spec.feature_dim = 32;
  spec.seed = 5;
  const suvr::LabeledDataset blobs = suvr::make_blobs(spec);
  suvr::TrainConfig cfg;
  cfg.epochs = 1;
  cfg.d = 64;
  cfg.seed = 5;

  const int hw_threads = suvr::kernels::max_threads();
  suvr::kernels::set_max_threads(1);
  suvr::Trainer trainer_serial(blobs.features, cfg);
  s = time_best_of(1, [&] { trainer_serial.run_epoch(); });
  suvr::kernels::set_max_threads(0);
  suvr::Trainer trainer_parallel(blobs.features, cfg);
  p = time_best_of(1, [&] { trainer_parallel.run_epoch(); });
  if (trainer_serial.bank().embeddings() != trainer_parallel.bank().embeddings()) {
    mismatch("train epoch (thread count must not change results)");
  }
  report("train epoch (512x32)", s, p);
  std::printf("\nepoch results identical at 1 and %d thread(s)\n", hw_threads);
  return 0;
}
