#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>

#include "suvr/config.hpp"
#include "suvr/encoder.hpp"
#include "suvr/memory_bank.hpp"
#include "suvr/optimizer.hpp"

namespace suvr {

// Self-contained snapshot of a finished run: resolved configuration, encoder
// parameters, bank rows, and optimizer state. Stored as JSON text; every
// double survives the round trip bit for bit, so a reloaded bank matches the
// saved one exactly.
struct Checkpoint {
  ExperimentConfig config;
  MlpEncoder encoder;
  MemoryBank bank;
  OptimizerState optimizer;
  std::size_t completed_epochs = 0;
  std::optional<double> train_accuracy;  // present when a holdout was scored
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace suvr
