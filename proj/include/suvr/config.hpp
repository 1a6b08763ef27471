#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "suvr/dataset.hpp"
#include "suvr/trainer.hpp"

namespace suvr {

// Where the features come from. Exactly one kind is active; the unused
// fields stay at their defaults.
struct DatasetSpec {
  enum class Kind { csv, idx, blobs };
  Kind kind = Kind::blobs;

  // csv
  std::string path;
  bool has_header = false;
  std::optional<std::size_t> label_column;

  // idx
  std::string images_path;
  std::optional<std::string> labels_path;

  // blobs; seed is resolved against the training seed when the config file
  // leaves it out, so one --seed flag governs the whole run.
  BlobSpec blobs;
  bool blob_seed_explicit = false;
};

struct ExperimentConfig {
  DatasetSpec dataset;
  TrainConfig train;
  EvalConfig eval;
  std::size_t test_count = 0;  // holdout rows; 0 trains on everything
  std::string metrics_path;    // empty: no metrics file
  std::string checkpoint_path; // empty: no checkpoint
};

// Strict parse: unknown keys and wrong types fail with the offending field's
// dotted path. Parsing does not resolve derived fields; call resolve() after
// any flag overrides.
ExperimentConfig experiment_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const ExperimentConfig& cfg);

nlohmann::json to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& doc);

// Fills derived fields (currently: an unspecified blob seed becomes a lane
// of the training seed) and validates everything.
void resolve(ExperimentConfig& cfg);

ExperimentConfig load_experiment_file(const std::string& path);

LabeledDataset load_dataset(const DatasetSpec& spec);

}  // namespace suvr
