#include "suvr/config.hpp"

#include <fstream>
#include <initializer_list>
#include <string>

#include "suvr/errors.hpp"

namespace suvr {

namespace {

using nlohmann::json;

// Lane for a blob seed derived from the training seed (lanes 1..5 belong to
// the trainer).
constexpr std::uint64_t kDatasetSeedLane = 6;

[[noreturn]] void bad_field(const std::string& path, const std::string& why) {
  throw ConfigError(path + ": " + why);
}

void require_object(const json& v, const std::string& path) {
  if (!v.is_object()) bad_field(path, "expected an object");
}

void check_keys(const json& obj, const std::string& path,
                std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* key : allowed) {
      if (it.key() == key) {
        known = true;
        break;
      }
    }
    if (!known) bad_field(path + "." + it.key(), "unknown field");
  }
}

const json* find(const json& obj, const char* key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

double as_number(const json& v, const std::string& path) {
  if (!v.is_number()) bad_field(path, "expected a number");
  return v.get<double>();
}

// Text parsing lands non-negative integers in the unsigned slot, but
// documents assembled in code may carry them as signed; accept both.
bool non_negative_integer(const json& v) {
  return v.is_number_unsigned() ||
         (v.is_number_integer() && v.get<std::int64_t>() >= 0);
}

std::size_t as_count(const json& v, const std::string& path) {
  if (!non_negative_integer(v)) bad_field(path, "expected a non-negative integer");
  return v.get<std::size_t>();
}

std::uint64_t as_seed(const json& v, const std::string& path) {
  if (!non_negative_integer(v)) bad_field(path, "expected a non-negative integer seed");
  return v.get<std::uint64_t>();
}

std::string as_string(const json& v, const std::string& path) {
  if (!v.is_string()) bad_field(path, "expected a string");
  return v.get<std::string>();
}

bool as_bool(const json& v, const std::string& path) {
  if (!v.is_boolean()) bad_field(path, "expected true or false");
  return v.get<bool>();
}

DatasetSpec dataset_from_json(const json& doc) {
  require_object(doc, "dataset");
  DatasetSpec spec;
  const json* kind = find(doc, "kind");
  if (!kind) bad_field("dataset.kind", "required");
  const std::string kind_name = as_string(*kind, "dataset.kind");

  if (kind_name == "csv") {
    spec.kind = DatasetSpec::Kind::csv;
    check_keys(doc, "dataset", {"kind", "path", "has_header", "label_column"});
    const json* path = find(doc, "path");
    if (!path) bad_field("dataset.path", "required for kind csv");
    spec.path = as_string(*path, "dataset.path");
    if (const json* v = find(doc, "has_header")) {
      spec.has_header = as_bool(*v, "dataset.has_header");
    }
    if (const json* v = find(doc, "label_column")) {
      spec.label_column = as_count(*v, "dataset.label_column");
    }
  } else if (kind_name == "idx") {
    spec.kind = DatasetSpec::Kind::idx;
    check_keys(doc, "dataset", {"kind", "images", "labels"});
    const json* images = find(doc, "images");
    if (!images) bad_field("dataset.images", "required for kind idx");
    spec.images_path = as_string(*images, "dataset.images");
    if (const json* v = find(doc, "labels")) {
      spec.labels_path = as_string(*v, "dataset.labels");
    }
  } else if (kind_name == "blobs") {
    spec.kind = DatasetSpec::Kind::blobs;
    check_keys(doc, "dataset",
               {"kind", "classes", "per_class", "dim", "center_radius",
                "noise_sigma", "seed"});
    if (const json* v = find(doc, "classes")) {
      spec.blobs.num_classes = as_count(*v, "dataset.classes");
    }
    if (const json* v = find(doc, "per_class")) {
      spec.blobs.per_class = as_count(*v, "dataset.per_class");
    }
    if (const json* v = find(doc, "dim")) {
      spec.blobs.feature_dim = as_count(*v, "dataset.dim");
    }
    if (const json* v = find(doc, "center_radius")) {
      spec.blobs.center_radius = as_number(*v, "dataset.center_radius");
    }
    if (const json* v = find(doc, "noise_sigma")) {
      spec.blobs.noise_sigma = as_number(*v, "dataset.noise_sigma");
    }
    if (const json* v = find(doc, "seed")) {
      spec.blobs.seed = as_seed(*v, "dataset.seed");
      spec.blob_seed_explicit = true;
    }
  } else {
    bad_field("dataset.kind", "expected csv, idx, or blobs; got '" + kind_name + "'");
  }
  return spec;
}

json dataset_to_json(const DatasetSpec& spec) {
  json doc;
  switch (spec.kind) {
    case DatasetSpec::Kind::csv:
      doc["kind"] = "csv";
      doc["path"] = spec.path;
      doc["has_header"] = spec.has_header;
      if (spec.label_column) doc["label_column"] = *spec.label_column;
      break;
    case DatasetSpec::Kind::idx:
      doc["kind"] = "idx";
      doc["images"] = spec.images_path;
      if (spec.labels_path) doc["labels"] = *spec.labels_path;
      break;
    case DatasetSpec::Kind::blobs:
      doc["kind"] = "blobs";
      doc["classes"] = spec.blobs.num_classes;
      doc["per_class"] = spec.blobs.per_class;
      doc["dim"] = spec.blobs.feature_dim;
      doc["center_radius"] = spec.blobs.center_radius;
      doc["noise_sigma"] = spec.blobs.noise_sigma;
      doc["seed"] = spec.blobs.seed;
      break;
  }
  return doc;
}

TrainConfig train_from_json(const json& doc, const std::string& path) {
  require_object(doc, path);
  check_keys(doc, path,
             {"strategy", "k", "m", "extra_negatives", "tau", "epochs",
              "batch_size", "base_lr", "nesterov_mu", "momentum", "reset_policy",
              "warmup_epochs", "seed", "d", "hidden"});
  TrainConfig cfg;
  if (const json* v = find(doc, "strategy")) {
    cfg.strategy = strategy_from_string(as_string(*v, path + ".strategy"));
  }
  if (const json* v = find(doc, "k")) cfg.k = as_count(*v, path + ".k");
  if (const json* v = find(doc, "m")) cfg.m = as_count(*v, path + ".m");
  if (const json* v = find(doc, "extra_negatives")) {
    cfg.extra_negatives = as_count(*v, path + ".extra_negatives");
  }
  if (const json* v = find(doc, "tau")) cfg.tau = as_number(*v, path + ".tau");
  if (const json* v = find(doc, "epochs")) cfg.epochs = as_count(*v, path + ".epochs");
  if (const json* v = find(doc, "batch_size")) {
    cfg.batch_size = as_count(*v, path + ".batch_size");
  }
  if (const json* v = find(doc, "base_lr")) {
    cfg.base_lr = as_number(*v, path + ".base_lr");
  }
  if (const json* v = find(doc, "nesterov_mu")) {
    cfg.nesterov_mu = as_number(*v, path + ".nesterov_mu");
  }
  if (const json* v = find(doc, "momentum")) {
    cfg.momentum = as_number(*v, path + ".momentum");
  }
  if (const json* v = find(doc, "reset_policy")) {
    cfg.reset_policy = reset_policy_from_string(as_string(*v, path + ".reset_policy"));
  }
  if (const json* v = find(doc, "warmup_epochs")) {
    cfg.warmup_epochs = as_count(*v, path + ".warmup_epochs");
  }
  if (const json* v = find(doc, "seed")) cfg.seed = as_seed(*v, path + ".seed");
  if (const json* v = find(doc, "d")) cfg.d = as_count(*v, path + ".d");
  if (const json* v = find(doc, "hidden")) {
    if (!v->is_array()) bad_field(path + ".hidden", "expected an array of widths");
    cfg.hidden.clear();
    for (std::size_t i = 0; i < v->size(); ++i) {
      cfg.hidden.push_back(
          as_count((*v)[i], path + ".hidden[" + std::to_string(i) + "]"));
    }
  }
  return cfg;
}

}  // namespace

nlohmann::json to_json(const TrainConfig& cfg) {
  json doc;
  doc["strategy"] = to_string(cfg.strategy);
  doc["k"] = cfg.k;
  doc["m"] = cfg.m;
  doc["extra_negatives"] = cfg.extra_negatives;
  doc["tau"] = cfg.tau;
  doc["epochs"] = cfg.epochs;
  doc["batch_size"] = cfg.batch_size;
  doc["base_lr"] = cfg.base_lr;
  doc["nesterov_mu"] = cfg.nesterov_mu;
  doc["momentum"] = cfg.momentum;
  doc["reset_policy"] = to_string(cfg.reset_policy);
  doc["warmup_epochs"] = cfg.warmup_epochs;
  doc["seed"] = cfg.seed;
  doc["d"] = cfg.d;
  doc["hidden"] = cfg.hidden;
  return doc;
}

TrainConfig train_config_from_json(const nlohmann::json& doc) {
  return train_from_json(doc, "train");
}

ExperimentConfig experiment_from_json(const nlohmann::json& doc) {
  require_object(doc, "config");
  check_keys(doc, "config",
             {"dataset", "train", "eval", "test_count", "metrics_path",
              "checkpoint_path"});
  ExperimentConfig cfg;
  if (const json* v = find(doc, "dataset")) cfg.dataset = dataset_from_json(*v);
  if (const json* v = find(doc, "train")) cfg.train = train_from_json(*v, "train");
  if (const json* v = find(doc, "eval")) {
    require_object(*v, "eval");
    check_keys(*v, "eval", {"k_eval"});
    if (const json* k = find(*v, "k_eval")) {
      cfg.eval.k_eval = as_count(*k, "eval.k_eval");
    }
  }
  if (const json* v = find(doc, "test_count")) {
    cfg.test_count = as_count(*v, "test_count");
  }
  if (const json* v = find(doc, "metrics_path")) {
    cfg.metrics_path = as_string(*v, "metrics_path");
  }
  if (const json* v = find(doc, "checkpoint_path")) {
    cfg.checkpoint_path = as_string(*v, "checkpoint_path");
  }
  return cfg;
}

nlohmann::json to_json(const ExperimentConfig& cfg) {
  json doc;
  doc["dataset"] = dataset_to_json(cfg.dataset);
  doc["train"] = to_json(cfg.train);
  doc["eval"] = json{{"k_eval", cfg.eval.k_eval}};
  doc["test_count"] = cfg.test_count;
  doc["metrics_path"] = cfg.metrics_path;
  doc["checkpoint_path"] = cfg.checkpoint_path;
  return doc;
}

void resolve(ExperimentConfig& cfg) {
  if (cfg.dataset.kind == DatasetSpec::Kind::blobs && !cfg.dataset.blob_seed_explicit) {
    cfg.dataset.blobs.seed = mix_seed(cfg.train.seed, kDatasetSeedLane);
  }
  validate(cfg.train);
  validate(cfg.eval);
}

ExperimentConfig load_experiment_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("config: cannot open " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file " + path + ": " + e.what());
  }
  return experiment_from_json(doc);
}

LabeledDataset load_dataset(const DatasetSpec& spec) {
  switch (spec.kind) {
    case DatasetSpec::Kind::csv:
      return load_csv(spec.path, spec.has_header, spec.label_column);
    case DatasetSpec::Kind::idx: {
      std::optional<std::filesystem::path> labels;
      if (spec.labels_path) labels = *spec.labels_path;
      return load_idx(spec.images_path, labels);
    }
    case DatasetSpec::Kind::blobs:
      return make_blobs(spec.blobs);
  }
  throw ConfigError("dataset.kind: unknown value");
}

}  // namespace suvr
