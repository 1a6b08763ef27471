#include "suvr/checkpoint.hpp"

#include <fstream>
#include <string>

#include <json.hpp>

#include "suvr/errors.hpp"

namespace suvr {

namespace {

using nlohmann::json;

constexpr const char* kFormat = "suvr-checkpoint";
constexpr int kVersion = 1;

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (double x : m.row(r)) row.push_back(x);
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& rows, const std::string& what) {
  if (!rows.is_array() || rows.empty() || !rows[0].is_array() || rows[0].empty()) {
    throw ParseError("checkpoint: " + what + " must be a non-empty array of rows");
  }
  const std::size_t n = rows.size();
  const std::size_t d = rows[0].size();
  Matrix m(n, d);
  for (std::size_t r = 0; r < n; ++r) {
    if (!rows[r].is_array() || rows[r].size() != d) {
      throw ParseError("checkpoint: " + what + " row " + std::to_string(r) +
                       " is ragged");
    }
    for (std::size_t c = 0; c < d; ++c) {
      if (!rows[r][c].is_number()) {
        throw ParseError("checkpoint: " + what + " holds a non-numeric entry");
      }
      m(r, c) = rows[r][c].get<double>();
    }
  }
  return m;
}

Vec vec_from_json(const json& arr, const std::string& what) {
  if (!arr.is_array()) throw ParseError("checkpoint: " + what + " must be an array");
  Vec v;
  v.reserve(arr.size());
  for (const json& x : arr) {
    if (!x.is_number()) {
      throw ParseError("checkpoint: " + what + " holds a non-numeric entry");
    }
    v.push_back(x.get<double>());
  }
  return v;
}

const json& field(const json& doc, const char* key) {
  auto it = doc.find(key);
  if (it == doc.end()) {
    throw ParseError("checkpoint: missing field '" + std::string(key) + "'");
  }
  return *it;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  json doc;
  doc["format"] = kFormat;
  doc["version"] = kVersion;
  doc["config"] = to_json(ckpt.config);

  json layers = json::array();
  for (const Layer& layer : ckpt.encoder.layers()) {
    json l;
    l["activation"] = to_string(layer.activation);
    l["weights"] = matrix_to_json(layer.weights);
    l["biases"] = layer.biases;
    layers.push_back(std::move(l));
  }
  doc["encoder"] = {{"layers", std::move(layers)}};
  doc["bank"] = {{"momentum", ckpt.bank.momentum()},
                 {"rows", matrix_to_json(ckpt.bank.embeddings())}};

  json velocity = json::array();
  for (const Vec& block : ckpt.optimizer.velocity) velocity.push_back(block);
  doc["optimizer"] = {{"mu", ckpt.optimizer.mu},
                      {"base_lr", ckpt.optimizer.base_lr},
                      {"velocity", std::move(velocity)}};
  doc["completed_epochs"] = ckpt.completed_epochs;
  if (ckpt.train_accuracy) doc["train_accuracy"] = *ckpt.train_accuracy;

  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path);
  if (!out) throw IoError("checkpoint: cannot open " + path.string() + " for writing");
  out << doc.dump() << '\n';
  if (!out) throw IoError("checkpoint: write to " + path.string() + " failed");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("checkpoint: cannot open " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError("checkpoint " + path.string() + ": " + e.what());
  }
  if (!doc.is_object() || field(doc, "format") != kFormat) {
    throw ParseError("checkpoint: " + path.string() + " is not a recognized snapshot");
  }
  if (field(doc, "version").get<int>() != kVersion) {
    throw ParseError("checkpoint: unsupported version " +
                     field(doc, "version").dump());
  }

  ExperimentConfig config = experiment_from_json(field(doc, "config"));
  resolve(config);

  const json& enc = field(doc, "encoder");
  std::vector<Layer> layers;
  for (const json& l : field(enc, "layers")) {
    Layer layer;
    layer.activation = activation_from_string(field(l, "activation").get<std::string>());
    layer.weights = matrix_from_json(field(l, "weights"), "encoder weights");
    layer.biases = vec_from_json(field(l, "biases"), "encoder biases");
    layers.push_back(std::move(layer));
  }
  MlpEncoder encoder(std::move(layers));

  const json& bank_doc = field(doc, "bank");
  const json& momentum = field(bank_doc, "momentum");
  if (!momentum.is_number()) throw ParseError("checkpoint: bank.momentum not a number");
  MemoryBank bank = MemoryBank::restore(
      matrix_from_json(field(bank_doc, "rows"), "bank rows"), momentum.get<double>());

  const json& opt_doc = field(doc, "optimizer");
  OptimizerState optimizer;
  optimizer.mu = field(opt_doc, "mu").get<double>();
  optimizer.base_lr = field(opt_doc, "base_lr").get<double>();
  for (const json& block : field(opt_doc, "velocity")) {
    optimizer.velocity.push_back(vec_from_json(block, "optimizer velocity"));
  }

  std::optional<double> accuracy;
  if (auto it = doc.find("train_accuracy"); it != doc.end()) {
    accuracy = it->get<double>();
  }

  return Checkpoint{std::move(config),
                    std::move(encoder),
                    std::move(bank),
                    std::move(optimizer),
                    field(doc, "completed_epochs").get<std::size_t>(),
                    accuracy};
}

}  // namespace suvr
