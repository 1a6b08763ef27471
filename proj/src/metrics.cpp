#include "suvr/metrics.hpp"

#include "suvr/errors.hpp"

namespace suvr {

MetricsWriter::MetricsWriter(const std::filesystem::path& path) : path_(path) {
  if (path_.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path_.parent_path(), ec);
  }
  out_.open(path_, std::ios::trunc);
  if (!out_) throw IoError("metrics: cannot open " + path_.string() + " for writing");
}

void MetricsWriter::write(const nlohmann::json& record) {
  out_ << record.dump() << '\n';
  out_.flush();
  if (!out_) throw IoError("metrics: write to " + path_.string() + " failed");
}

nlohmann::json epoch_record(const EpochRecord& rec, bool include_wall) {
  nlohmann::json doc;
  doc["type"] = "epoch";
  doc["epoch"] = rec.epoch;
  doc["lr"] = rec.lr;
  doc["loss"] = {{"total", rec.mean_loss.total},
                 {"instance", rec.mean_loss.instance_term},
                 {"positive", rec.mean_loss.positive_term},
                 {"negative", rec.mean_loss.negative_term}};
  if (include_wall) doc["wall_seconds"] = rec.wall_seconds;
  return doc;
}

nlohmann::json ablation_record(const AblationCell& cell) {
  nlohmann::json doc;
  doc["type"] = "ablation_cell";
  doc["strategy"] = to_string(cell.strategy);
  doc["k"] = cell.k;
  doc["reset_policy"] = to_string(cell.reset_policy);
  doc["accuracy_per_seed"] = cell.per_seed_accuracy;
  doc["mean_accuracy"] = cell.mean_accuracy;
  doc["std_accuracy"] = cell.std_accuracy;
  return doc;
}

}  // namespace suvr
