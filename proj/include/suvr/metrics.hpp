#pragma once

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "suvr/trainer.hpp"

namespace suvr {

// Line-delimited structured records: one JSON object per line, flushed per
// line so an interrupted run leaves only complete records. Object keys are
// emitted sorted, so identical records serialize to identical bytes.
class MetricsWriter {
 public:
  explicit MetricsWriter(const std::filesystem::path& path);

  void write(const nlohmann::json& record);

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

// Wall time is opt-in: the default record stream depends only on the config
// and seed, so two identical runs produce identical files.
nlohmann::json epoch_record(const EpochRecord& rec, bool include_wall);
nlohmann::json ablation_record(const AblationCell& cell);

}  // namespace suvr
