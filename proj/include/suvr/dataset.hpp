#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "suvr/numeric.hpp"

namespace suvr {

// Feature matrix with optional labels. Labels ride alongside the features but
// the training path never sees them; only evaluation reads them. Rows are
// l2-normalized at load so raw-feature dot products are bounded.
struct LabeledDataset {
  Matrix features;                          // n x d_in, unit rows
  std::optional<std::vector<int>> labels;   // n entries when present
  std::string name;

  std::size_t size() const { return features.rows(); }
  std::size_t feature_dim() const { return features.cols(); }
};

// Synthetic stand-in for the image benchmarks: unit-vector class centers
// scaled by center_radius, spherical gaussian noise around them.
struct BlobSpec {
  std::size_t num_classes = 3;
  std::size_t per_class = 100;
  std::size_t feature_dim = 16;
  double center_radius = 5.0;
  double noise_sigma = 0.5;
  std::uint64_t seed = 0;
};

// Comma-separated numeric rows; label_column (0-based) is remapped to
// contiguous ids in first-appearance order. Errors carry 1-based file
// line/column diagnostics.
LabeledDataset load_csv(const std::filesystem::path& path, bool has_header,
                        std::optional<std::size_t> label_column);

// IDX container (big-endian): magic [0, 0, dtype, ndims] then ndims u32
// dimension sizes. Unsigned-byte payload only; pixels scaled by 1/255 before
// row normalization. Optional labels file: dtype 0x08, one dimension.
LabeledDataset load_idx(const std::filesystem::path& images_path,
                        const std::optional<std::filesystem::path>& labels_path);

LabeledDataset make_blobs(const BlobSpec& spec);

// Text export: header "n d has_labels", then one line per instance with the
// index, d shortest-round-trip floats, and the label when present. Re-import
// reproduces every double bit for bit.
void export_embeddings(const Matrix& embeddings,
                       const std::optional<std::vector<int>>& labels,
                       const std::filesystem::path& path);

struct EmbeddingFile {
  Matrix embeddings;
  std::optional<std::vector<int>> labels;
};
EmbeddingFile import_embeddings(const std::filesystem::path& path);

// Seeded-permutation holdout split.
struct SplitDataset {
  Matrix train_features;
  std::vector<int> train_labels;   // empty when the dataset has no labels
  Matrix test_features;
  std::vector<int> test_labels;
  std::vector<std::size_t> train_rows;  // original dataset row per train row
  std::vector<std::size_t> test_rows;
};
SplitDataset split_dataset(const LabeledDataset& dataset, std::size_t test_count,
                           std::uint64_t seed);

}  // namespace suvr
