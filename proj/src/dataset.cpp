#include "suvr/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "suvr/errors.hpp"

namespace suvr {

namespace {

void normalize_rows(Matrix& features, const std::string& source) {
  for (std::size_t r = 0; r < features.rows(); ++r) {
    double n = norm2(features.row(r));
    if (n < kNormFloor) {
      throw ParseError(source + ": row " + std::to_string(r) +
                       " has zero norm and cannot be unit-scaled");
    }
    for (double& x : features.row(r)) x /= n;
  }
}

double parse_double_field(const std::string& field, std::size_t line_no,
                          std::size_t col_no) {
  const char* begin = field.data();
  const char* end = begin + field.size();
  while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
  while (end > begin && (end[-1] == ' ' || end[-1] == '\t' || end[-1] == '\r')) --end;
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || begin == end) {
    throw ParseError("csv: line " + std::to_string(line_no) + ", column " +
                     std::to_string(col_no + 1) + ": cannot parse '" +
                     std::string(begin, end) + "' as a number");
  }
  return value;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::string trimmed(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  std::size_t e = s.find_last_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, e - b + 1);
}

std::uint32_t read_be32(std::istream& in, const std::string& what) {
  unsigned char bytes[4];
  in.read(reinterpret_cast<char*>(bytes), 4);
  if (!in) throw ParseError("idx: truncated while reading " + what);
  return (std::uint32_t(bytes[0]) << 24) | (std::uint32_t(bytes[1]) << 16) |
         (std::uint32_t(bytes[2]) << 8) | std::uint32_t(bytes[3]);
}

std::string format_double(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  (void)ec;
  return std::string(buf, ptr);
}

}  // namespace

LabeledDataset load_csv(const std::filesystem::path& path, bool has_header,
                        std::optional<std::size_t> label_column) {
  std::ifstream in(path);
  if (!in) throw IoError("csv: cannot open " + path.string());

  std::vector<std::vector<double>> rows;
  std::vector<std::string> raw_labels;
  std::size_t expected_cols = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && has_header) continue;
    if (trimmed(line).empty()) continue;
    std::vector<std::string> fields = split_fields(line);
    if (expected_cols == 0) {
      expected_cols = fields.size();
      if (label_column && *label_column >= expected_cols) {
        throw ParseError("csv: label column " + std::to_string(*label_column) +
                         " out of range for " + std::to_string(expected_cols) +
                         " columns");
      }
      if (expected_cols < (label_column ? 2u : 1u)) {
        throw ParseError("csv: line " + std::to_string(line_no) +
                         ": no feature columns");
      }
    } else if (fields.size() != expected_cols) {
      throw ParseError("csv: line " + std::to_string(line_no) + ": expected " +
                       std::to_string(expected_cols) + " columns, got " +
                       std::to_string(fields.size()));
    }
    std::vector<double> row;
    row.reserve(expected_cols);
    for (std::size_t c = 0; c < fields.size(); ++c) {
      if (label_column && c == *label_column) {
        raw_labels.push_back(trimmed(fields[c]));
        continue;
      }
      row.push_back(parse_double_field(fields[c], line_no, c));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError("csv: " + path.string() + " holds no data rows");

  LabeledDataset out;
  out.name = path.filename().string();
  out.features = Matrix(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::copy(rows[r].begin(), rows[r].end(), out.features.row(r).begin());
  }
  if (label_column) {
    // First-appearance order keeps the id assignment stable across loads.
    std::map<std::string, int> ids;
    std::vector<int> labels;
    labels.reserve(raw_labels.size());
    int next_id = 0;
    for (const std::string& raw : raw_labels) {
      auto [it, inserted] = ids.try_emplace(raw, next_id);
      if (inserted) ++next_id;
      labels.push_back(it->second);
    }
    out.labels = std::move(labels);
  }
  normalize_rows(out.features, "csv " + path.string());
  return out;
}

LabeledDataset load_idx(const std::filesystem::path& images_path,
                        const std::optional<std::filesystem::path>& labels_path) {
  std::ifstream in(images_path, std::ios::binary);
  if (!in) throw IoError("idx: cannot open " + images_path.string());

  unsigned char magic[4];
  in.read(reinterpret_cast<char*>(magic), 4);
  if (!in || magic[0] != 0 || magic[1] != 0) {
    throw ParseError("idx: " + images_path.string() + " has a bad magic header");
  }
  if (magic[2] != 0x08) {
    throw ParseError("idx: dtype 0x" + std::to_string(magic[2]) +
                     " unsupported; only unsigned byte (0x08) is accepted");
  }
  unsigned ndims = magic[3];
  if (ndims < 2 || ndims > 4) {
    throw ParseError("idx: image file must have 2..4 dimensions, got " +
                     std::to_string(ndims));
  }
  std::vector<std::uint32_t> dims(ndims);
  for (unsigned i = 0; i < ndims; ++i) dims[i] = read_be32(in, "dimension " + std::to_string(i));
  std::size_t count = dims[0];
  std::size_t d_in = 1;
  for (unsigned i = 1; i < ndims; ++i) d_in *= dims[i];
  if (count == 0 || d_in == 0) throw ParseError("idx: zero-sized image file");

  std::vector<unsigned char> pixels(count * d_in);
  in.read(reinterpret_cast<char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
  if (static_cast<std::size_t>(in.gcount()) != pixels.size()) {
    throw ParseError("idx: " + images_path.string() + " truncated: expected " +
                     std::to_string(pixels.size()) + " pixel bytes");
  }

  LabeledDataset out;
  out.name = images_path.filename().string();
  out.features = Matrix(count, d_in);
  for (std::size_t r = 0; r < count; ++r) {
    auto row = out.features.row(r);
    for (std::size_t c = 0; c < d_in; ++c) {
      row[c] = static_cast<double>(pixels[r * d_in + c]) / 255.0;
    }
    if (norm2(row) < kNormFloor) {
      throw ParseError("idx: image " + std::to_string(r) +
                       " is all-zero and cannot be unit-scaled");
    }
  }

  if (labels_path) {
    std::ifstream lin(*labels_path, std::ios::binary);
    if (!lin) throw IoError("idx: cannot open " + labels_path->string());
    unsigned char lmagic[4];
    lin.read(reinterpret_cast<char*>(lmagic), 4);
    if (!lin || lmagic[0] != 0 || lmagic[1] != 0 || lmagic[2] != 0x08 || lmagic[3] != 1) {
      throw ParseError("idx: " + labels_path->string() +
                       " is not an unsigned-byte 1-d label file");
    }
    std::uint32_t label_count = read_be32(lin, "label count");
    if (label_count != count) {
      throw ParseError("idx: label count " + std::to_string(label_count) +
                       " does not match image count " + std::to_string(count));
    }
    std::vector<unsigned char> raw(label_count);
    lin.read(reinterpret_cast<char*>(raw.data()), label_count);
    if (static_cast<std::size_t>(lin.gcount()) != raw.size()) {
      throw ParseError("idx: " + labels_path->string() + " truncated");
    }
    out.labels = std::vector<int>(raw.begin(), raw.end());
  }

  normalize_rows(out.features, "idx " + images_path.string());
  return out;
}

LabeledDataset make_blobs(const BlobSpec& spec) {
  if (spec.num_classes == 0 || spec.per_class == 0 || spec.feature_dim == 0) {
    throw ConfigError("make_blobs: counts must be >= 1");
  }
  if (!(spec.center_radius > 0.0) || !(spec.noise_sigma > 0.0)) {
    throw ConfigError("make_blobs: center_radius and noise_sigma must be positive");
  }
  SeededRng rng(spec.seed);
  SeededRng center_rng = rng.child(1);
  SeededRng noise_rng = rng.child(2);

  Matrix centers = random_unit_rows(spec.num_classes, spec.feature_dim, center_rng);
  std::size_t n = spec.num_classes * spec.per_class;

  LabeledDataset out;
  out.name = "blobs";
  out.features = Matrix(n, spec.feature_dim);
  std::vector<int> labels(n);
  for (std::size_t cls = 0; cls < spec.num_classes; ++cls) {
    for (std::size_t j = 0; j < spec.per_class; ++j) {
      std::size_t r = cls * spec.per_class + j;
      auto row = out.features.row(r);
      auto center = centers.row(cls);
      for (std::size_t c = 0; c < spec.feature_dim; ++c) {
        row[c] = spec.center_radius * center[c] + spec.noise_sigma * noise_rng.next_normal();
      }
      labels[r] = static_cast<int>(cls);
    }
  }
  out.labels = std::move(labels);
  normalize_rows(out.features, "blobs");
  return out;
}

void export_embeddings(const Matrix& embeddings,
                       const std::optional<std::vector<int>>& labels,
                       const std::filesystem::path& path) {
  if (embeddings.rows() == 0) throw IoError("export_embeddings: nothing to export");
  if (labels && labels->size() != embeddings.rows()) {
    throw DimensionMismatch("export_embeddings: " + std::to_string(labels->size()) +
                            " labels for " + std::to_string(embeddings.rows()) + " rows");
  }
  std::ofstream out(path);
  if (!out) throw IoError("export_embeddings: cannot open " + path.string());
  out << embeddings.rows() << ' ' << embeddings.cols() << ' ' << (labels ? 1 : 0) << '\n';
  for (std::size_t r = 0; r < embeddings.rows(); ++r) {
    out << r;
    for (double x : embeddings.row(r)) out << ' ' << format_double(x);
    if (labels) out << ' ' << (*labels)[r];
    out << '\n';
  }
  if (!out) throw IoError("export_embeddings: write to " + path.string() + " failed");
}

EmbeddingFile import_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("import_embeddings: cannot open " + path.string());
  std::size_t n = 0, d = 0;
  int has_labels = 0;
  if (!(in >> n >> d >> has_labels) || n == 0 || d == 0) {
    throw ParseError("import_embeddings: bad header in " + path.string());
  }
  EmbeddingFile out;
  out.embeddings = Matrix(n, d);
  std::vector<int> labels;
  for (std::size_t r = 0; r < n; ++r) {
    std::size_t index = 0;
    if (!(in >> index) || index != r) {
      throw ParseError("import_embeddings: row " + std::to_string(r) +
                       " has a bad index field");
    }
    for (std::size_t c = 0; c < d; ++c) {
      std::string token;
      if (!(in >> token)) {
        throw ParseError("import_embeddings: row " + std::to_string(r) + " truncated");
      }
      double value = 0.0;
      auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
      if (ec != std::errc() || ptr != token.data() + token.size()) {
        throw ParseError("import_embeddings: row " + std::to_string(r) + ", value " +
                         std::to_string(c) + ": cannot parse '" + token + "'");
      }
      out.embeddings(r, c) = value;
    }
    if (has_labels) {
      int label = 0;
      if (!(in >> label)) {
        throw ParseError("import_embeddings: row " + std::to_string(r) + " lacks a label");
      }
      labels.push_back(label);
    }
  }
  if (has_labels) out.labels = std::move(labels);
  return out;
}

SplitDataset split_dataset(const LabeledDataset& dataset, std::size_t test_count,
                           std::uint64_t seed) {
  if (test_count >= dataset.size()) {
    throw ConfigError("split_dataset: test_count " + std::to_string(test_count) +
                      " leaves no training data out of " + std::to_string(dataset.size()));
  }
  std::vector<std::size_t> order(dataset.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  SeededRng rng(seed);
  rng.shuffle(order);

  std::size_t train_count = dataset.size() - test_count;
  SplitDataset out;
  out.train_rows.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(train_count));
  out.test_rows.assign(order.begin() + static_cast<std::ptrdiff_t>(train_count), order.end());
  out.train_features = Matrix(train_count, dataset.feature_dim());
  out.test_features = Matrix(test_count, dataset.feature_dim());
  for (std::size_t r = 0; r < train_count; ++r) {
    auto src = dataset.features.row(out.train_rows[r]);
    std::copy(src.begin(), src.end(), out.train_features.row(r).begin());
  }
  for (std::size_t r = 0; r < test_count; ++r) {
    auto src = dataset.features.row(out.test_rows[r]);
    std::copy(src.begin(), src.end(), out.test_features.row(r).begin());
  }
  if (dataset.labels) {
    for (std::size_t r : out.train_rows) out.train_labels.push_back((*dataset.labels)[r]);
    for (std::size_t r : out.test_rows) out.test_labels.push_back((*dataset.labels)[r]);
  }
  return out;
}

}  // namespace suvr
