#pragma once

#include "sda/types.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace sda {

/// n x p observations (rows = samples) with class labels.
struct LabeledDataset {
  Matrix matrix;
  std::vector<std::string> feature_ids;
  std::vector<std::string> sample_ids;
  Labels labels;                         // indices into class_names
  std::vector<std::string> class_names;  // sorted
  std::vector<std::string> excluded_features;  // dropped at load time
  std::vector<std::string> warnings;

  Eigen::Index num_samples() const { return matrix.rows(); }
  Eigen::Index num_features() const { return matrix.cols(); }
  int num_classes() const { return static_cast<int>(class_names.size()); }
};

enum class MissingPolicy { Reject, ImputeMean };

struct LoadOptions {
  /// Input has features as rows and samples as columns.
  bool transpose = false;
  MissingPolicy missing = MissingPolicy::Reject;
  /// Drop features with zero variance (otherwise they are a hard error downstream).
  bool drop_constant = true;
};

/// Tab- or comma-delimited text, detected from the header line.
char detect_delimiter(const std::string& header_line);

/// Reads a numeric matrix file (header row of column ids, first column of
/// row ids) without labels.
struct RawMatrix {
  Matrix values;
  std::vector<std::string> row_ids;
  std::vector<std::string> column_ids;
};
RawMatrix read_matrix(std::istream& in, const LoadOptions& opts = {});
RawMatrix read_matrix_file(const std::string& path, const LoadOptions& opts = {});

/// Reads `sample_id<delim>class` lines; '#' comments; an optional header is
/// recognized when its first field matches no known sample id.
std::vector<std::pair<std::string, std::string>> read_label_pairs(std::istream& in);

LabeledDataset make_dataset(RawMatrix raw, const std::vector<std::pair<std::string, std::string>>& labels,
                            const LoadOptions& opts = {});

LabeledDataset load_dataset(const std::string& matrix_path, const std::string& labels_path,
                            const LoadOptions& opts = {});

/// Writes the canonical orientation (rows = samples), tab-delimited.
void write_matrix(std::ostream& out, const Matrix& m, const std::vector<std::string>& row_ids,
                  const std::vector<std::string>& column_ids);
void write_labels(std::ostream& out, const LabeledDataset& data);

}  // namespace sda
