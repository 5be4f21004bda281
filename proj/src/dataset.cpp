#include "sda/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace sda {

namespace {

std::vector<std::string> split(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, delim)) out.push_back(field);
  if (!line.empty() && line.back() == delim) out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

bool is_missing(const std::string& s) {
  return s.empty() || s == "NA" || s == "NaN" || s == "nan" || s == "na" || s == "?";
}

void check_unique(const std::vector<std::string>& ids, const char* what) {
  std::unordered_set<std::string> seen;
  for (const auto& id : ids)
    if (!seen.insert(id).second) fail(ErrorCode::DataError, std::string("duplicate ") + what + " id '" + id + "'");
}

}  // namespace

char detect_delimiter(const std::string& header_line) {
  const auto tabs = std::count(header_line.begin(), header_line.end(), '\t');
  const auto commas = std::count(header_line.begin(), header_line.end(), ',');
  return tabs >= commas && tabs > 0 ? '\t' : (commas > 0 ? ',' : '\t');
}

RawMatrix read_matrix(std::istream& in, const LoadOptions& opts) {
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::DataError, "matrix file is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const char delim = detect_delimiter(line);
  auto header = split(line, delim);
  if (header.size() < 2) fail(ErrorCode::DataError, "matrix header needs an id column and at least one data column");

  RawMatrix raw;
  for (std::size_t j = 1; j < header.size(); ++j) raw.column_ids.push_back(trim(header[j]));
  const std::size_t width = raw.column_ids.size();

  std::vector<double> values;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    auto fields = split(line, delim);
    if (fields.size() != width + 1)
      fail(ErrorCode::DataError, "line " + std::to_string(lineno) + ": expected " + std::to_string(width + 1) +
                                     " fields, got " + std::to_string(fields.size()));
    raw.row_ids.push_back(trim(fields[0]));
    for (std::size_t j = 1; j < fields.size(); ++j) {
      const std::string cell = trim(fields[j]);
      if (is_missing(cell)) {
        values.push_back(std::numeric_limits<double>::quiet_NaN());
        continue;
      }
      double v = 0.0;
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (res.ec != std::errc() || res.ptr != cell.data() + cell.size() || !std::isfinite(v))
        fail(ErrorCode::DataError, "line " + std::to_string(lineno) + ": non-numeric cell '" + cell + "'");
      values.push_back(v);
    }
  }
  const auto rows = static_cast<Eigen::Index>(raw.row_ids.size());
  const auto cols = static_cast<Eigen::Index>(width);
  raw.values = Eigen::Map<const RowMatrix>(values.data(), rows, cols);
  if (opts.transpose) {
    raw.values.transposeInPlace();
    std::swap(raw.row_ids, raw.column_ids);
  }
  check_unique(raw.row_ids, "sample");
  check_unique(raw.column_ids, "feature");
  return raw;
}

RawMatrix read_matrix_file(const std::string& path, const LoadOptions& opts) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open matrix file '" + path + "'");
  return read_matrix(in, opts);
}

std::vector<std::pair<std::string, std::string>> read_label_pairs(std::istream& in) {
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  char delim = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    if (!delim) delim = detect_delimiter(line);
    auto fields = split(line, delim);
    if (fields.size() < 2) fail(ErrorCode::DataError, "label line needs sample id and class: '" + line + "'");
    out.emplace_back(trim(fields[0]), trim(fields[1]));
  }
  return out;
}

LabeledDataset make_dataset(RawMatrix raw, const std::vector<std::pair<std::string, std::string>>& label_pairs,
                            const LoadOptions& opts) {
  LabeledDataset ds;
  std::unordered_map<std::string, Eigen::Index> row_of;
  for (std::size_t i = 0; i < raw.row_ids.size(); ++i) row_of[raw.row_ids[i]] = static_cast<Eigen::Index>(i);

  std::map<std::string, std::string> class_of;
  for (std::size_t i = 0; i < label_pairs.size(); ++i) {
    const auto& [id, cls] = label_pairs[i];
    if (i == 0 && !row_of.count(id)) continue;  // header line
    if (cls.empty() || is_missing(cls)) fail(ErrorCode::DataError, "sample '" + id + "' has an empty class");
    auto [it, inserted] = class_of.emplace(id, cls);
    if (!inserted && it->second != cls) fail(ErrorCode::DataError, "conflicting labels for sample '" + id + "'");
  }
  std::set<std::string> names;
  for (const auto& id : raw.row_ids) {
    auto it = class_of.find(id);
    if (it == class_of.end()) fail(ErrorCode::DataError, "sample '" + id + "' has no label");
    names.insert(it->second);
  }
  ds.class_names.assign(names.begin(), names.end());
  if (ds.class_names.size() < 2) fail(ErrorCode::DataError, "need at least two classes");
  for (const auto& id : raw.row_ids) {
    const auto& cls = class_of.at(id);
    ds.labels.push_back(static_cast<int>(std::lower_bound(ds.class_names.begin(), ds.class_names.end(), cls) -
                                         ds.class_names.begin()));
  }

  Matrix& x = raw.values;
  std::vector<Eigen::Index> keep;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    auto col = x.col(j);
    const Eigen::Index missing = col.unaryExpr([](double v) { return std::isnan(v) ? 1.0 : 0.0; }).sum();
    if (missing > 0) {
      if (opts.missing == MissingPolicy::Reject)
        fail(ErrorCode::DataError, "feature '" + raw.column_ids[j] + "' has missing values");
      if (missing == col.size()) fail(ErrorCode::DataError, "feature '" + raw.column_ids[j] + "' is entirely missing");
      double sum = 0.0;
      for (Eigen::Index i = 0; i < col.size(); ++i)
        if (!std::isnan(col[i])) sum += col[i];
      const double mean = sum / static_cast<double>(col.size() - missing);
      for (Eigen::Index i = 0; i < col.size(); ++i)
        if (std::isnan(col[i])) col[i] = mean;
      ds.warnings.push_back("imputed " + std::to_string(missing) + " missing values in feature '" +
                            raw.column_ids[j] + "' with the column mean");
    }
    if (opts.drop_constant && col.size() > 0 && (col.array() == col[0]).all()) {
      ds.excluded_features.push_back(raw.column_ids[j]);
      ds.warnings.push_back("dropped constant feature '" + raw.column_ids[j] + "'");
      continue;
    }
    keep.push_back(j);
  }

  ds.matrix.resize(x.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j) {
    ds.matrix.col(static_cast<Eigen::Index>(j)) = x.col(keep[j]);
    ds.feature_ids.push_back(raw.column_ids[keep[j]]);
  }
  ds.sample_ids = std::move(raw.row_ids);
  return ds;
}

LabeledDataset load_dataset(const std::string& matrix_path, const std::string& labels_path, const LoadOptions& opts) {
  RawMatrix raw = read_matrix_file(matrix_path, opts);
  std::ifstream in(labels_path);
  if (!in) fail(ErrorCode::Io, "cannot open labels file '" + labels_path + "'");
  return make_dataset(std::move(raw), read_label_pairs(in), opts);
}

void write_matrix(std::ostream& out, const Matrix& m, const std::vector<std::string>& row_ids,
                  const std::vector<std::string>& column_ids) {
  out << "sample";
  for (const auto& c : column_ids) out << '\t' << c;
  out << '\n';
  out.precision(17);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    out << row_ids[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << '\t' << m(i, j);
    out << '\n';
  }
}

void write_labels(std::ostream& out, const LabeledDataset& data) {
  out << "sample\tclass\n";
  for (std::size_t i = 0; i < data.sample_ids.size(); ++i)
    out << data.sample_ids[i] << '\t' << data.class_names[static_cast<std::size_t>(data.labels[i])] << '\n';
}

}  // namespace sda
