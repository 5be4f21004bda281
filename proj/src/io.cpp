#include "sda/io.hpp"

#include <fstream>
#include <ostream>
#include <sstream>

namespace sda {

namespace {

using nlohmann::json;

json vec_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector vec_from(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// Row-major nested arrays.
json mat_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vec_json(m.row(i).transpose()));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", rows}};
}

Matrix mat_from(const json& j) {
  const auto r = j.at("rows").get<Eigen::Index>();
  const auto c = j.at("cols").get<Eigen::Index>();
  Matrix m(r, c);
  const auto& data = j.at("data");
  if (static_cast<Eigen::Index>(data.size()) != r) fail(ErrorCode::DataError, "model file: matrix row count mismatch");
  for (Eigen::Index i = 0; i < r; ++i) {
    Vector row = vec_from(data[static_cast<std::size_t>(i)]);
    if (row.size() != c) fail(ErrorCode::DataError, "model file: matrix column count mismatch");
    m.row(i) = row.transpose();
  }
  return m;
}

void write_config_comment(std::ostream& out, const json& config) {
  if (!config.is_null()) out << "# config: " << config.dump() << '\n';
}

}  // namespace

json model_to_json(const ModelFile& file) {
  const ShrinkageModel& m = file.model;
  json j;
  j["format"] = "sda-model";
  j["version"] = kModelFormatVersion;
  j["mode"] = to_string(m.mode);
  j["class_names"] = file.class_names;
  j["feature_ids"] = file.feature_ids;
  j["class_counts"] = m.class_counts;
  j["source_dim"] = m.source_dim;
  j["selected_features"] = m.selected_features ? json(*m.selected_features) : json(nullptr);
  j["class_means"] = mat_json(m.class_means);
  j["pooled_mean"] = vec_json(m.pooled_mean);
  j["variances"] = {{"values", vec_json(m.variances.values)},
                    {"empirical", vec_json(m.variances.empirical)},
                    {"lambda", m.variances.lambda_var},
                    {"median_target", m.variances.median_target}};
  j["priors"] = {{"values", vec_json(m.priors.values)}, {"lambda", m.priors.lambda_freq}};
  j["correlation"] = {{"lambda", m.correlation.lambda()},
                      {"dim", m.correlation.dim()},
                      {"standardized_data", mat_json(m.correlation.standardized_data())},
                      {"basis", mat_json(m.correlation.basis())},
                      {"eigenvalues", vec_json(m.correlation.eigenvalues())}};
  j["config"] = file.config;
  return j;
}

ModelFile model_from_json(const json& j) {
  if (j.value("format", "") != "sda-model") fail(ErrorCode::DataError, "not an sda model file");
  const int version = j.at("version").get<int>();
  if (version != kModelFormatVersion)
    fail(ErrorCode::DataError, "unsupported model format version " + std::to_string(version));

  ModelFile f;
  ShrinkageModel& m = f.model;
  try {
    m.mode = parse_mode(j.at("mode").get<std::string>());
    f.class_names = j.at("class_names").get<std::vector<std::string>>();
    f.feature_ids = j.at("feature_ids").get<std::vector<std::string>>();
    m.class_counts = j.at("class_counts").get<std::vector<int>>();
    m.source_dim = j.at("source_dim").get<Eigen::Index>();
    if (!j.at("selected_features").is_null()) m.selected_features = j.at("selected_features").get<IndexList>();
    m.class_means = mat_from(j.at("class_means"));
    m.pooled_mean = vec_from(j.at("pooled_mean"));
    const auto& v = j.at("variances");
    m.variances.values = vec_from(v.at("values"));
    m.variances.empirical = vec_from(v.at("empirical"));
    m.variances.lambda_var = v.at("lambda").get<double>();
    m.variances.median_target = v.at("median_target").get<double>();
    const auto& pr = j.at("priors");
    m.priors.values = vec_from(pr.at("values"));
    m.priors.lambda_freq = pr.at("lambda").get<double>();
    const auto& c = j.at("correlation");
    m.correlation = ShrunkCorrelation::from_factors(mat_from(c.at("standardized_data")), c.at("lambda").get<double>(),
                                                    mat_from(c.at("basis")), vec_from(c.at("eigenvalues")),
                                                    c.at("dim").get<Eigen::Index>());
    f.config = j.value("config", json());
  } catch (const json::exception& e) {
    fail(ErrorCode::DataError, std::string("malformed model file: ") + e.what());
  }
  const auto p = m.class_means.cols();
  if (m.pooled_mean.size() != p || m.variances.values.size() != p || m.correlation.dim() != p ||
      m.priors.values.size() != m.num_classes() || m.class_means.rows() != m.num_classes())
    fail(ErrorCode::DataError, "model file: inconsistent dimensions");
  m.prepare();
  return f;
}

void save_model(const std::string& path, const ModelFile& file) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::Io, "cannot write model file '" + path + "'");
  out << model_to_json(file).dump(1) << '\n';
}

ModelFile load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open model file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail(ErrorCode::DataError, std::string("model file is not valid JSON: ") + e.what());
  }
  return model_from_json(j);
}

void write_score_table(std::ostream& out, const ScoreTable& scores, const std::vector<std::string>& feature_ids,
                       const std::vector<std::string>& class_names, const json& config) {
  write_config_comment(out, config);
  out << "feature";
  for (const auto& c : class_names) out << "\tt." << c;
  for (const auto& c : class_names) out << "\tcat." << c;
  out << "\tS\tS_pam\n";
  out.precision(17);
  for (Eigen::Index i = 0; i < scores.num_features(); ++i) {
    out << feature_ids[static_cast<std::size_t>(i)];
    for (int k = 0; k < scores.num_classes(); ++k) out << '\t' << scores.t_scores(k, i);
    for (int k = 0; k < scores.num_classes(); ++k) out << '\t' << scores.cat_scores(k, i);
    out << '\t' << scores.summary[i] << '\t' << scores.pam_summary[i] << '\n';
  }
}

void write_selection_report(std::ostream& out, const FeatureSelection& sel, const std::vector<std::string>& feature_ids,
                            const json& config) {
  write_config_comment(out, config);
  out << "feature\tS\tz\tpvalue\tlocal_fdr\tkept\trule\n";
  out.precision(17);
  std::vector<bool> kept(static_cast<std::size_t>(sel.summary.size()), false);
  for (Eigen::Index i : sel.result.kept) kept[static_cast<std::size_t>(i)] = true;
  const char* rule = to_string(sel.result.rule.kind);
  for (Eigen::Index i = 0; i < sel.summary.size(); ++i) {
    out << feature_ids[static_cast<std::size_t>(i)] << '\t' << sel.summary[i];
    if (sel.fdr) {
      out << '\t' << sel.fdr->transformed[i] << '\t' << sel.fdr->pvalues[i] << '\t' << sel.fdr->local_fdr[i];
    } else {
      out << "\tNA\tNA\tNA";
    }
    out << '\t' << (kept[static_cast<std::size_t>(i)] ? 1 : 0) << '\t' << rule << '\n';
  }
}

void write_predictions(std::ostream& out, const Predictions& pred, const std::vector<std::string>& sample_ids,
                       const std::vector<std::string>& class_names, const json& config) {
  write_config_comment(out, config);
  out << "sample\tpredicted";
  for (const auto& c : class_names) out << "\tpost." << c;
  out << '\n';
  out.precision(17);
  for (std::size_t i = 0; i < pred.predicted.size(); ++i) {
    out << sample_ids[i] << '\t' << class_names[static_cast<std::size_t>(pred.predicted[i])];
    for (Eigen::Index k = 0; k < pred.posteriors.cols(); ++k) out << '\t' << pred.posteriors(static_cast<Eigen::Index>(i), k);
    out << '\n';
  }
}

}  // namespace sda
