#include "sda/model.hpp"

#include <cmath>

namespace sda {

const char* to_string(Mode m) { return m == Mode::LDA ? "lda" : "dda"; }

Mode parse_mode(const std::string& s) {
  if (s == "lda" || s == "LDA") return Mode::LDA;
  if (s == "dda" || s == "DDA") return Mode::DDA;
  fail(ErrorCode::InvalidArgument, "unknown mode '" + s + "' (expected lda or dda)");
}

int ShrinkageModel::num_samples() const {
  int n = 0;
  for (int c : class_counts) n += c;
  return n;
}

ShrinkageIntensities ShrinkageModel::intensities() const {
  return {correlation.lambda(), variances.lambda_var, priors.lambda_freq};
}

namespace {

Matrix scale_by_inv_sd(const Matrix& rows, const Vector& variances) {
  return rows * variances.array().rsqrt().matrix().asDiagonal();
}

Matrix select_columns(const Matrix& data, const IndexList& columns) {
  Matrix out(data.rows(), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t j = 0; j < columns.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = data.col(columns[j]);
  return out;
}

}  // namespace

void ShrinkageModel::prepare(kernels::Backend backend) {
  const int k = num_classes();
  const Eigen::Index p = num_features();
  if (p == 0) {
    weights = Matrix(k, 0);
    offsets = Vector::Zero(k);
    return;
  }
  Matrix centered = class_means.rowwise() - pooled_mean.transpose();
  weights = correlation.apply_power_rows(scale_by_inv_sd(centered, variances.values), -0.5, backend);

  Matrix mid = (class_means.rowwise() + pooled_mean.transpose()) * 0.5;
  Matrix mid_t = correlation.apply_power_rows(scale_by_inv_sd(mid, variances.values), -0.5, backend);
  offsets = (weights.array() * mid_t.array()).rowwise().sum();
}

ShrinkageModel fit(const Matrix& data, const Labels& labels, const FitOptions& opts) {
  require(static_cast<Eigen::Index>(labels.size()) == data.rows(), "label count differs from sample count");
  const int k = opts.num_classes.value_or(class_count(labels));
  require(k >= 2, "need at least two classes");
  const std::vector<int> counts = class_sizes(labels, k);
  for (int j = 0; j < k; ++j) {
    if (counts[j] == 0) fail(ErrorCode::InvalidArgument, "class " + std::to_string(j) + " has no samples");
    if (counts[j] < 2) fail(ErrorCode::InvalidArgument, "class " + std::to_string(j) + " has a single sample");
  }
  if (!data.allFinite()) fail(ErrorCode::DataError, "data contains non-finite values");

  PooledResiduals pooled;
  pooled.num_classes = k;
  pooled.counts = counts;
  pooled.class_means = kernels::class_means(data, labels, k, opts.backend);
  pooled.residuals = kernels::pooled_residuals(data, labels, pooled.class_means, opts.backend);

  ShrinkageOptions sopts{opts.overrides, opts.backend};
  ShrinkageModel m;
  m.mode = opts.mode;
  m.class_counts = counts;
  m.source_dim = data.cols();
  m.class_means = pooled.class_means;
  const double n = static_cast<double>(data.rows());
  m.pooled_mean = Vector::Zero(data.cols());
  for (int j = 0; j < k; ++j) m.pooled_mean += (counts[j] / n) * m.class_means.row(j).transpose();

  m.variances = shrink_variances(pooled, sopts);
  m.correlation = opts.mode == Mode::LDA ? shrink_correlations(pooled, sopts)
                                         : ShrunkCorrelation::identity(data.cols());
  m.priors = shrink_frequencies(counts, opts.overrides.lambda_freq);
  m.prepare(opts.backend);
  return m;
}

ShrinkageModel fit_restricted(const Matrix& data, const Labels& labels, const IndexList& columns,
                              const FitOptions& opts) {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    require(columns[i] >= 0 && columns[i] < data.cols(), "selected feature index out of range");
    require(i == 0 || columns[i] > columns[i - 1], "selected features must be strictly increasing");
  }
  ShrinkageModel m;
  if (columns.empty()) {
    const int k = opts.num_classes.value_or(class_count(labels));
    m.mode = opts.mode;
    m.class_counts = class_sizes(labels, k);
    for (int c : m.class_counts) require(c >= 1, "class absent from training data");
    m.class_means = Matrix(k, 0);
    m.pooled_mean = Vector(0);
    m.variances.values = m.variances.empirical = Vector(0);
    m.correlation = ShrunkCorrelation::identity(0);
    m.priors = shrink_frequencies(m.class_counts, opts.overrides.lambda_freq);
    m.prepare(opts.backend);
  } else {
    m = fit(select_columns(data, columns), labels, opts);
  }
  m.selected_features = columns;
  m.source_dim = data.cols();
  return m;
}

Matrix feature_weights(const ShrinkageModel& model) { return model.weights; }

int argmax(const Vector& v) {
  int best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = static_cast<int>(i);
  return best;
}

Vector softmax(const Vector& scores) {
  const double mx = scores.maxCoeff();
  Vector e = (scores.array() - mx).exp();
  return e / e.sum();
}

namespace {

Matrix restrict_rows(const ShrinkageModel& model, const Matrix& rows) {
  if (rows.cols() == model.num_features()) return rows;
  if (model.selected_features && rows.cols() == model.source_dim)
    return select_columns(rows, *model.selected_features);
  fail(ErrorCode::InvalidArgument, "sample has " + std::to_string(rows.cols()) + " features, model expects " +
                                       std::to_string(model.num_features()));
}

}  // namespace

Predictions predict(const ShrinkageModel& model, const Matrix& rows) {
  const Matrix x = restrict_rows(model, rows);
  const Eigen::Index m = x.rows();
  const int k = model.num_classes();
  Vector log_prior = model.priors.values.array().log();

  Predictions out;
  out.scores.resize(m, k);
  if (model.num_features() == 0) {
    out.scores = Matrix::Ones(m, 1) * log_prior.transpose();
  } else {
    Matrix u = model.correlation.apply_inv_sqrt_rows(scale_by_inv_sd(x, model.variances.values));
    out.scores = u * model.weights.transpose();
    out.scores.rowwise() += (log_prior - model.offsets).transpose();
  }
  out.posteriors.resize(m, k);
  out.predicted.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    Vector s = out.scores.row(i).transpose();
    out.posteriors.row(i) = softmax(s).transpose();
    out.predicted[i] = argmax(s);
  }
  return out;
}

DiscriminantOutput discriminant_scores(const ShrinkageModel& model, const Vector& x) {
  Predictions p = predict(model, x.transpose());
  return {p.scores.row(0).transpose(), p.posteriors.row(0).transpose(), p.predicted[0]};
}

Vector reference_discriminant(const ShrinkageModel& model, const Vector& x_in) {
  const Eigen::Index p = model.num_features();
  if (p > ShrunkCorrelation::kDenseLimit)
    fail(ErrorCode::InvalidArgument, "reference discriminant is limited to p <= 500");
  const Vector x = restrict_rows(model, x_in.transpose()).row(0).transpose();
  const int k = model.num_classes();
  Vector d(k);
  if (p == 0) return model.priors.values.array().log();

  Vector sd = model.variances.values.array().sqrt();
  Matrix sigma = sd.asDiagonal() * model.correlation.dense() * sd.asDiagonal();
  Eigen::LLT<Matrix> llt(sigma);
  if (llt.info() != Eigen::Success) fail(ErrorCode::Numerical, "covariance is not positive definite");
  Matrix mu_t = model.class_means.transpose();  // p x K
  Matrix solved = llt.solve(mu_t);
  for (int j = 0; j < k; ++j)
    d[j] = solved.col(j).dot(x) - 0.5 * solved.col(j).dot(mu_t.col(j)) + std::log(model.priors.values[j]);
  return d;
}

}  // namespace sda
