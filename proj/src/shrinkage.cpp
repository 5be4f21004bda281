#include "sda/shrinkage.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace sda {

int class_count(const Labels& labels) {
  int k = 0;
  for (int y : labels) {
    require(y >= 0, "labels must be non-negative");
    k = std::max(k, y + 1);
  }
  return k;
}

std::vector<int> class_sizes(const Labels& labels, int num_classes) {
  std::vector<int> counts(num_classes, 0);
  for (int y : labels) {
    require(y >= 0 && y < num_classes, "label out of range");
    ++counts[y];
  }
  return counts;
}

double median(Vector v) {
  require(v.size() > 0, "median of empty vector");
  const auto n = v.size();
  double* b = v.data();
  std::nth_element(b, b + n / 2, b + n);
  const double hi = b[n / 2];
  if (n % 2 == 1) return hi;
  const double lo = *std::max_element(b, b + n / 2);
  return 0.5 * (lo + hi);
}

// --- ShrunkCorrelation -------------------------------------------------------

ShrunkCorrelation ShrunkCorrelation::identity(Eigen::Index p) {
  ShrunkCorrelation c;
  c.dim_ = p;
  c.lambda_ = 1.0;
  return c;
}

ShrunkCorrelation::ShrunkCorrelation(Matrix standardized, double lambda_corr)
    : standardized_(std::move(standardized)), lambda_(lambda_corr), dim_(standardized_.cols()) {
  require(lambda_ >= 0.0 && lambda_ <= 1.0, "correlation shrinkage intensity outside [0,1]");
  if (lambda_ == 1.0 || dim_ < 2) return;

  const double dof = static_cast<double>(standardized_.rows()) - 1.0;
  Eigen::JacobiSVD<Matrix> svd(standardized_.transpose(), Eigen::ComputeThinU);
  const Vector& sv = svd.singularValues();
  const double tol = sv.size() > 0 ? sv[0] * static_cast<double>(std::max(standardized_.rows(), dim_)) *
                                         std::numeric_limits<double>::epsilon()
                                   : 0.0;
  Eigen::Index rank = 0;
  while (rank < sv.size() && sv[rank] > tol) ++rank;
  basis_ = svd.matrixU().leftCols(rank);
  eigenvalues_ = sv.head(rank).array().square() / dof;
}

ShrunkCorrelation ShrunkCorrelation::from_factors(Matrix standardized, double lambda_corr, Matrix basis,
                                                  Vector eigenvalues, Eigen::Index dim) {
  ShrunkCorrelation c;
  c.standardized_ = std::move(standardized);
  c.lambda_ = lambda_corr;
  c.basis_ = std::move(basis);
  c.eigenvalues_ = std::move(eigenvalues);
  c.dim_ = dim;
  require(c.basis_.cols() == 0 || c.basis_.rows() == dim, "correlation factor dimension mismatch");
  require(c.eigenvalues_.size() == c.basis_.cols(), "correlation factor rank mismatch");
  return c;
}

Matrix ShrunkCorrelation::apply_power_rows(const Matrix& rows, double power, kernels::Backend backend) const {
  require(rows.cols() == dim_, "correlation: vector dimension mismatch");
  if (is_identity()) return rows;

  const Eigen::Index rank = basis_.cols();
  double base = 0.0;
  if (lambda_ > 0.0) {
    base = std::pow(lambda_, power);
  } else if (rank < dim_ && power < 0.0) {
    fail(ErrorCode::Numerical, "correlation matrix is singular and unshrunk (lambda = 0); negative power undefined");
  }
  Vector coef(rank);
  for (Eigen::Index j = 0; j < rank; ++j)
    coef[j] = std::pow(lambda_ + (1.0 - lambda_) * eigenvalues_[j], power) - base;
  return kernels::apply_low_rank(rows, basis_, coef, base, backend);
}

Vector ShrunkCorrelation::apply_inv_sqrt(const Vector& v) const {
  return apply_power_rows(v.transpose(), -0.5).transpose();
}

Vector ShrunkCorrelation::apply_inverse(const Vector& v) const {
  return apply_power_rows(v.transpose(), -1.0).transpose();
}

Matrix ShrunkCorrelation::dense() const {
  require(dim_ <= kDenseLimit, "dense correlation limited to p <= 500");
  if (is_identity()) return Matrix::Identity(dim_, dim_);
  const double dof = static_cast<double>(standardized_.rows()) - 1.0;
  Matrix r = (1.0 - lambda_) * (standardized_.transpose() * standardized_) / dof;
  r.diagonal().setOnes();
  for (Eigen::Index i = 0; i < dim_; ++i)
    for (Eigen::Index j = 0; j < i; ++j) r(i, j) = r(j, i);
  return r;
}

Matrix ShrunkCorrelation::dense_apply_power_rows(const Matrix& rows, double power) const {
  require(rows.cols() == dim_, "correlation: vector dimension mismatch");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(dense());
  const Vector& ev = eig.eigenvalues();
  if (power < 0.0 && ev.minCoeff() <= 0.0)
    fail(ErrorCode::Numerical, "dense correlation is not positive definite");
  const Matrix& q = eig.eigenvectors();
  Matrix m = q * ev.array().pow(power).matrix().asDiagonal() * q.transpose();
  return rows * m;  // m is symmetric
}

// --- estimators --------------------------------------------------------------

PooledResiduals pooled_residuals(const Matrix& data, const Labels& labels, kernels::Backend backend) {
  require(static_cast<Eigen::Index>(labels.size()) == data.rows(), "label count differs from sample count");
  PooledResiduals out;
  out.num_classes = class_count(labels);
  out.counts = class_sizes(labels, out.num_classes);
  out.class_means = kernels::class_means(data, labels, out.num_classes, backend);
  out.residuals = kernels::pooled_residuals(data, labels, out.class_means, backend);
  return out;
}

Matrix standardize_residuals(const Matrix& residuals) {
  const Eigen::Index n = residuals.rows();
  Matrix z(residuals.rows(), residuals.cols());
  for (Eigen::Index j = 0; j < residuals.cols(); ++j) {
    const double ss = residuals.col(j).squaredNorm();
    if (!(ss > 0.0)) fail(ErrorCode::DataError, "feature " + std::to_string(j) + " has zero within-class variance");
    z.col(j) = residuals.col(j) * std::sqrt(static_cast<double>(n - 1) / ss);
  }
  return z;
}

ShrunkCorrelation shrink_correlations(const PooledResiduals& pooled, const ShrinkageOptions& opts) {
  const Eigen::Index n = pooled.residuals.rows(), p = pooled.residuals.cols();
  if (n < 3) fail(ErrorCode::InvalidArgument, "correlation shrinkage needs at least 3 samples");
  require(p >= 1, "correlation shrinkage needs at least one feature");

  Matrix z = standardize_residuals(pooled.residuals);
  double lambda = 1.0;
  if (opts.overrides.lambda_corr) {
    lambda = *opts.overrides.lambda_corr;
  } else if (p > 1) {
    const auto sums = kernels::correlation_sums(z, opts.backend);
    lambda = sums.sum_r2 > 0.0 ? std::min(1.0, sums.sum_var / sums.sum_r2) : 1.0;
  }
  return ShrunkCorrelation(std::move(z), lambda);
}

ShrunkCorrelation shrink_correlations(const Matrix& data, const Labels& labels, const ShrinkageOptions& opts) {
  return shrink_correlations(pooled_residuals(data, labels, opts.backend), opts);
}

ShrunkVariances shrink_variances(const PooledResiduals& pooled, const ShrinkageOptions& opts) {
  const Eigen::Index n = pooled.residuals.rows();
  const int k = pooled.num_classes;
  if (n < 3) fail(ErrorCode::InvalidArgument, "variance shrinkage needs at least 3 samples");
  if (n <= k) fail(ErrorCode::InvalidArgument, "variance shrinkage needs more samples than classes");

  const auto moments = kernels::squared_moments(pooled.residuals, opts.backend);
  const double nd = static_cast<double>(n);
  const double dof = nd - k;
  const double df_scale = (nd - 1.0) / dof;

  ShrunkVariances out;
  out.empirical = moments.sum_sq / dof;
  for (Eigen::Index i = 0; i < out.empirical.size(); ++i)
    if (!(out.empirical[i] > 0.0))
      fail(ErrorCode::DataError, "feature " + std::to_string(i) + " has zero within-class variance");

  out.median_target = median(out.empirical);
  if (opts.overrides.lambda_var) {
    out.lambda_var = *opts.overrides.lambda_var;
    require(out.lambda_var >= 0.0 && out.lambda_var <= 1.0, "variance intensity outside [0,1]");
  } else {
    const double var_scale = nd / ((nd - 1.0) * (nd - 1.0) * (nd - 1.0)) * df_scale * df_scale;
    const double num = var_scale * moments.sq_dev.sum();
    const double den = (out.empirical.array() - out.median_target).square().sum();
    out.lambda_var = den > 0.0 ? std::min(1.0, num / den) : 1.0;
  }
  out.values = out.lambda_var * out.median_target + (1.0 - out.lambda_var) * out.empirical.array();
  return out;
}

ShrunkVariances shrink_variances(const Matrix& data, const Labels& labels, const ShrinkageOptions& opts) {
  return shrink_variances(pooled_residuals(data, labels, opts.backend), opts);
}

double frequency_intensity(const std::vector<int>& class_counts) {
  const std::size_t k = class_counts.size();
  require(k >= 2, "frequency shrinkage needs at least two classes");
  double n = 0.0;
  for (int c : class_counts) {
    if (c <= 0) fail(ErrorCode::InvalidArgument, "empty class in frequency shrinkage");
    n += c;
  }
  double sum_sq = 0.0, dev = 0.0;
  for (int c : class_counts) {
    const double f = c / n;
    sum_sq += f * f;
    dev += (1.0 / k - f) * (1.0 / k - f);
  }
  const double den = (n - 1.0) * dev;
  if (!(den > 0.0)) return 1.0;
  return std::clamp((1.0 - sum_sq) / den, 0.0, 1.0);
}

ShrunkFrequencies shrink_frequencies(const std::vector<int>& class_counts, std::optional<double> lambda_override) {
  ShrunkFrequencies out;
  const double estimated = frequency_intensity(class_counts);
  out.lambda_freq = lambda_override.value_or(estimated);
  require(out.lambda_freq >= 0.0 && out.lambda_freq <= 1.0, "frequency intensity outside [0,1]");
  const auto k = static_cast<Eigen::Index>(class_counts.size());
  const double n = std::accumulate(class_counts.begin(), class_counts.end(), 0.0);
  out.values.resize(k);
  for (Eigen::Index j = 0; j < k; ++j)
    out.values[j] = out.lambda_freq / static_cast<double>(k) + (1.0 - out.lambda_freq) * class_counts[j] / n;
  return out;
}

}  // namespace sda
