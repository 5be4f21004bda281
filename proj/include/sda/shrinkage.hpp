#pragma once

// James-Stein shrinkage estimators for the pooled correlation matrix, the
// pooled variances and the class frequencies.

#include "sda/kernels.hpp"
#include "sda/types.hpp"

#include <optional>

namespace sda {

struct ShrinkageIntensities {
  double lambda_corr = 1.0;
  double lambda_var = 1.0;
  double lambda_freq = 1.0;
};

/// Fixes an intensity instead of estimating it. Used for raw-moment oracles
/// and for reloading a serialized model.
struct ShrinkageOverrides {
  std::optional<double> lambda_corr;
  std::optional<double> lambda_var;
  std::optional<double> lambda_freq;
};

struct ShrunkVariances {
  Vector values;     // v_i^shrink
  Vector empirical;  // pooled v_i, denominator n - K
  double lambda_var = 1.0;
  double median_target = 0.0;
};

struct ShrunkFrequencies {
  Vector values;  // sums to one
  double lambda_freq = 1.0;
};

/// R_shrink = (1 - lambda) R_emp + lambda I, held implicitly through the
/// standardized residuals Z (n x p) and the thin SVD of Z. Powers of R_shrink
/// act on the span of the right singular vectors and as lambda^a on its
/// orthogonal complement, so applying R^a costs O(p r) per vector.
class ShrunkCorrelation {
 public:
  ShrunkCorrelation() = default;

  /// Identity correlation of dimension p (the diagonal model).
  static ShrunkCorrelation identity(Eigen::Index p);

  /// `standardized` must have column sums of squares equal to n - 1.
  ShrunkCorrelation(Matrix standardized, double lambda_corr);

  /// Rebuilds from a stored factorization (no SVD), for deserialization.
  static ShrunkCorrelation from_factors(Matrix standardized, double lambda_corr, Matrix basis,
                                        Vector eigenvalues, Eigen::Index dim);

  Eigen::Index dim() const { return dim_; }
  double lambda() const { return lambda_; }
  bool is_identity() const { return basis_.cols() == 0 || lambda_ == 1.0; }
  const Matrix& standardized_data() const { return standardized_; }
  /// Right singular vectors of Z with nonzero singular value (p x r).
  const Matrix& basis() const { return basis_; }
  /// Nonzero eigenvalues of R_emp along `basis()`.
  const Vector& eigenvalues() const { return eigenvalues_; }

  /// R_shrink^a applied to each row of `rows` (m x p).
  Matrix apply_power_rows(const Matrix& rows, double power,
                          kernels::Backend backend = kernels::Backend::OpenMP) const;

  Vector apply_inv_sqrt(const Vector& v) const;
  Vector apply_inverse(const Vector& v) const;
  Matrix apply_inv_sqrt_rows(const Matrix& rows) const { return apply_power_rows(rows, -0.5); }

  /// Materialized p x p matrix with unit diagonal. p <= 500.
  Matrix dense() const;

  /// Same as apply_power_rows but through a dense eigendecomposition of
  /// dense(). p <= 500; kept as an oracle for the low-rank path.
  Matrix dense_apply_power_rows(const Matrix& rows, double power) const;

  static constexpr Eigen::Index kDenseLimit = 500;

 private:
  Matrix standardized_;
  Matrix basis_;
  Vector eigenvalues_;
  double lambda_ = 1.0;
  Eigen::Index dim_ = 0;
};

struct ShrinkageOptions {
  ShrinkageOverrides overrides;
  kernels::Backend backend = kernels::Backend::OpenMP;
};

/// Per-class-mean-centered data, computed once and shared by the estimators.
struct PooledResiduals {
  Matrix residuals;   // n x p
  Matrix class_means; // K x p
  std::vector<int> counts;
  int num_classes = 0;
};

PooledResiduals pooled_residuals(const Matrix& data, const Labels& labels,
                                 kernels::Backend backend = kernels::Backend::OpenMP);

ShrunkCorrelation shrink_correlations(const Matrix& data, const Labels& labels,
                                      const ShrinkageOptions& opts = {});
ShrunkCorrelation shrink_correlations(const PooledResiduals& pooled, const ShrinkageOptions& opts = {});

/// Standardized residuals (columns scaled to sum of squares n - 1).
Matrix standardize_residuals(const Matrix& residuals);

ShrunkVariances shrink_variances(const Matrix& data, const Labels& labels,
                                 const ShrinkageOptions& opts = {});
ShrunkVariances shrink_variances(const PooledResiduals& pooled, const ShrinkageOptions& opts = {});

ShrunkFrequencies shrink_frequencies(const std::vector<int>& class_counts,
                                     std::optional<double> lambda_override = std::nullopt);

/// Estimated lambda_3 for the given counts, before any override.
double frequency_intensity(const std::vector<int>& class_counts);

/// Median with the average of the middle pair for even length.
double median(Vector v);

}  // namespace sda
