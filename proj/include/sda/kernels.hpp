#pragma once

// Data-parallel inner loops of the training and prediction paths.
//
// Every kernel has a serial reference and an OpenMP variant. The OpenMP
// variants never use reduction clauses: partial results are written per
// index and summed serially, so output is bitwise identical for any thread
// count. The serial variants are the plain textbook loops and are kept for
// testing and benchmarking.

#include "sda/types.hpp"

namespace sda::kernels {

enum class Backend { Serial, OpenMP };

/// K x p matrix of per-class means.
Matrix class_means(const Matrix& x, const Labels& labels, int num_classes, Backend backend);

/// x minus the mean of each row's class.
Matrix pooled_residuals(const Matrix& x, const Labels& labels, const Matrix& means, Backend backend);

/// Column sums of w = r^2 and of (w - mean(w))^2 over the rows of a residual matrix.
struct SquaredMoments {
  Vector sum_sq;   // sum_k r_ki^2
  Vector sq_dev;   // sum_k (r_ki^2 - mean_k r_ki^2)^2
};
SquaredMoments squared_moments(const Matrix& residuals, Backend backend);

/// Off-diagonal sums needed for the correlation shrinkage intensity.
/// `z` holds standardized columns (sum of squares n - 1 each).
struct CorrelationSums {
  double sum_r2 = 0.0;    // sum_{i != j} r_ij^2
  double sum_var = 0.0;   // sum_{i != j} Var(r_ij)
};
/// Serial backend: direct O(n p^2) pair loop. OpenMP backend: O(n^2 p) Gram identity.
CorrelationSums correlation_sums(const Matrix& z, Backend backend);

/// Applies base * v + W diag(coef) W^T v to every row v of `rows` (m x p).
/// W is p x r with orthonormal columns.
Matrix apply_low_rank(const Matrix& rows, const Matrix& basis, const Vector& coef, double base,
                      Backend backend);

/// Threads OpenMP will use for the next parallel region (1 without OpenMP).
int max_threads();
void set_threads(int n);

}  // namespace sda::kernels
