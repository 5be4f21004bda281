#pragma once

// Shrinkage LDA/DDA predictor in the pooled-centroid form
//
//   Delta_k(x) = w_k^T d_k(x) + log(pi_k)
//   w_k        = P^{-1/2} V^{-1/2} (mu_k - mu_pool)
//   d_k(x)     = P^{-1/2} V^{-1/2} (x - (mu_k + mu_pool) / 2)
//
// with the textbook LDA score kept as a dense reference.

#include "sda/shrinkage.hpp"
#include "sda/types.hpp"

#include <optional>
#include <string>

namespace sda {

enum class Mode { LDA, DDA };

const char* to_string(Mode m);
Mode parse_mode(const std::string& s);

struct FitOptions {
  Mode mode = Mode::LDA;
  ShrinkageOverrides overrides;
  /// Number of classes; defaults to max label + 1. Every class must be present.
  std::optional<int> num_classes;
  kernels::Backend backend = kernels::Backend::OpenMP;
};

struct ShrinkageModel {
  Mode mode = Mode::LDA;
  Matrix class_means;   // K x p
  Vector pooled_mean;   // sum_j (n_j / n) mu_j
  ShrunkVariances variances;
  ShrunkCorrelation correlation;  // identity in DDA mode
  ShrunkFrequencies priors;
  std::vector<int> class_counts;
  /// Increasing indices into the columns of the data the model was fit from;
  /// empty optional means all columns.
  std::optional<IndexList> selected_features;
  Eigen::Index source_dim = 0;

  // Derived at fit/load time.
  Matrix weights;  // K x p, row k = w_k
  Vector offsets;  // w_k . P^{-1/2} V^{-1/2} (mu_k + mu_pool) / 2

  int num_classes() const { return static_cast<int>(class_counts.size()); }
  Eigen::Index num_features() const { return class_means.cols(); }
  int num_samples() const;
  ShrinkageIntensities intensities() const;

  /// Recomputes `weights` and `offsets` from the estimated parameters.
  void prepare(kernels::Backend backend = kernels::Backend::OpenMP);
};

struct DiscriminantOutput {
  Vector scores;      // Delta_k
  Vector posteriors;  // softmax of scores
  int predicted = 0;  // argmax, lowest index on ties
};

struct Predictions {
  Matrix scores;       // m x K
  Matrix posteriors;   // m x K
  std::vector<int> predicted;
};

ShrinkageModel fit(const Matrix& data, const Labels& labels, const FitOptions& opts = {});

/// Refits on the given columns only. An empty column set yields a prior-only model.
ShrinkageModel fit_restricted(const Matrix& data, const Labels& labels, const IndexList& columns,
                              const FitOptions& opts = {});

/// K x p matrix of feature weights w_k.
Matrix feature_weights(const ShrinkageModel& model);

/// x may have the model's feature dimension or, for a restricted model, the
/// source dimension (the selected columns are then picked out).
DiscriminantOutput discriminant_scores(const ShrinkageModel& model, const Vector& x);

/// Row-wise discriminant scores for a batch of samples.
Predictions predict(const ShrinkageModel& model, const Matrix& rows);

/// d_k = mu_k^T S^{-1} x - mu_k^T S^{-1} mu_k / 2 + log pi_k with the dense
/// covariance S = V^{1/2} P V^{1/2}. Test oracle only; p <= 500.
Vector reference_discriminant(const ShrinkageModel& model, const Vector& x);

/// Softmax with max subtraction.
Vector softmax(const Vector& scores);

/// Lowest index attaining the maximum.
int argmax(const Vector& v);

}  // namespace sda
