#pragma once

#include "sda/model.hpp"

#include <utility>

namespace sda {

/// Per-class t-scores and correlation-adjusted t-scores (cat scores)
/// between each class mean and the pooled mean.
struct ScoreTable {
  Matrix t_scores;       // K x p
  Matrix cat_scores;     // K x p, row k = P^{-1/2} t_k
  Vector summary;        // S_i  = sum_k cat_ki^2
  Vector pam_summary;    // S'_i = max_k |t_ki|
  Vector scale_factors;  // (1/n_k - 1/n)^{-1/2}

  Eigen::Index num_features() const { return t_scores.cols(); }
  int num_classes() const { return static_cast<int>(t_scores.rows()); }
};

/// Scores from the model's shrunk variances and correlations. Fit the model
/// with zero intensity overrides to get raw-moment scores.
ScoreTable compute_scores(const ShrinkageModel& model);

/// (S, S') recomputed from the score matrices.
std::pair<Vector, Vector> summarize(const ScoreTable& scores);

/// Sum of squared cat scores over a feature set; two classes only.
double hotelling_t2(const ScoreTable& scores, const IndexList& feature_set);

/// Feature indices ordered by decreasing value; ties keep the lower index first.
IndexList rank_descending(const Vector& values);

}  // namespace sda
