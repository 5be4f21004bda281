#include "sda/scores.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

namespace sda {

ScoreTable compute_scores(const ShrinkageModel& model) {
  const int k = model.num_classes();
  const double n = model.num_samples();
  ScoreTable out;
  out.scale_factors.resize(k);
  for (int j = 0; j < k; ++j) {
    const double nk = model.class_counts[j];
    // minus sign: mu_k-hat and mu_pool-hat are correlated
    const double se2 = 1.0 / nk - 1.0 / n;
    if (!(se2 > 0.0)) fail(ErrorCode::InvalidArgument, "cat scores need at least two non-empty classes");
    out.scale_factors[j] = 1.0 / std::sqrt(se2);
  }

  Matrix centered = model.class_means.rowwise() - model.pooled_mean.transpose();
  Matrix standardized = centered * model.variances.values.array().rsqrt().matrix().asDiagonal();
  out.t_scores = out.scale_factors.asDiagonal() * standardized;
  out.cat_scores = out.scale_factors.asDiagonal() * model.weights;

  std::tie(out.summary, out.pam_summary) = summarize(out);
  return out;
}

std::pair<Vector, Vector> summarize(const ScoreTable& scores) {
  Vector s = scores.cat_scores.array().square().colwise().sum().transpose();
  Vector s_pam = scores.t_scores.array().abs().colwise().maxCoeff().transpose();
  return {std::move(s), std::move(s_pam)};
}

double hotelling_t2(const ScoreTable& scores, const IndexList& feature_set) {
  require(!feature_set.empty(), "hotelling_t2: empty feature set");
  require(scores.num_classes() == 2, "hotelling_t2: two classes required");
  std::unordered_set<Eigen::Index> seen;
  double t2 = 0.0;
  for (Eigen::Index i : feature_set) {
    require(i >= 0 && i < scores.num_features(), "hotelling_t2: feature index out of range");
    require(seen.insert(i).second, "hotelling_t2: duplicate feature index");
    t2 += scores.cat_scores(0, i) * scores.cat_scores(0, i);
  }
  return t2;
}

IndexList rank_descending(const Vector& values) {
  IndexList idx(static_cast<std::size_t>(values.size()));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::stable_sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) { return values[a] > values[b]; });
  return idx;
}

}  // namespace sda
