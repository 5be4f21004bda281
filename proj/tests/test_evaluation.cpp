#include "oracle.hpp"

#include "sda/evaluation.hpp"

#include <doctest.h>

#include <algorithm>
#include <set>

using namespace sda;

namespace {

LabeledDataset null_dataset(std::uint64_t seed, int per_class, Eigen::Index p) {
  SyntheticSpec spec;
  spec.class_sizes = {per_class, per_class};
  spec.num_features = p;
  spec.fraction_nonnull = 0.0;
  return generate_synthetic(spec, seed).dataset;
}

}  // namespace

TEST_CASE("seed derivation and fold assignment are deterministic") {
  CHECK(derive_seed(1, 0) == derive_seed(1, 0));
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));

  Labels y;
  for (int i = 0; i < 37; ++i) y.push_back(i % 3 == 0 ? 1 : 0);
  CvPlan plan;
  plan.folds = 5;
  const auto a = fold_assignment(y, 2, plan, 3);
  CHECK(a == fold_assignment(y, 2, plan, 3));
  CHECK(a != fold_assignment(y, 2, plan, 4));
}

TEST_CASE("stratified folds balance every class to within one sample") {
  std::mt19937_64 rng(50);
  std::uniform_int_distribution<int> sizes(10, 40);
  for (int t = 0; t < 20; ++t) {
    const int k = 2 + t % 3;
    Labels y;
    for (int c = 0; c < k; ++c)
      for (int i = sizes(rng); i > 0; --i) y.push_back(c);
    std::shuffle(y.begin(), y.end(), rng);
    CvPlan plan;
    plan.folds = 3 + t % 8;
    plan.seed = static_cast<std::uint64_t>(t);
    const auto fold = fold_assignment(y, k, plan, 0);
    std::vector<int> fold_sizes(plan.folds, 0);
    for (int f : fold) ++fold_sizes[f];
    CHECK(*std::max_element(fold_sizes.begin(), fold_sizes.end()) -
              *std::min_element(fold_sizes.begin(), fold_sizes.end()) <= 1);
    for (int c = 0; c < k; ++c) {
      std::vector<int> per_fold(plan.folds, 0);
      for (std::size_t i = 0; i < y.size(); ++i)
        if (y[i] == c) ++per_fold[fold[i]];
      CHECK(*std::max_element(per_fold.begin(), per_fold.end()) -
                *std::min_element(per_fold.begin(), per_fold.end()) <= 1);
    }
  }
}

TEST_CASE("fold assignment errors") {
  Labels y{0, 0, 0, 1, 1, 1, 1, 1, 1, 1};
  CvPlan plan;
  plan.folds = 4;
  CHECK_THROWS_AS(fold_assignment(y, 2, plan, 0), Error);  // class 0 has 3 < 4
  plan.balanced = false;
  CHECK_NOTHROW(fold_assignment(y, 2, plan, 0));
  plan.folds = 11;
  CHECK_THROWS_AS(fold_assignment(y, 2, plan, 0), Error);
}

TEST_CASE("separable data has zero CV error") {
  SyntheticSpec spec;
  spec.class_sizes = {20, 20};
  spec.num_features = 250;
  spec.fraction_nonnull = 0.04;
  spec.effect_size = 8.0;
  auto data = generate_synthetic(spec, 7).dataset;
  CvPlan plan;
  plan.folds = 5;
  plan.repetitions = 2;
  for (Mode mode : {Mode::LDA, Mode::DDA}) {
    Pipeline pipe;
    pipe.mode = mode;
    const auto r = cross_validate(data, pipe, plan);
    CHECK(r.mean_error == 0.0);
    CHECK(r.split_errors.size() == 10);
  }
}

TEST_CASE("permuted labels give chance-level error") {
  SyntheticSpec spec;
  spec.class_sizes = {30, 30};
  spec.num_features = 300;
  spec.fraction_nonnull = 0.05;
  spec.effect_size = 3.0;
  auto data = generate_synthetic(spec, 8).dataset;
  std::mt19937_64 rng(9);
  std::shuffle(data.labels.begin(), data.labels.end(), rng);
  CvPlan plan;
  plan.folds = 5;
  plan.repetitions = 4;
  const auto r = cross_validate(data, Pipeline{}, plan);
  CHECK(r.mean_error > 0.4);
  CHECK(r.mean_error < 0.6);
}

TEST_CASE("10 folds x 20 repetitions give 200 deterministic split errors") {
  auto data = null_dataset(11, 15, 40);
  Pipeline pipe;
  pipe.rule.kind = RuleKind::All;
  CvPlan plan;
  plan.seed = 99;
  const auto a = cross_validate(data, pipe, plan);
  CHECK(a.split_errors.size() == 200);
  CHECK(a.split_feature_counts.size() == 200);
  const auto b = cross_validate(data, pipe, plan);
  CHECK(a.split_errors == b.split_errors);
  CHECK(a.mean_error == b.mean_error);
  plan.seed = 100;
  CHECK(cross_validate(data, pipe, plan).split_errors != a.split_errors);
  const auto j = to_json(a);
  CHECK(j["splits"] == 200);
  CHECK(j["config"]["plan"]["seed"] == 99);
}

TEST_CASE("results do not depend on the thread count") {
  SyntheticSpec spec;
  spec.num_features = 250;
  spec.class_sizes = {12, 12};
  auto data = generate_synthetic(spec, 12).dataset;
  CvPlan plan;
  plan.folds = 4;
  plan.repetitions = 3;
  const int saved = kernels::max_threads();
  kernels::set_threads(1);
  const auto one = cross_validate(data, Pipeline{}, plan);
  kernels::set_threads(4);
  const auto four = cross_validate(data, Pipeline{}, plan);
  kernels::set_threads(saved);
  CHECK(one.split_errors == four.split_errors);
  CHECK(one.split_feature_counts == four.split_feature_counts);
}

TEST_CASE("a class too small for its training folds is a stratification error") {
  auto data = null_dataset(13, 10, 20);
  // keep only two samples of class 1
  Labels y;
  std::vector<Eigen::Index> keep;
  int ones = 0;
  for (Eigen::Index i = 0; i < data.num_samples(); ++i) {
    if (data.labels[i] == 1 && ones++ >= 2) continue;
    keep.push_back(i);
  }
  LabeledDataset small = data;
  small.matrix.resize(static_cast<Eigen::Index>(keep.size()), data.num_features());
  small.labels.clear();
  for (std::size_t r = 0; r < keep.size(); ++r) {
    small.matrix.row(static_cast<Eigen::Index>(r)) = data.matrix.row(keep[r]);
    small.labels.push_back(data.labels[keep[r]]);
  }
  Pipeline pipe;
  pipe.rule.kind = RuleKind::All;
  CvPlan plan;
  plan.folds = 3;
  plan.repetitions = 1;
  plan.balanced = false;
  try {
    cross_validate(small, pipe, plan);
    FAIL("expected a stratification error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("stratification") != std::string::npos);
  }
}

TEST_CASE("selection runs inside each split: a test-fold canary is never kept") {
  SyntheticSpec spec;
  spec.class_sizes = {30, 30};
  spec.num_features = 300;
  spec.fraction_nonnull = 0.02;
  spec.effect_size = 1.5;
  auto data = generate_synthetic(spec, 14).dataset;
  CvPlan plan;
  plan.folds = 5;
  plan.repetitions = 1;
  plan.seed = 3;
  const auto fold = fold_assignment(data.labels, 2, plan, 0);
  // canary column: shouts the label on fold-0 samples; elsewhere it
  // alternates +-1 within each class so the split-0 training rows carry
  // exactly zero class-mean difference
  const Eigen::Index canary = 150;
  std::vector<double> sign(2, 1.0);
  for (Eigen::Index i = 0; i < data.num_samples(); ++i) {
    const int c = data.labels[i];
    if (fold[i] == 0) {
      data.matrix(i, canary) = 20.0 * c;
    } else {
      data.matrix(i, canary) = sign[c];
      sign[c] = -sign[c];
    }
  }
  for (Eigen::Index i = data.num_samples() - 1; i >= 0; --i) {
    // an odd class count leaves one unmatched +1; zero it
    const int c = data.labels[i];
    if (fold[i] != 0 && sign[c] < 0.0) {
      data.matrix(i, canary) = 0.0;
      sign[c] = 1.0;
    }
  }

  auto run = [&](const LabeledDataset& d) {
    std::vector<IndexList> kept(plan.folds);
    cross_validate(d, Pipeline{}, plan, [&](const SplitRecord& rec) { kept[rec.fold] = rec.kept; });
    return kept;
  };
  const auto kept = run(data);
  CHECK_FALSE(std::binary_search(kept[0].begin(), kept[0].end(), canary));
  // sanity: the canary is strong whenever its samples are in training
  for (int f = 1; f < plan.folds; ++f) CHECK(std::binary_search(kept[f].begin(), kept[f].end(), canary));

  // the split-0 selection cannot depend on any test-row value
  LabeledDataset scrambled = data;
  std::mt19937_64 rng(15);
  std::normal_distribution<double> N;
  for (Eigen::Index i = 0; i < data.num_samples(); ++i)
    if (fold[i] == 0)
      for (Eigen::Index j = 0; j < data.num_features(); ++j) scrambled.matrix(i, j) = 5.0 * N(rng);
  CHECK(run(scrambled)[0] == kept[0]);
}

TEST_CASE("synthetic generator") {
  SyntheticSpec spec;
  spec.class_sizes = {40, 35, 25};
  spec.num_features = 50;
  spec.fraction_nonnull = 0.1;
  spec.block_size = 5;
  spec.block_correlation = 0.0;
  const auto a = generate_synthetic(spec, 21);
  CHECK(a.dataset.num_samples() == 100);
  CHECK(a.dataset.num_features() == 50);
  CHECK(a.nonnull == IndexList{0, 10, 20, 30, 40});
  CHECK(a.dataset.class_names == std::vector<std::string>{"c1", "c2", "c3"});
  CHECK(a.dataset.matrix == generate_synthetic(spec, 21).dataset.matrix);
  CHECK(a.dataset.matrix != generate_synthetic(spec, 22).dataset.matrix);

  SUBCASE("rho = 0 gives near-identity correlation") {
    spec.class_sizes = {2000, 2000};
    spec.fraction_nonnull = 0.0;
    const Matrix x = generate_synthetic(spec, 23).dataset.matrix;
    const Matrix c = x.rowwise() - x.colwise().mean();
    Matrix r = c.transpose() * c / (x.rows() - 1.0);
    const Vector d = r.diagonal().array().rsqrt();
    r = d.asDiagonal() * r * d.asDiagonal();
    CHECK((r - Matrix::Identity(50, 50)).cwiseAbs().maxCoeff() < 0.08);
  }
  SUBCASE("within-block correlation matches rho") {
    spec.class_sizes = {2000, 2000};
    spec.fraction_nonnull = 0.0;
    spec.block_correlation = 0.7;
    const Matrix x = generate_synthetic(spec, 24).dataset.matrix;
    const Matrix c = x.rowwise() - x.colwise().mean();
    Matrix r = c.transpose() * c / (x.rows() - 1.0);
    const Vector d = r.diagonal().array().rsqrt();
    r = d.asDiagonal() * r * d.asDiagonal();
    CHECK(r(0, 1) == doctest::Approx(0.7).epsilon(0.05));
    CHECK(r(3, 4) == doctest::Approx(0.7).epsilon(0.05));
    CHECK(std::abs(r(4, 5)) < 0.08);
  }
  SUBCASE("errors") {
    spec.block_correlation = -0.5;  // 1 + 4 rho < 0: not PD
    CHECK_THROWS_AS(generate_synthetic(spec, 1), Error);
    spec.block_correlation = 1.0;
    CHECK_THROWS_AS(generate_synthetic(spec, 1), Error);
    spec.block_correlation = 0.0;
    spec.class_sizes = {10};
    CHECK_THROWS_AS(generate_synthetic(spec, 1), Error);
  }
}
