#include "sda/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <random>

namespace sda {

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::vector<int> fold_assignment(const Labels& labels, int num_classes, const CvPlan& plan, int repetition) {
  require(plan.folds >= 2, "need at least two folds");
  require(plan.repetitions >= 1, "need at least one repetition");
  const std::size_t n = labels.size();
  require(static_cast<std::size_t>(plan.folds) <= n, "more folds than samples");
  std::mt19937_64 rng(derive_seed(plan.seed, static_cast<std::uint64_t>(repetition)));
  std::vector<int> fold(n, -1);

  if (plan.balanced) {
    const auto counts = class_sizes(labels, num_classes);
    for (int c = 0; c < num_classes; ++c)
      if (counts[c] < plan.folds)
        fail(ErrorCode::InvalidArgument, "class " + std::to_string(c) + " has " + std::to_string(counts[c]) +
                                             " samples, fewer than " + std::to_string(plan.folds) + " folds");
    int next = 0;
    for (int c = 0; c < num_classes; ++c) {
      std::vector<std::size_t> members;
      for (std::size_t i = 0; i < n; ++i)
        if (labels[i] == c) members.push_back(i);
      std::shuffle(members.begin(), members.end(), rng);
      for (std::size_t i : members) {
        fold[i] = next;
        next = (next + 1) % plan.folds;
      }
    }
  } else {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i = 0; i < n; ++i) fold[order[i]] = static_cast<int>(i % static_cast<std::size_t>(plan.folds));
  }
  return fold;
}

namespace {

Matrix take_rows(const Matrix& x, const std::vector<Eigen::Index>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = x.row(rows[i]);
  return out;
}

SplitRecord run_split(const LabeledDataset& data, const Pipeline& pipeline, const std::vector<int>& fold,
                      int repetition, int k) {
  SplitRecord rec;
  rec.repetition = repetition;
  rec.fold = k;
  std::vector<Eigen::Index> train;
  Labels train_labels, test_labels;
  for (std::size_t i = 0; i < fold.size(); ++i) {
    if (fold[i] == k) {
      rec.test_rows.push_back(static_cast<Eigen::Index>(i));
      test_labels.push_back(data.labels[i]);
    } else {
      train.push_back(static_cast<Eigen::Index>(i));
      train_labels.push_back(data.labels[i]);
    }
  }
  const int num_classes = data.num_classes();
  const auto counts = class_sizes(train_labels, num_classes);
  for (int c = 0; c < num_classes; ++c)
    if (counts[c] < 2)
      fail(ErrorCode::DataError, "stratification error: class '" + data.class_names[static_cast<std::size_t>(c)] +
                                     "' has fewer than two samples in training fold " + std::to_string(k) +
                                     " of repetition " + std::to_string(repetition));

  const Matrix x_train = take_rows(data.matrix, train);
  const Matrix x_test = take_rows(data.matrix, rec.test_rows);
  FitOptions fo;
  fo.mode = pipeline.mode;
  fo.num_classes = num_classes;
  fo.backend = kernels::Backend::OpenMP;

  ShrinkageModel model = fit(x_train, train_labels, fo);
  if (pipeline.rule.kind == RuleKind::All) {
    rec.kept.resize(static_cast<std::size_t>(x_train.cols()));
    std::iota(rec.kept.begin(), rec.kept.end(), Eigen::Index{0});
  } else {
    const ScoreTable scores = compute_scores(model);
    rec.kept = select_features(scores, pipeline.rule, pipeline.fdr).result.kept;
    model = fit_restricted(x_train, train_labels, rec.kept, fo);
  }

  const Predictions pred = predict(model, x_test);
  int wrong = 0;
  for (std::size_t i = 0; i < test_labels.size(); ++i) wrong += pred.predicted[i] != test_labels[i];
  rec.error = static_cast<double>(wrong) / static_cast<double>(test_labels.size());
  return rec;
}

}  // namespace

CvReport cross_validate(const LabeledDataset& data, const Pipeline& pipeline, const CvPlan& plan,
                        const SplitObserver& observer) {
  require(static_cast<Eigen::Index>(data.labels.size()) == data.matrix.rows(), "label count differs from sample count");
  const int num_classes = data.num_classes();
  std::vector<std::vector<int>> folds;
  for (int r = 0; r < plan.repetitions; ++r) folds.push_back(fold_assignment(data.labels, num_classes, plan, r));

  const int splits = plan.folds * plan.repetitions;
  std::vector<SplitRecord> records(static_cast<std::size_t>(splits));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(splits));

#pragma omp parallel for schedule(dynamic)
  for (int s = 0; s < splits; ++s) {
    try {
      records[static_cast<std::size_t>(s)] = run_split(data, pipeline, folds[static_cast<std::size_t>(s / plan.folds)],
                                                       s / plan.folds, s % plan.folds);
    } catch (...) {
      errors[static_cast<std::size_t>(s)] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  CvReport report;
  for (const auto& rec : records) {
    report.split_errors.push_back(rec.error);
    report.split_feature_counts.push_back(static_cast<int>(rec.kept.size()));
    if (observer) observer(rec);
  }
  double sum = 0.0;
  for (double e : report.split_errors) sum += e;
  report.mean_error = sum / splits;
  double ss = 0.0;
  for (double e : report.split_errors) ss += (e - report.mean_error) * (e - report.mean_error);
  const double sd = splits > 1 ? std::sqrt(ss / (splits - 1)) : 0.0;
  report.std_error = sd / std::sqrt(static_cast<double>(splits));

  report.config_echo = {{"pipeline", to_json(pipeline)},
                        {"plan", to_json(plan)},
                        {"samples", data.num_samples()},
                        {"features", data.num_features()},
                        {"classes", data.class_names}};
  return report;
}

nlohmann::json to_json(const Pipeline& pipeline) {
  const auto& r = pipeline.rule;
  nlohmann::json j = {{"mode", to_string(pipeline.mode)}, {"rule", to_string(r.kind)}};
  switch (r.kind) {
    case RuleKind::FNDR:
    case RuleKind::FDR:
      j["cutoff"] = r.cutoff;
      j["fdr_kind"] = r.fdr_kind == FdrKind::Local ? "local" : "tail";
      break;
    case RuleKind::HC:
      j["hc_fraction"] = r.hc_fraction;
      j["hc_variance"] = r.hc_variance == HcVariance::OrderStatistic ? "order_statistic" : "plug_in";
      break;
    case RuleKind::Top: j["top"] = r.top; break;
    case RuleKind::All: break;
  }
  if (r.kind != RuleKind::All && r.kind != RuleKind::Top) {
    j["transform"] = to_string(pipeline.fdr.transform);
    j["central_fraction"] = pipeline.fdr.central_fraction;
    j["min_features"] = pipeline.fdr.min_features;
  }
  return j;
}

nlohmann::json to_json(const CvPlan& plan) {
  return {{"folds", plan.folds}, {"repetitions", plan.repetitions}, {"seed", plan.seed}, {"balanced", plan.balanced}};
}

nlohmann::json to_json(const CvReport& report) {
  return {{"format", "sda-cv-report"},
          {"version", 1},
          {"config", report.config_echo},
          {"splits", report.split_errors.size()},
          {"mean_error", report.mean_error},
          {"std_error", report.std_error},
          {"split_errors", report.split_errors},
          {"split_feature_counts", report.split_feature_counts}};
}

nlohmann::json to_json(const SyntheticSpec& spec) {
  return {{"class_sizes", spec.class_sizes},       {"features", spec.num_features},
          {"fraction_nonnull", spec.fraction_nonnull}, {"effect_size", spec.effect_size},
          {"block_correlation", spec.block_correlation}, {"block_size", spec.block_size}};
}

SyntheticData generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  const int k = static_cast<int>(spec.class_sizes.size());
  require(k >= 2, "synthetic data needs at least two classes");
  for (int c : spec.class_sizes) require(c >= 1, "class sizes must be positive");
  require(spec.num_features >= 1, "synthetic data needs at least one feature");
  require(spec.block_size >= 1, "block size must be positive");
  require(spec.fraction_nonnull >= 0.0 && spec.fraction_nonnull <= 1.0, "fraction of non-null features outside [0,1]");
  require(std::abs(spec.block_correlation) < 1.0, "block correlation must satisfy |rho| < 1");

  const Eigen::Index p = spec.num_features;
  const Eigen::Index b = std::min(spec.block_size, p);
  Matrix block = Matrix::Constant(b, b, spec.block_correlation);
  block.diagonal().setOnes();
  Eigen::LLT<Matrix> llt(block);
  if (llt.info() != Eigen::Success)
    fail(ErrorCode::InvalidArgument, "block correlation matrix is not positive definite");
  const Matrix chol = llt.matrixL();

  SyntheticData out;
  const auto m = static_cast<Eigen::Index>(std::llround(spec.fraction_nonnull * static_cast<double>(p)));
  for (Eigen::Index r = 0; r < m; ++r) out.nonnull.push_back(r * p / m);

  Matrix means = Matrix::Zero(k, p);
  for (std::size_t r = 0; r < out.nonnull.size(); ++r) means(static_cast<Eigen::Index>(r % k), out.nonnull[r]) = spec.effect_size;

  const int n = std::accumulate(spec.class_sizes.begin(), spec.class_sizes.end(), 0);
  LabeledDataset& ds = out.dataset;
  ds.matrix.resize(n, p);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector e(b);
  int row = 0;
  for (int c = 0; c < k; ++c) {
    for (int i = 0; i < spec.class_sizes[static_cast<std::size_t>(c)]; ++i, ++row) {
      for (Eigen::Index start = 0; start < p; start += b) {
        const Eigen::Index len = std::min(b, p - start);
        for (Eigen::Index t = 0; t < len; ++t) e[t] = normal(rng);
        ds.matrix.row(row).segment(start, len) = (chol.topLeftCorner(len, len) * e.head(len)).transpose();
      }
      ds.matrix.row(row) += means.row(c);
      ds.labels.push_back(c);
      ds.sample_ids.push_back("s" + std::to_string(row + 1));
    }
  }
  for (Eigen::Index j = 0; j < p; ++j) ds.feature_ids.push_back("f" + std::to_string(j + 1));
  for (int c = 0; c < k; ++c) ds.class_names.push_back("c" + std::to_string(c + 1));
  return out;
}

}  // namespace sda
