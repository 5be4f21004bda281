#pragma once

// Repeated, stratified k-fold cross-validation with feature selection rerun
// inside every split, and a synthetic block-correlated data generator.

#include "sda/dataset.hpp"
#include "sda/model.hpp"
#include "sda/selection.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <functional>

namespace sda {

struct CvPlan {
  int folds = 10;
  int repetitions = 20;
  std::uint64_t seed = 1;
  bool balanced = true;
};

struct Pipeline {
  Mode mode = Mode::LDA;
  SelectionRule rule;  // RuleKind::All skips selection
  FdrOptions fdr;
};

struct CvReport {
  std::vector<double> split_errors;  // rep-major: index = rep * folds + fold
  double mean_error = 0.0;
  double std_error = 0.0;  // sd of split errors / sqrt(#splits)
  std::vector<int> split_feature_counts;
  nlohmann::json config_echo;
};

/// What one split saw; handed to the observer after all splits finish.
struct SplitRecord {
  int repetition = 0;
  int fold = 0;
  std::vector<Eigen::Index> test_rows;
  IndexList kept;
  double error = 0.0;
};
using SplitObserver = std::function<void(const SplitRecord&)>;

/// Fold index (0..folds-1) for every sample in one repetition. Stratified
/// assignment deals each class's shuffled samples round-robin, continuing
/// the fold counter across classes.
std::vector<int> fold_assignment(const Labels& labels, int num_classes, const CvPlan& plan, int repetition);

/// Per-repetition seed derived from the master seed (SplitMix64).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

CvReport cross_validate(const LabeledDataset& data, const Pipeline& pipeline, const CvPlan& plan,
                        const SplitObserver& observer = {});

nlohmann::json to_json(const CvReport& report);
nlohmann::json to_json(const Pipeline& pipeline);
nlohmann::json to_json(const CvPlan& plan);

struct SyntheticSpec {
  std::vector<int> class_sizes{50, 50};
  Eigen::Index num_features = 100;
  double fraction_nonnull = 0.1;
  double effect_size = 1.0;
  double block_correlation = 0.0;
  Eigen::Index block_size = 10;
};

struct SyntheticData {
  LabeledDataset dataset;
  IndexList nonnull;  // ground truth, increasing
};

/// Multivariate normal samples with a common block-diagonal equicorrelation
/// matrix. Non-null features are spread evenly over the feature range; the
/// r-th of them is shifted by `effect_size` in class r mod K.
SyntheticData generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

nlohmann::json to_json(const SyntheticSpec& spec);

}  // namespace sda
