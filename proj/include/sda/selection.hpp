#pragma once

// Feature selection on summary scores: local fdr / fndr control through a
// two-component mixture with an empirical null, and higher criticism.

#include "sda/scores.hpp"
#include "sda/types.hpp"

#include <optional>
#include <string>

namespace sda {

struct NormalizedScores {
  Vector z;
  double scale = 1.0;  // fitted c in S ~ c * chi2_df under the null
  double df = 1.0;
};

/// How S is mapped to an approximately standard normal score.
///
/// ChiSquare is the exact probability-integral transform Phi^{-1}(F(S / c))
/// of a scaled chi-square. WilsonHilferty is its cube-root approximation,
/// which is poor for one degree of freedom (two classes): its upper tail is
/// heavier than normal and inflates the number of features called non-null.
enum class ScoreTransform { ChiSquare, WilsonHilferty };

const char* to_string(ScoreTransform t);
ScoreTransform parse_transform(const std::string& s);

/// Wilson-Hilferty cube-root transform with a known scale.
Vector wilson_hilferty(const Vector& summary, double df, double scale);

/// Phi^{-1}(F_df(S / scale)), computed on whichever tail keeps precision.
Vector chi_square_normal(const Vector& summary, double df, double scale);

/// Normalization with the scale c fitted so that median(S) maps to z = 0.
NormalizedScores normalize_scores(const Vector& summary, double df,
                                  ScoreTransform transform = ScoreTransform::WilsonHilferty);

/// Null degrees of freedom used for a K-class summary score.
double summary_df(int num_classes);

struct NullParams {
  double location = 0.0;
  double scale = 1.0;
  double lower = 0.0;  // truncation window used for the fit
  double upper = 0.0;
};

struct FdrOptions {
  ScoreTransform transform = ScoreTransform::ChiSquare;
  double central_fraction = 0.75;
  Eigen::Index min_features = 200;
};

struct FdrEstimate {
  Vector transformed;  // z
  Vector pvalues;      // upper tail of the fitted null
  Vector local_fdr;
  Vector tail_fdr;
  double pi0 = 1.0;
  NullParams null_params;

  Vector local_fndr() const { return 1.0 - local_fdr.array(); }
};

/// Fits the empirical null by truncated-normal maximum likelihood on the
/// central part of z, estimates the mixture density with a Grenander
/// estimator of the p-value density, and returns local and tail-area fdr.
FdrEstimate estimate_fdr(const Vector& z, const FdrOptions& opts = {});

enum class RuleKind { FNDR, FDR, HC, Top, All };
enum class FdrKind { Local, Tail };
enum class HcVariance { OrderStatistic, PlugIn };

const char* to_string(RuleKind r);
RuleKind parse_rule(const std::string& s);

struct SelectionRule {
  RuleKind kind = RuleKind::FNDR;
  double cutoff = 0.2;
  double hc_fraction = 0.1;
  Eigen::Index top = 0;
  FdrKind fdr_kind = FdrKind::Local;
  HcVariance hc_variance = HcVariance::OrderStatistic;
};

struct SelectionResult {
  IndexList kept;  // increasing
  SelectionRule rule;
  Vector per_feature_fdr;
  /// Boundary of the retained set on the input scale: smallest kept z for
  /// the fdr rules, largest kept p-value for HC, smallest kept S from
  /// select_features. +inf when nothing is kept.
  double threshold_value = 0.0;
};

/// Keeps features that are not confidently null: fdr < 1 - cutoff.
SelectionResult select_fndr(const FdrEstimate& est, double cutoff = 0.2, FdrKind kind = FdrKind::Local);

/// Keeps features called significant: fdr < cutoff.
SelectionResult select_fdr(const FdrEstimate& est, double cutoff = 0.2, FdrKind kind = FdrKind::Local);

/// Standardized deviation of sorted p-values from their uniform order statistics.
Vector hc_scores(const Vector& sorted_pvalues, HcVariance variance = HcVariance::OrderStatistic);

/// Keeps the smallest p-values up to the index maximizing |HC| within the
/// top `search_fraction` of features.
SelectionResult select_hc(const Vector& pvalues, double search_fraction = 0.1,
                          HcVariance variance = HcVariance::OrderStatistic);

SelectionResult select_top(const Vector& summary, Eigen::Index count);

/// Everything needed to report a selection on a score table.
struct FeatureSelection {
  SelectionResult result;
  Vector summary;
  std::optional<NormalizedScores> normalized;
  std::optional<FdrEstimate> fdr;
};

/// Runs the rule on S. FNDR, FDR and HC need at least `min_features` features.
FeatureSelection select_features(const ScoreTable& scores, const SelectionRule& rule,
                                 const FdrOptions& opts = {});

}  // namespace sda
