#pragma once

// Model files and delimited reports.

#include "sda/model.hpp"
#include "sda/scores.hpp"
#include "sda/selection.hpp"

#include <nlohmann/json.hpp>

#include <iosfwd>
#include <string>
#include <vector>

namespace sda {

inline constexpr int kModelFormatVersion = 1;

/// Names carried alongside a model so predictions can be reported by name.
struct ModelFile {
  ShrinkageModel model;
  std::vector<std::string> feature_ids;  // source feature ids (before selection)
  std::vector<std::string> class_names;
  nlohmann::json config;
};

/// JSON with every double written in shortest round-trip form, so loading
/// reproduces the model bit for bit.
nlohmann::json model_to_json(const ModelFile& file);
ModelFile model_from_json(const nlohmann::json& j);

void save_model(const std::string& path, const ModelFile& file);
ModelFile load_model(const std::string& path);

/// feature, t.<class>..., cat.<class>..., S, S_pam
void write_score_table(std::ostream& out, const ScoreTable& scores, const std::vector<std::string>& feature_ids,
                       const std::vector<std::string>& class_names, const nlohmann::json& config = {});

/// feature, S, z, pvalue, local_fdr, kept, rule
void write_selection_report(std::ostream& out, const FeatureSelection& sel,
                            const std::vector<std::string>& feature_ids, const nlohmann::json& config = {});

/// sample, predicted, post.<class>...
void write_predictions(std::ostream& out, const Predictions& pred, const std::vector<std::string>& sample_ids,
                       const std::vector<std::string>& class_names, const nlohmann::json& config = {});

}  // namespace sda
