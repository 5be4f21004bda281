#include "sda/cli.hpp"

#include "sda/dataset.hpp"
#include "sda/evaluation.hpp"
#include "sda/io.hpp"
#include "sda/kernels.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <unordered_map>

namespace sda {

namespace {

struct DataArgs {
  std::string matrix, labels;
  bool transpose = false;
  std::string missing = "reject";

  LoadOptions options() const {
    LoadOptions o;
    o.transpose = transpose;
    o.missing = missing == "impute" ? MissingPolicy::ImputeMean : MissingPolicy::Reject;
    return o;
  }
};

struct RuleArgs {
  std::string rule;
  double cutoff = 0.2;
  double hc_fraction = 0.1;
  Eigen::Index top = 50;
  std::string fdr_kind = "local";
  double central_fraction = 0.75;
  std::string transform = "chisq";

  FdrOptions fdr_options() const {
    FdrOptions o;
    o.central_fraction = central_fraction;
    o.transform = parse_transform(transform);
    return o;
  }

  SelectionRule to_rule() const {
    SelectionRule r;
    r.kind = parse_rule(rule);
    r.cutoff = cutoff;
    r.hc_fraction = hc_fraction;
    r.top = top;
    r.fdr_kind = fdr_kind == "tail" ? FdrKind::Tail : FdrKind::Local;
    return r;
  }
};

void add_data_options(CLI::App* cmd, DataArgs& a, bool labels_required = true) {
  cmd->add_option("-x,--matrix", a.matrix, "Delimited matrix (rows = samples, first row feature ids)")->required();
  auto* lab = cmd->add_option("-y,--labels", a.labels, "Two-column file: sample id, class");
  if (labels_required) lab->required();
  cmd->add_flag("--transpose", a.transpose, "Input has features as rows");
  cmd->add_option("--missing", a.missing, "Missing values: reject or impute")
      ->check(CLI::IsMember({"reject", "impute"}));
}

void add_rule_options(CLI::App* cmd, RuleArgs& a, const std::string& default_rule) {
  a.rule = default_rule;
  cmd->add_option("--rule", a.rule, "Feature selection: fndr, fdr, hc, top or all")
      ->check(CLI::IsMember({"fndr", "fdr", "hc", "top", "all"}))
      ->capture_default_str();
  cmd->add_option("--cutoff", a.cutoff, "fdr/fndr cutoff in (0, 0.5]")->capture_default_str();
  cmd->add_option("--hc-fraction", a.hc_fraction, "HC search fraction")->capture_default_str();
  cmd->add_option("--top", a.top, "Feature count for --rule top")->capture_default_str();
  cmd->add_option("--fdr-kind", a.fdr_kind, "local or tail")->check(CLI::IsMember({"local", "tail"}));
  cmd->add_option("--central-fraction", a.central_fraction, "Central fraction used to fit the empirical null")
      ->capture_default_str();
  cmd->add_option("--transform", a.transform, "Score normalization: chisq (exact) or wh (cube root)")
      ->check(CLI::IsMember({"chisq", "wh"}))
      ->capture_default_str();
}

class Output {
 public:
  Output(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
    if (!path.empty() && path != "-") {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) fail(ErrorCode::Io, "cannot write '" + path + "'");
      stream_ = file_.get();
    }
  }
  std::ostream& get() { return *stream_; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* stream_;
};

LabeledDataset load(const DataArgs& a, std::ostream& err) {
  LabeledDataset ds = load_dataset(a.matrix, a.labels, a.options());
  for (const auto& w : ds.warnings) err << "warning: " << w << '\n';
  return ds;
}

nlohmann::json data_echo(const DataArgs& a, const LabeledDataset& ds) {
  return {{"matrix", a.matrix},
          {"labels", a.labels},
          {"transpose", a.transpose},
          {"missing", a.missing},
          {"samples", ds.num_samples()},
          {"features", ds.num_features()},
          {"classes", ds.class_names},
          {"excluded_features", ds.excluded_features}};
}

// Columns of `raw` reordered to the model's source feature ids.
Matrix align_to_model(const RawMatrix& raw, const ModelFile& mf, bool impute) {
  std::unordered_map<std::string, Eigen::Index> col_of;
  for (std::size_t j = 0; j < raw.column_ids.size(); ++j) col_of[raw.column_ids[j]] = static_cast<Eigen::Index>(j);
  const ShrinkageModel& m = mf.model;
  Matrix x(raw.values.rows(), static_cast<Eigen::Index>(mf.feature_ids.size()));
  std::vector<double> fill(mf.feature_ids.size(), 0.0);
  if (m.selected_features) {
    for (std::size_t s = 0; s < m.selected_features->size(); ++s)
      fill[static_cast<std::size_t>((*m.selected_features)[s])] = m.pooled_mean[static_cast<Eigen::Index>(s)];
  } else {
    for (std::size_t j = 0; j < fill.size(); ++j) fill[j] = m.pooled_mean[static_cast<Eigen::Index>(j)];
  }
  for (std::size_t j = 0; j < mf.feature_ids.size(); ++j) {
    auto it = col_of.find(mf.feature_ids[j]);
    if (it == col_of.end()) fail(ErrorCode::DataError, "feature '" + mf.feature_ids[j] + "' missing from input");
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      double v = raw.values(i, it->second);
      if (std::isnan(v)) {
        if (!impute) fail(ErrorCode::DataError, "missing value for feature '" + mf.feature_ids[j] + "'");
        v = fill[j];
      }
      x(i, static_cast<Eigen::Index>(j)) = v;
    }
  }
  return x;
}

int threads_from_env() {
  if (const char* s = std::getenv("SDA_THREADS")) {
    const int n = std::atoi(s);
    if (n > 0) return n;
  }
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Shrinkage discriminant analysis with cat-score feature ranking and fdr/fndr/HC selection", "sda"};
  app.set_version_flag("--version", std::string("sda ") + kVersion);
  app.require_subcommand(1);
  app.fallthrough();
  int threads = threads_from_env();
  app.add_option("--threads", threads, "Worker threads (default: $SDA_THREADS or OpenMP default)");

  // train
  DataArgs train_data;
  RuleArgs train_rule;
  std::string train_mode = "lda", train_out;
  auto* train = app.add_subcommand("train", "Fit a model and write it to a file");
  add_data_options(train, train_data);
  add_rule_options(train, train_rule, "all");
  train->add_option("--mode", train_mode, "lda or dda")->check(CLI::IsMember({"lda", "dda"}))->capture_default_str();
  train->add_option("-o,--out", train_out, "Model file")->required();

  // predict
  DataArgs pred_data;
  std::string pred_model, pred_out;
  auto* predict_cmd = app.add_subcommand("predict", "Classify samples with a saved model");
  add_data_options(predict_cmd, pred_data, false);
  predict_cmd->add_option("-m,--model", pred_model, "Model file")->required();
  predict_cmd->add_option("-o,--out", pred_out, "Output file (default stdout)");

  // rank
  DataArgs rank_data;
  std::string rank_mode = "lda", rank_out;
  auto* rank = app.add_subcommand("rank", "Write the t-score / cat-score table");
  add_data_options(rank, rank_data);
  rank->add_option("--mode", rank_mode, "lda or dda")->check(CLI::IsMember({"lda", "dda"}))->capture_default_str();
  rank->add_option("-o,--out", rank_out, "Output file (default stdout)");

  // select
  DataArgs sel_data;
  RuleArgs sel_rule;
  std::string sel_mode = "lda", sel_out;
  auto* select = app.add_subcommand("select", "Write a feature selection report");
  add_data_options(select, sel_data);
  add_rule_options(select, sel_rule, "fndr");
  select->add_option("--mode", sel_mode, "lda or dda")->check(CLI::IsMember({"lda", "dda"}))->capture_default_str();
  select->add_option("-o,--out", sel_out, "Output file (default stdout)");

  // crossval
  DataArgs cv_data;
  RuleArgs cv_rule;
  std::string cv_mode = "lda", cv_out;
  CvPlan plan;
  bool unbalanced = false;
  auto* crossval = app.add_subcommand("crossval", "Repeated stratified cross-validation with in-split selection");
  add_data_options(crossval, cv_data);
  add_rule_options(crossval, cv_rule, "fndr");
  crossval->add_option("--mode", cv_mode, "lda or dda")->check(CLI::IsMember({"lda", "dda"}))->capture_default_str();
  crossval->add_option("--folds", plan.folds, "Folds")->capture_default_str()->check(CLI::Range(2, 1000000));
  crossval->add_option("--reps", plan.repetitions, "Repetitions")->capture_default_str()->check(CLI::Range(1, 1000000));
  crossval->add_option("--seed", plan.seed, "Master seed")->capture_default_str();
  crossval->add_flag("--unbalanced", unbalanced, "Do not stratify folds by class");
  crossval->add_option("-o,--out", cv_out, "Report file (default stdout)");

  // simulate
  SyntheticSpec spec;
  std::vector<int> sizes;
  std::uint64_t sim_seed = 1;
  std::string sim_matrix, sim_labels, sim_truth;
  auto* simulate = app.add_subcommand("simulate", "Generate block-correlated synthetic data");
  simulate->add_option("--class-sizes", sizes, "Samples per class, e.g. 50 50")->expected(2, 1000);
  simulate->add_option("--features", spec.num_features, "Number of features")->capture_default_str();
  simulate->add_option("--fraction", spec.fraction_nonnull, "Fraction of non-null features")->capture_default_str();
  simulate->add_option("--effect", spec.effect_size, "Mean shift of non-null features")->capture_default_str();
  simulate->add_option("--rho", spec.block_correlation, "Within-block correlation")->capture_default_str();
  simulate->add_option("--block", spec.block_size, "Block size")->capture_default_str();
  simulate->add_option("--seed", sim_seed, "Seed")->capture_default_str();
  simulate->add_option("--out-matrix", sim_matrix, "Matrix output")->required();
  simulate->add_option("--out-labels", sim_labels, "Labels output")->required();
  simulate->add_option("--out-truth", sim_truth, "Non-null feature ids output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    for (char& c : msg)
      if (c == '\n') c = ' ';
    err << "error: usage: " << msg << '\n';
    return 2;
  }

  try {
    if (threads > 0) kernels::set_threads(threads);

    if (*train) {
      LabeledDataset ds = load(train_data, err);
      FitOptions fo;
      fo.mode = parse_mode(train_mode);
      fo.num_classes = ds.num_classes();
      const SelectionRule rule = train_rule.to_rule();
      ShrinkageModel model = fit(ds.matrix, ds.labels, fo);
      nlohmann::json config = {{"command", "train"}, {"mode", train_mode}, {"data", data_echo(train_data, ds)}};
      if (rule.kind != RuleKind::All) {
        const FdrOptions fdr = train_rule.fdr_options();
        const auto sel = select_features(compute_scores(model), rule, fdr);
        model = fit_restricted(ds.matrix, ds.labels, sel.result.kept, fo);
        config["selection"] = to_json(Pipeline{fo.mode, rule, fdr});
        config["selected_count"] = sel.result.kept.size();
      }
      save_model(train_out, ModelFile{std::move(model), ds.feature_ids, ds.class_names, config});
      return 0;
    }

    if (*predict_cmd) {
      const ModelFile mf = load_model(pred_model);
      const RawMatrix raw = read_matrix_file(pred_data.matrix, pred_data.options());
      const Matrix x = align_to_model(raw, mf, pred_data.missing == "impute");
      const Predictions pred = predict(mf.model, x);
      Output o(pred_out, out);
      write_predictions(o.get(), pred, raw.row_ids, mf.class_names,
                        {{"command", "predict"}, {"model", pred_model}, {"matrix", pred_data.matrix}});
      return 0;
    }

    if (*rank) {
      LabeledDataset ds = load(rank_data, err);
      FitOptions fo;
      fo.mode = parse_mode(rank_mode);
      fo.num_classes = ds.num_classes();
      const ShrinkageModel model = fit(ds.matrix, ds.labels, fo);
      const auto lam = model.intensities();
      Output o(rank_out, out);
      write_score_table(o.get(), compute_scores(model), ds.feature_ids, ds.class_names,
                        {{"command", "rank"},
                         {"mode", rank_mode},
                         {"data", data_echo(rank_data, ds)},
                         {"lambda_corr", lam.lambda_corr},
                         {"lambda_var", lam.lambda_var},
                         {"lambda_freq", lam.lambda_freq}});
      return 0;
    }

    if (*select) {
      LabeledDataset ds = load(sel_data, err);
      FitOptions fo;
      fo.mode = parse_mode(sel_mode);
      fo.num_classes = ds.num_classes();
      const ShrinkageModel model = fit(ds.matrix, ds.labels, fo);
      const FdrOptions fdr = sel_rule.fdr_options();
      const SelectionRule rule = sel_rule.to_rule();
      const auto sel = select_features(compute_scores(model), rule, fdr);
      nlohmann::json config = {{"command", "select"},
                               {"data", data_echo(sel_data, ds)},
                               {"pipeline", to_json(Pipeline{fo.mode, rule, fdr})},
                               {"kept", sel.result.kept.size()}};
      if (sel.fdr) {
        config["pi0"] = sel.fdr->pi0;
        config["null_location"] = sel.fdr->null_params.location;
        config["null_scale"] = sel.fdr->null_params.scale;
      }
      Output o(sel_out, out);
      write_selection_report(o.get(), sel, ds.feature_ids, config);
      return 0;
    }

    if (*crossval) {
      LabeledDataset ds = load(cv_data, err);
      plan.balanced = !unbalanced;
      Pipeline pipeline;
      pipeline.mode = parse_mode(cv_mode);
      pipeline.rule = cv_rule.to_rule();
      pipeline.fdr = cv_rule.fdr_options();
      const CvReport report = cross_validate(ds, pipeline, plan);
      nlohmann::json j = to_json(report);
      j["config"]["data"] = data_echo(cv_data, ds);
      j["config"]["threads"] = kernels::max_threads();
      Output o(cv_out, out);
      o.get() << j.dump(1) << '\n';
      return 0;
    }

    if (*simulate) {
      if (!sizes.empty()) spec.class_sizes = sizes;
      const SyntheticData sim = generate_synthetic(spec, sim_seed);
      Output m(sim_matrix, out);
      write_matrix(m.get(), sim.dataset.matrix, sim.dataset.sample_ids, sim.dataset.feature_ids);
      Output l(sim_labels, out);
      write_labels(l.get(), sim.dataset);
      if (!sim_truth.empty()) {
        Output t(sim_truth, out);
        t.get() << "# " << nlohmann::json{{"command", "simulate"}, {"spec", to_json(spec)}, {"seed", sim_seed}}.dump()
                << '\n';
        for (Eigen::Index j : sim.nonnull) t.get() << sim.dataset.feature_ids[static_cast<std::size_t>(j)] << '\n';
      }
      return 0;
    }
  } catch (const Error& e) {
    err << "error: " << to_string(e.code()) << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: internal: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace sda
