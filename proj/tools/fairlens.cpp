// fairlens command line: audit | explain | metrics.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fairlens/data.hpp"
#include "fairlens/error.hpp"
#include "fairlens/lime.hpp"
#include "fairlens/metrics.hpp"
#include "fairlens/models.hpp"
#include "fairlens/report.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kPipelineError = 2;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw fairlens::ConfigError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::pair<std::string, std::string> split_override(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw fairlens::ConfigError("override '" + text + "' must look like key=value");
  }
  return {text.substr(0, eq), text.substr(eq + 1)};
}

struct AuditArgs {
  std::string config_file;
  std::string data;
  std::string target;
  std::string positive_label;
  std::string hints_file;
  std::vector<std::string> sensitive;
  std::vector<std::string> models;
  std::vector<std::string> overrides;
  std::optional<std::size_t> k, reps, n_samples, pool, budget, top_m, threads;
  std::optional<std::uint64_t> seed;
  std::optional<double> kernel_width, ridge_lambda, train_fraction;
  bool no_smote = false;
  std::string pe_mode;
  std::string out;
};

fairlens::RunConfig build_config(const AuditArgs& a) {
  fairlens::RunConfig cfg;
  if (!a.config_file.empty()) cfg = fairlens::RunConfig::from_json(read_file(a.config_file));
  if (!a.data.empty()) cfg.data_path = a.data;
  if (!a.target.empty()) cfg.target = a.target;
  if (!a.positive_label.empty()) cfg.positive_label = a.positive_label;
  if (!a.hints_file.empty()) {
    try {
      cfg.hints = fairlens::load_schema_hints(a.hints_file);
    } catch (const fairlens::DataError& e) {
      throw fairlens::ConfigError(e.what());
    }
  }
  if (!a.sensitive.empty()) {
    cfg.groups.clear();
    for (const auto& s : a.sensitive) cfg.groups.push_back(fairlens::GroupSpec::parse(s));
  }
  if (!a.models.empty()) {
    cfg.families.clear();
    for (const auto& m : a.models) cfg.families.push_back(fairlens::parse_model_family(m));
  }
  for (const auto& o : a.overrides) {
    auto [key, value] = split_override(o);
    cfg.overrides[key] = value;
  }
  if (a.k) cfg.k = *a.k;
  if (a.reps) cfg.repetitions = *a.reps;
  if (a.n_samples) cfg.n_samples = *a.n_samples;
  if (a.pool) cfg.pool_size = *a.pool;
  if (a.budget) cfg.budget = *a.budget;
  if (a.top_m) cfg.features_per_explanation = *a.top_m;
  if (a.seed) cfg.base_seed = *a.seed;
  if (a.kernel_width) cfg.kernel_width = *a.kernel_width;
  if (a.ridge_lambda) cfg.ridge_lambda = *a.ridge_lambda;
  if (a.train_fraction) cfg.train_fraction = *a.train_fraction;
  if (a.no_smote) cfg.smote = false;
  if (!a.pe_mode.empty()) cfg.pe_mode = fairlens::parse_pe_mode(a.pe_mode);
  if (!a.out.empty()) cfg.out_dir = a.out;
  cfg.threads = a.threads ? *a.threads : fairlens::threads_from_env(0);
  if (cfg.out_dir.empty()) throw fairlens::ConfigError("--out is required");
  return cfg;
}

int run_audit(const AuditArgs& a) {
  const fairlens::RunConfig cfg = build_config(a);
  cfg.validate();
  const fairlens::Dataset d = fairlens::load_dataset(cfg);
  cfg.validate(d);
  const fairlens::AuditRun run = fairlens::run_audit(cfg, d);
  fairlens::write_artifacts(run, cfg.out_dir);
  std::cout << fairlens::emit_accuracy_table(run);
  for (const auto& m : run.models) {
    std::cout << fairlens::to_string(m.family) << ": gate fired in " << m.summary.gate_fired << " of "
              << m.records.size() << " repetitions\n";
  }
  return kOk;
}

struct ExplainArgs {
  std::string data;
  std::string target;
  std::string positive_label;
  std::string model = "lr";
  std::string model_file;
  std::string save_model;
  std::vector<std::string> overrides;
  std::size_t row = 0;
  std::size_t n_samples = 5000;
  std::optional<double> kernel_width;
  double ridge_lambda = 1.0;
  std::uint64_t seed = 0;
};

int run_explain(const ExplainArgs& a) {
  fairlens::LoadOptions options;
  if (!a.positive_label.empty()) options.positive_label = a.positive_label;
  std::optional<fairlens::TrainedModel> model;
  if (!a.model_file.empty()) {
    model.emplace(fairlens::TrainedModel::from_json(read_file(a.model_file)));
    options.reference = &model->schema();
  }
  const fairlens::Dataset d = fairlens::load_csv(a.data, a.target, options);
  if (a.row >= d.num_rows()) {
    throw fairlens::ConfigError("row " + std::to_string(a.row) + " is out of range (" +
                                std::to_string(d.num_rows()) + " rows)");
  }
  if (!model) {
    fairlens::ModelSpec spec = fairlens::ModelSpec::defaults(fairlens::parse_model_family(a.model), a.seed);
    for (const auto& o : a.overrides) {
      auto [key, value] = split_override(o);
      spec.set(key, value);
    }
    spec.validate();
    model.emplace(fairlens::train(spec, d));
  }
  if (!a.save_model.empty()) {
    std::ofstream out(a.save_model, std::ios::binary | std::ios::trunc);
    if (!out) throw fairlens::Error("cannot write '" + a.save_model + "'");
    out << model->to_json();
  }
  fairlens::LimeConfig lime;
  lime.n_samples = a.n_samples;
  lime.kernel_width = a.kernel_width;
  lime.ridge_lambda = a.ridge_lambda;
  lime.seed = a.seed;
  std::cout << fairlens::explain(*model, d.row(a.row), d, lime).to_json();
  return kOk;
}

struct MetricsArgs {
  std::string predictions;
  std::string label_column = "label";
  std::string prediction_column = "prediction";
  std::vector<std::string> sensitive;
  std::string pe_mode = "paper";
};

int run_metrics(const MetricsArgs& a) {
  const fairlens::PeMode mode = fairlens::parse_pe_mode(a.pe_mode);
  if (a.sensitive.empty()) throw fairlens::ConfigError("--sensitive is required");
  fairlens::LoadOptions options;
  options.positive_label = "1";
  options.hints[a.prediction_column] = fairlens::FeatureKind::kContinuous;
  std::vector<fairlens::GroupSpec> groups;
  for (const auto& s : a.sensitive) {
    groups.push_back(fairlens::GroupSpec::parse(s));
    options.hints[groups.back().feature] = fairlens::FeatureKind::kCategorical;
  }
  const fairlens::Dataset d = fairlens::load_csv(a.predictions, a.label_column, options);
  if (d.target_encoding().negative_label != "0") {
    throw fairlens::ConfigError("label column must hold 0/1 values");
  }
  const std::size_t pj = fairlens::require_feature(d.schema(), a.prediction_column);
  std::vector<std::uint8_t> predictions(d.num_rows());
  for (std::size_t i = 0; i < d.num_rows(); ++i) {
    const double p = d.cell(i, pj);
    if (p != 0.0 && p != 1.0) {
      throw fairlens::ConfigError("prediction column must hold 0/1 values (row " + std::to_string(i + 1) + ")");
    }
    predictions[i] = static_cast<std::uint8_t>(p);
  }
  std::vector<fairlens::MetricVector> out;
  for (const auto& g : groups) {
    g.validate(d.schema());
    const std::size_t j = fairlens::require_feature(d.schema(), g.feature);
    std::vector<std::uint8_t> membership(d.num_rows());
    for (std::size_t i = 0; i < d.num_rows(); ++i) {
      membership[i] = g.privileged_values.contains(d.feature(j).categories[static_cast<std::size_t>(d.cell(i, j))]);
    }
    out.push_back(fairlens::compute_metrics(fairlens::tally(d.labels(), predictions, membership), g.feature, mode));
  }
  std::cout << fairlens::to_json(std::span<const fairlens::MetricVector>(out));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fairness audit of tabular classifiers via explanation-guided feature dropout"};
  app.require_subcommand(1);

  AuditArgs audit;
  auto* audit_cmd = app.add_subcommand("audit", "Run the full audit and write artifacts");
  audit_cmd->add_option("--config", audit.config_file, "JSON run config; flags override its fields");
  audit_cmd->add_option("--data", audit.data, "Dataset CSV");
  audit_cmd->add_option("--target", audit.target, "Target column");
  audit_cmd->add_option("--positive-label", audit.positive_label, "Target value mapped to class 1");
  audit_cmd->add_option("--hints", audit.hints_file, "JSON {column: categorical|continuous}");
  audit_cmd->add_option("--sensitive", audit.sensitive, "feature=priv1|priv2, comma separated")->delimiter(',');
  audit_cmd->add_option("--model", audit.models, "lr|tree|bagging|rf|ada, comma separated")->delimiter(',');
  audit_cmd->add_option("--set", audit.overrides, "Hyperparameter override key=value");
  audit_cmd->add_option("--k", audit.k, "Top-k length for the fairness gate");
  audit_cmd->add_option("--reps", audit.reps, "Repetitions");
  audit_cmd->add_option("--seed", audit.seed, "Base seed");
  audit_cmd->add_option("--n-samples", audit.n_samples, "LIME neighbourhood size");
  audit_cmd->add_option("--kernel-width", audit.kernel_width, "LIME kernel width");
  audit_cmd->add_option("--ridge-lambda", audit.ridge_lambda, "Surrogate ridge penalty");
  audit_cmd->add_option("--pool", audit.pool, "Candidate instances explained per model");
  audit_cmd->add_option("--budget", audit.budget, "Submodular pick budget");
  audit_cmd->add_option("--top-m", audit.top_m, "Features kept per local explanation (0 = all)");
  audit_cmd->add_option("--train-fraction", audit.train_fraction, "Train share of the split");
  audit_cmd->add_flag("--no-smote", audit.no_smote, "Skip SMOTE balancing");
  audit_cmd->add_option("--pe-mode", audit.pe_mode, "paper|conventional");
  audit_cmd->add_option("--out", audit.out, "Artifact directory");
  audit_cmd->add_option("--threads", audit.threads, "Worker threads (default FAIRLENS_THREADS, 0 = auto)");

  ExplainArgs explain;
  auto* explain_cmd = app.add_subcommand("explain", "Explain one row of a dataset");
  explain_cmd->add_option("--data", explain.data, "Dataset CSV")->required();
  explain_cmd->add_option("--target", explain.target, "Target column")->required();
  explain_cmd->add_option("--positive-label", explain.positive_label, "Target value mapped to class 1");
  explain_cmd->add_option("--row", explain.row, "Zero-based row index");
  explain_cmd->add_option("--model", explain.model, "Family trained on the whole file");
  explain_cmd->add_option("--model-file", explain.model_file, "Saved model JSON instead of training");
  explain_cmd->add_option("--save-model", explain.save_model, "Write the model JSON here");
  explain_cmd->add_option("--set", explain.overrides, "Hyperparameter override key=value");
  explain_cmd->add_option("--n-samples", explain.n_samples, "Neighbourhood size");
  explain_cmd->add_option("--kernel-width", explain.kernel_width, "Kernel width");
  explain_cmd->add_option("--ridge-lambda", explain.ridge_lambda, "Ridge penalty");
  explain_cmd->add_option("--seed", explain.seed, "Seed");

  MetricsArgs metrics;
  auto* metrics_cmd = app.add_subcommand("metrics", "Group fairness metrics from a predictions CSV");
  metrics_cmd->add_option("--predictions", metrics.predictions, "CSV with label, prediction and group columns")
      ->required();
  metrics_cmd->add_option("--label-column", metrics.label_column, "0/1 label column");
  metrics_cmd->add_option("--prediction-column", metrics.prediction_column, "0/1 prediction column");
  metrics_cmd->add_option("--sensitive", metrics.sensitive, "feature=priv1|priv2, comma separated")
      ->delimiter(',');
  metrics_cmd->add_option("--pe-mode", metrics.pe_mode, "paper|conventional");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*audit_cmd) return run_audit(audit);
    if (*explain_cmd) return run_explain(explain);
    return run_metrics(metrics);
  } catch (const fairlens::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kPipelineError;
  }
}
