#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fairlens/data.hpp"
#include "fairlens/limeout.hpp"
#include "fairlens/metrics.hpp"
#include "fairlens/models.hpp"

namespace fairlens {

struct RunConfig {
  std::filesystem::path data_path;
  std::string target;
  std::optional<std::string> positive_label;
  std::map<std::string, FeatureKind> hints;
  std::vector<GroupSpec> groups;
  std::vector<ModelFamily> families = {ModelFamily::kLogistic};
  // Hyperparameter overrides applied to every family, by ModelSpec::set key.
  std::map<std::string, std::string> overrides;
  std::size_t k = 10;
  std::size_t n_samples = 5000;
  std::optional<double> kernel_width;
  double ridge_lambda = 1.0;
  std::size_t pool_size = 500;
  std::size_t budget = 25;
  std::size_t features_per_explanation = 10;
  double train_fraction = 0.7;
  bool smote = true;
  std::size_t smote_k = 5;
  std::size_t repetitions = 10;
  std::uint64_t base_seed = 0;
  PeMode pe_mode = PeMode::kPaper;
  // Read from JSON but never written back, so artifacts do not depend on
  // where they are written.
  std::filesystem::path out_dir;
  // Worker threads (0 = hardware concurrency). Never affects results, so it is
  // left out of the JSON snapshot.
  std::size_t threads = 1;

  // Throws ConfigError: k >= 2, repetitions >= 1, fractions and sizes in range,
  // at least one group and one family.
  void validate() const;
  // Also checks that every referenced column exists in `d`.
  void validate(const Dataset& d) const;

  ModelSpec model_spec(ModelFamily family) const;
  LimeOutConfig limeout_config() const;

  std::string to_json() const;
  static RunConfig from_json(std::string_view text);
};

// FAIRLENS_THREADS, or `fallback` when unset. Throws ConfigError when the
// value is not a non-negative integer.
std::size_t threads_from_env(std::size_t fallback = 0);

struct Stat {
  double mean = 0.0;
  // Sample standard deviation; 0 for a single value.
  double std = 0.0;
  std::size_t count = 0;
};

// Empty input gives count 0 and zero mean/std.
Stat summarize(std::span<const double> values);

struct ModelSummary {
  Stat original_accuracy;
  // Over the repetitions where the gate fired.
  Stat ensemble_accuracy;
  std::size_t gate_fired = 0;
  // Paired mean of ensemble minus original accuracy over fired repetitions.
  std::optional<double> accuracy_gap;
};

struct ModelRun {
  ModelFamily family = ModelFamily::kLogistic;
  std::vector<RepetitionRecord> records;
  ModelSummary summary;
};

struct AuditRun {
  RunConfig config;
  std::vector<ModelRun> models;
};

ModelSummary summarize(std::span<const RepetitionRecord> records);

// Runs every family over seeds base_seed .. base_seed + repetitions - 1.
// Component errors are rethrown as PipelineError naming the family and the
// repetition index.
AuditRun run_audit(const RunConfig& cfg, const Dataset& d);
// Loads cfg.data_path first.
AuditRun run_audit(const RunConfig& cfg);

Dataset load_dataset(const RunConfig& cfg);

// "0.772 (0.016)"; "-" when nothing was measured.
std::string format_mean_std(const Stat& s);

// Rows Original / LimeOut, one column per family.
std::string emit_accuracy_table(const AuditRun& run);

// Side-by-side top-k lists of one repetition; ensemble columns are empty when
// the gate passed.
std::string emit_explanation_table(const RepetitionRecord& record, const std::set<std::string>& sensitive,
                                   std::size_t k);
// File name -> CSV text, one table per (family, seed).
std::map<std::string, std::string> emit_explanation_tables(const AuditRun& run);

// One row per (family, seed or "mean", feature, metric) over the repetitions
// where the gate fired.
std::string emit_metric_points(const AuditRun& run);

std::string record_to_json(const RepetitionRecord& record, const std::set<std::string>& sensitive);
std::string summary_to_json(const AuditRun& run);

// config.json, summary.json, runs/<seed>/record.json, tables/*.csv and
// plotdata/*.csv under `dir`.
void write_artifacts(const AuditRun& run, const std::filesystem::path& dir);

}  // namespace fairlens
