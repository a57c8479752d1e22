#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fairlens/data.hpp"
#include "fairlens/detail/boosting.hpp"
#include "fairlens/detail/logistic.hpp"
#include "fairlens/detail/tree.hpp"

namespace fairlens {

// Any binary classifier that can score a raw row of its schema.
class Classifier {
 public:
  virtual ~Classifier() = default;

  virtual const Schema& schema() const = 0;
  // Probability of class 1. Throws DataError if the row does not conform.
  virtual double predict_proba(std::span<const double> row) const = 0;

  // Thresholded label; p = 0.5 resolves to class 1.
  std::uint8_t predict(std::span<const double> row) const {
    return predict_proba(row) >= 0.5 ? 1 : 0;
  }
};

// Fraction of rows whose thresholded prediction matches the label.
double accuracy(const Classifier& model, const Dataset& d);

enum class ModelFamily { kLogistic, kTree, kBagging, kRandomForest, kAdaBoost };

std::string_view to_string(ModelFamily family);
// Accepts lr | tree | bagging | rf | ada (case-insensitive).
ModelFamily parse_model_family(std::string_view text);

// Union of every family's knobs; ModelSpec::defaults fills in the values the
// family uses and the rest are ignored.
struct Hyperparameters {
  // Logistic regression.
  double l2_lambda = 1.0;
  int max_iter = 1000;
  double tolerance = 1e-6;
  // Trees. max_depth 0 means unlimited.
  int max_depth = 0;
  int min_samples_split = 2;
  // Ensembles. max_features 0 means all features (sqrt is requested with -1).
  int n_estimators = 1;
  int max_features = 0;
  bool bootstrap = false;
  double learning_rate = 1.0;

  friend bool operator==(const Hyperparameters&, const Hyperparameters&) = default;
};

struct ModelSpec {
  ModelFamily family = ModelFamily::kLogistic;
  Hyperparameters params;
  std::uint64_t seed = 0;

  // LR: lambda 1, GD with backtracking, 1000 iterations, tol 1e-6.
  // Tree: Gini, unlimited depth, min 2 samples to split.
  // Bagging: 10 bootstrap trees. RF: 100 bootstrap trees, sqrt features.
  // ADA: 50 SAMME stumps, learning rate 1.
  static ModelSpec defaults(ModelFamily family, std::uint64_t seed = 0);

  // Overrides one hyperparameter by name, e.g. ("n_estimators", "20").
  void set(std::string_view key, std::string_view value);
  // Throws ConfigError when a hyperparameter is out of range.
  void validate() const;

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

// Immutable trained classifier. Rows are always given over the full schema;
// columns listed in dropped_features are never read.
class TrainedModel final : public Classifier {
 public:
  using Parameters = std::variant<detail::LogisticModel, detail::TreeEnsemble, detail::BoostedStumps>;

  TrainedModel(ModelSpec spec, Schema schema, std::set<std::string> dropped, Parameters parameters);

  const Schema& schema() const override { return schema_; }
  double predict_proba(std::span<const double> row) const override;

  const ModelSpec& spec() const { return spec_; }
  const std::set<std::string>& dropped_features() const { return dropped_; }
  const Parameters& parameters() const { return parameters_; }

  // Versioned JSON: family tag, hyperparameters, schema, dropped features and
  // learned parameters. Round-trips predictions bit-exactly.
  std::string to_json() const;
  static TrainedModel from_json(std::string_view text);

 private:
  ModelSpec spec_;
  Schema schema_;
  std::set<std::string> dropped_;
  Parameters parameters_;
};

// Trains on `d` with the columns in `drop` excluded. Deterministic in
// (spec, d, drop).
TrainedModel train(const ModelSpec& spec, const Dataset& d, const std::set<std::string>& drop = {});

}  // namespace fairlens
