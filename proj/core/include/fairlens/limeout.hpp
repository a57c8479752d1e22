#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fairlens/data.hpp"
#include "fairlens/global_explain.hpp"
#include "fairlens/metrics.hpp"
#include "fairlens/models.hpp"

namespace fairlens {

struct FairnessGateResult {
  bool deemed_unfair = false;
  // Sensitive features found in the top-k, in rank order.
  std::vector<std::string> sensitive_in_topk;
  std::size_t k = 0;

  friend bool operator==(const FairnessGateResult&, const FairnessGateResult&) = default;
};

// A model is unfair when at least two sensitive features rank in its top-k.
FairnessGateResult gate(const GlobalExplanation& g, const std::set<std::string>& sensitive, std::size_t k);

// Unweighted mean of member probabilities over the shared schema.
class EnsembleModel final : public Classifier {
 public:
  explicit EnsembleModel(std::vector<TrainedModel> members);

  const Schema& schema() const override { return members_.front().schema(); }
  double predict_proba(std::span<const double> row) const override;

  const std::vector<TrainedModel>& members() const { return members_; }
  std::vector<std::set<std::string>> provenance() const;

 private:
  std::vector<TrainedModel> members_;
};

// Drop sets {a_j1}, ..., {a_ji} followed by {a_j1, ..., a_ji}, with
// duplicates removed (first occurrence kept).
std::vector<std::set<std::string>> dropout_sets(const FairnessGateResult& gate_result);

// Trains one member per drop set on `train`; member t uses seed spec.seed + t + 1.
EnsembleModel build_pool(const ModelSpec& spec, const Dataset& train, const FairnessGateResult& gate_result,
                         std::size_t threads = 1);

double ensemble_predict_proba(const EnsembleModel& e, std::span<const double> x);

struct LimeOutConfig {
  std::vector<GroupSpec> groups;
  double train_fraction = 0.7;
  bool smote = true;
  std::size_t smote_k = 5;
  GlobalConfig global;
  PeMode pe_mode = PeMode::kPaper;
};

struct ModelAssessment {
  double accuracy = 0.0;
  GlobalExplanation explanation;
  std::vector<MetricVector> metrics;
  // Counterfactual flip rate per sensitive feature (auxiliary diagnostic).
  std::vector<std::pair<std::string, double>> flip_rates;
};

struct RepetitionRecord {
  std::uint64_t seed = 0;
  ModelAssessment original;
  FairnessGateResult gate;
  // Present iff the gate fired.
  std::optional<ModelAssessment> ensemble;
  std::vector<std::set<std::string>> ensemble_members;
};

// split -> smote(train) -> train -> LIME_Global -> gate -> (unfair) build_pool
// -> LIME_Global on the ensemble -> metrics for both. `seed` drives the split,
// SMOTE, training and explanation streams.
RepetitionRecord run_limeout(const ModelSpec& spec, const Dataset& d, const LimeOutConfig& cfg,
                             std::uint64_t seed);

}  // namespace fairlens
