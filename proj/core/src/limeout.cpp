#include "fairlens/limeout.hpp"

#include <algorithm>

#include "fairlens/error.hpp"
#include "fairlens/random.hpp"
#include "parallel.hpp"

namespace fairlens {
namespace {

enum SeedStream : std::uint64_t { kSplit = 1, kSmote = 2, kModel = 3, kExplain = 4 };

ModelAssessment assess(const Classifier& model, const NeighborhoodSampler& sampler, const Dataset& test,
                       const LimeOutConfig& cfg, const GlobalConfig& global) {
  ModelAssessment a;
  a.accuracy = accuracy(model, test);
  a.explanation = explain_globally(model, sampler, test, global);
  for (const auto& g : cfg.groups) {
    const std::size_t j = require_feature(test.schema(), g.feature);
    const auto& categories = test.feature(j).categories;
    std::vector<std::uint8_t> predictions(test.num_rows());
    std::vector<std::uint8_t> membership(test.num_rows());
    for (std::size_t i = 0; i < test.num_rows(); ++i) {
      predictions[i] = model.predict(test.row(i));
      membership[i] = g.privileged_values.contains(categories[static_cast<std::size_t>(test.cell(i, j))]);
    }
    a.metrics.push_back(compute_metrics(tally(test.labels(), predictions, membership), g.feature, cfg.pe_mode));
    a.flip_rates.emplace_back(g.feature, counterfactual_flip_rate(model, test, g.feature));
  }
  return a;
}

}  // namespace

FairnessGateResult gate(const GlobalExplanation& g, const std::set<std::string>& sensitive, std::size_t k) {
  FairnessGateResult r;
  r.k = k;
  for (const auto& e : top_k(g, k)) {
    if (sensitive.contains(e.feature)) r.sensitive_in_topk.push_back(e.feature);
  }
  r.deemed_unfair = r.sensitive_in_topk.size() >= 2;
  return r;
}

EnsembleModel::EnsembleModel(std::vector<TrainedModel> members) : members_(std::move(members)) {
  if (members_.empty()) throw Error("an ensemble needs at least one member");
  for (const auto& m : members_) {
    if (m.schema() != members_.front().schema()) throw DataError("ensemble members disagree on schema");
  }
}

double EnsembleModel::predict_proba(std::span<const double> row) const {
  const double first = members_.front().predict_proba(row);
  double sum = first;
  bool identical = true;
  for (std::size_t t = 1; t < members_.size(); ++t) {
    const double p = members_[t].predict_proba(row);
    identical = identical && p == first;
    sum += p;
  }
  // sum / n can be off by an ulp when every member agrees.
  return identical ? first : sum / static_cast<double>(members_.size());
}

std::vector<std::set<std::string>> EnsembleModel::provenance() const {
  std::vector<std::set<std::string>> out;
  for (const auto& m : members_) out.push_back(m.dropped_features());
  return out;
}

std::vector<std::set<std::string>> dropout_sets(const FairnessGateResult& gate_result) {
  std::vector<std::set<std::string>> sets;
  auto add = [&sets](std::set<std::string> s) {
    if (std::find(sets.begin(), sets.end(), s) == sets.end()) sets.push_back(std::move(s));
  };
  for (const auto& f : gate_result.sensitive_in_topk) add({f});
  add({gate_result.sensitive_in_topk.begin(), gate_result.sensitive_in_topk.end()});
  return sets;
}

EnsembleModel build_pool(const ModelSpec& spec, const Dataset& training, const FairnessGateResult& gate_result,
                         std::size_t threads) {
  if (!gate_result.deemed_unfair) throw Error("the model passed the fairness gate; there is no pool to build");
  const auto sets = dropout_sets(gate_result);
  std::vector<std::optional<TrainedModel>> trained(sets.size());
  parallel::for_each_index(sets.size(), threads, [&](std::size_t t) {
    ModelSpec member = spec;
    member.seed = spec.seed + t + 1;
    trained[t].emplace(train(member, training, sets[t]));
  });
  std::vector<TrainedModel> members;
  for (auto& m : trained) members.push_back(std::move(*m));
  return EnsembleModel(std::move(members));
}

double ensemble_predict_proba(const EnsembleModel& e, std::span<const double> x) { return e.predict_proba(x); }

RepetitionRecord run_limeout(const ModelSpec& spec, const Dataset& d, const LimeOutConfig& cfg,
                             std::uint64_t seed) {
  std::set<std::string> sensitive = d.sensitive();
  for (const auto& g : cfg.groups) {
    g.validate(d.schema());
    sensitive.insert(g.feature);
  }
  if (sensitive.empty()) throw ConfigError("no sensitive features declared");

  const SplitPair parts = split(d, cfg.train_fraction, derive_seed(seed, kSplit));
  const Dataset balanced = cfg.smote ? smote(parts.train, cfg.smote_k, derive_seed(seed, kSmote)) : parts.train;
  const NeighborhoodSampler sampler(balanced);

  ModelSpec original_spec = spec;
  original_spec.seed = derive_seed(seed, kModel);
  const TrainedModel original = train(original_spec, balanced);

  GlobalConfig global = cfg.global;
  global.seed = derive_seed(seed, kExplain);
  global.k = std::min(global.k, d.num_features());

  RepetitionRecord record;
  record.seed = seed;
  record.original = assess(original, sampler, parts.test, cfg, global);
  record.gate = gate(record.original.explanation, sensitive, global.k);
  if (record.gate.deemed_unfair) {
    const EnsembleModel ensemble = build_pool(original_spec, balanced, record.gate, cfg.global.threads);
    record.ensemble = assess(ensemble, sampler, parts.test, cfg, global);
    record.ensemble_members = ensemble.provenance();
  }
  return record;
}

}  // namespace fairlens
