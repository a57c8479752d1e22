#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fairlens/data.hpp"
#include "fairlens/models.hpp"

namespace fairlens {

// Privileged group of one sensitive feature; every other category is
// unprivileged.
struct GroupSpec {
  std::string feature;
  std::set<std::string> privileged_values;

  // Checks that the feature is categorical and that the privileged values
  // form a non-empty strict subset of its categories.
  void validate(const Schema& schema) const;
  // Parses "feature=val1|val2".
  static GroupSpec parse(std::string_view text);

  friend bool operator==(const GroupSpec&, const GroupSpec&) = default;
};

struct Confusion {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t size() const { return tp + fp + tn + fn; }
  friend bool operator==(const Confusion&, const Confusion&) = default;
};

struct GroupConfusion {
  Confusion privileged;
  Confusion unprivileged;

  GroupConfusion swapped() const { return {unprivileged, privileged}; }
  friend bool operator==(const GroupConfusion&, const GroupConfusion&) = default;
};

// Tallies labels against predictions; `privileged[i]` marks group membership.
GroupConfusion tally(std::span<const std::uint8_t> labels, std::span<const std::uint8_t> predictions,
                     std::span<const std::uint8_t> privileged);

// Thresholded predictions of `model` on `d`, tallied per group. Throws on a
// non-categorical feature or an empty group.
GroupConfusion group_confusion(const Classifier& model, const Dataset& d, const GroupSpec& g);

using MetricValue = std::optional<double>;

// Ratio of predicted-positive rates unp / priv. Undefined when the
// privileged rate is 0 or a group is empty.
MetricValue disparate_impact(const GroupConfusion& c);
// Recall difference unp - priv.
MetricValue equal_opportunity(const GroupConfusion& c);
// Predicted-positive rate difference unp - priv.
MetricValue demographic_parity(const GroupConfusion& c);
// Accuracy difference unp - priv.
MetricValue equal_accuracy(const GroupConfusion& c);

// kPaper: FP / (FP + TP) per group. kConventional: FP / (FP + TN).
enum class PeMode { kPaper, kConventional };
std::string_view to_string(PeMode mode);
PeMode parse_pe_mode(std::string_view text);

MetricValue predictive_equality(const GroupConfusion& c, PeMode mode = PeMode::kPaper);

enum class Metric { kDI, kEO, kDP, kEA, kPE };
inline constexpr Metric kAllMetrics[] = {Metric::kDI, Metric::kEO, Metric::kDP, Metric::kEA, Metric::kPE};
std::string_view to_string(Metric m);
// 1 for DI, 0 for the differences.
double optimal_value(Metric m);

struct MetricVector {
  std::string feature;
  PeMode mode = PeMode::kPaper;
  MetricValue di;
  MetricValue eo;
  MetricValue dp;
  MetricValue ea;
  MetricValue pe;
  // One "<metric>_undefined" entry per undefined value, plus "empty_group"
  // when a group had no rows.
  std::vector<std::string> flags;

  MetricValue get(Metric m) const;
  friend bool operator==(const MetricVector&, const MetricVector&) = default;
};

MetricVector compute_metrics(const GroupConfusion& c, std::string feature, PeMode mode = PeMode::kPaper);
// All-undefined vector for a feature whose group split is empty.
MetricVector undefined_metrics(std::string feature, PeMode mode);

// JSON {feature, mode, di, eo, dp, ea, pe, flags}; undefined values are null.
std::string to_json(const MetricVector& m);
std::string to_json(std::span<const MetricVector> metrics);

// Counterfactual probe: fraction of rows whose predicted label changes when
// the feature is set to any other category.
double counterfactual_flip_rate(const Classifier& model, const Dataset& d, std::string_view feature);

}  // namespace fairlens
