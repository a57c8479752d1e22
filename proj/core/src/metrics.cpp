#include "fairlens/metrics.hpp"

#include <algorithm>

#include "fairlens/error.hpp"
#include "json_util.hpp"

namespace fairlens {
namespace {

MetricValue ratio(std::size_t num, std::size_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

MetricValue difference(MetricValue unp, MetricValue priv) {
  if (!unp || !priv) return std::nullopt;
  return *unp - *priv;
}

MetricValue positive_rate(const Confusion& c) { return ratio(c.tp + c.fp, c.size()); }

}  // namespace

void GroupSpec::validate(const Schema& schema) const {
  const std::size_t j = require_feature(schema, feature);
  const FeatureSchema& f = schema[j];
  if (!f.is_categorical()) throw ConfigError("sensitive feature '" + feature + "' is not categorical");
  if (privileged_values.empty()) throw ConfigError("no privileged values given for '" + feature + "'");
  for (const auto& v : privileged_values) {
    if (std::find(f.categories.begin(), f.categories.end(), v) == f.categories.end()) {
      throw ConfigError("privileged value '" + v + "' is not a category of '" + feature + "'");
    }
  }
  if (privileged_values.size() >= f.categories.size()) {
    throw ConfigError("privileged values of '" + feature + "' must be a strict subset of its categories");
  }
}

GroupSpec GroupSpec::parse(std::string_view text) {
  const auto eq = text.find('=');
  if (eq == std::string_view::npos || eq == 0 || eq + 1 >= text.size()) {
    throw ConfigError("sensitive spec '" + std::string(text) + "' must look like feature=val1|val2");
  }
  GroupSpec g;
  g.feature = std::string(text.substr(0, eq));
  std::string_view rest = text.substr(eq + 1);
  while (!rest.empty()) {
    const auto bar = rest.find('|');
    const std::string_view value = rest.substr(0, bar);
    if (value.empty()) throw ConfigError("empty privileged value in '" + std::string(text) + "'");
    g.privileged_values.emplace(value);
    if (bar == std::string_view::npos) break;
    rest.remove_prefix(bar + 1);
    if (rest.empty()) throw ConfigError("empty privileged value in '" + std::string(text) + "'");
  }
  return g;
}

GroupConfusion tally(std::span<const std::uint8_t> labels, std::span<const std::uint8_t> predictions,
                     std::span<const std::uint8_t> privileged) {
  if (labels.size() != predictions.size() || labels.size() != privileged.size()) {
    throw DataError("tally: labels, predictions and group flags differ in length");
  }
  GroupConfusion out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    Confusion& c = privileged[i] != 0 ? out.privileged : out.unprivileged;
    const bool y = labels[i] != 0;
    const bool p = predictions[i] != 0;
    if (p && y) ++c.tp;
    else if (p && !y) ++c.fp;
    else if (!p && !y) ++c.tn;
    else ++c.fn;
  }
  return out;
}

GroupConfusion group_confusion(const Classifier& model, const Dataset& d, const GroupSpec& g) {
  g.validate(d.schema());
  const std::size_t j = require_feature(d.schema(), g.feature);
  const auto& categories = d.feature(j).categories;
  std::vector<std::uint8_t> privileged(categories.size(), 0);
  for (std::size_t c = 0; c < categories.size(); ++c) privileged[c] = g.privileged_values.contains(categories[c]);

  std::vector<std::uint8_t> predictions(d.num_rows());
  std::vector<std::uint8_t> membership(d.num_rows());
  for (std::size_t i = 0; i < d.num_rows(); ++i) {
    predictions[i] = model.predict(d.row(i));
    membership[i] = privileged[static_cast<std::size_t>(d.cell(i, j))];
  }
  GroupConfusion out = tally(d.labels(), predictions, membership);
  if (out.privileged.size() == 0 || out.unprivileged.size() == 0) {
    throw DataError("group split on '" + g.feature + "' leaves an empty group");
  }
  return out;
}

MetricValue disparate_impact(const GroupConfusion& c) {
  const MetricValue unp = positive_rate(c.unprivileged);
  const MetricValue priv = positive_rate(c.privileged);
  if (!unp || !priv || *priv <= 0.0) return std::nullopt;
  return *unp / *priv;
}

MetricValue equal_opportunity(const GroupConfusion& c) {
  return difference(ratio(c.unprivileged.tp, c.unprivileged.tp + c.unprivileged.fn),
                    ratio(c.privileged.tp, c.privileged.tp + c.privileged.fn));
}

MetricValue demographic_parity(const GroupConfusion& c) {
  return difference(positive_rate(c.unprivileged), positive_rate(c.privileged));
}

MetricValue equal_accuracy(const GroupConfusion& c) {
  return difference(ratio(c.unprivileged.tp + c.unprivileged.tn, c.unprivileged.size()),
                    ratio(c.privileged.tp + c.privileged.tn, c.privileged.size()));
}

MetricValue predictive_equality(const GroupConfusion& c, PeMode mode) {
  const auto rate = [mode](const Confusion& g) {
    return mode == PeMode::kPaper ? ratio(g.fp, g.fp + g.tp) : ratio(g.fp, g.fp + g.tn);
  };
  return difference(rate(c.unprivileged), rate(c.privileged));
}

std::string_view to_string(PeMode mode) { return mode == PeMode::kPaper ? "paper" : "conventional"; }

PeMode parse_pe_mode(std::string_view text) {
  if (text == "paper") return PeMode::kPaper;
  if (text == "conventional") return PeMode::kConventional;
  throw ConfigError("unknown PE mode '" + std::string(text) + "' (expected paper|conventional)");
}

std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::kDI: return "DI";
    case Metric::kEO: return "EO";
    case Metric::kDP: return "DP";
    case Metric::kEA: return "EA";
    case Metric::kPE: return "PE";
  }
  return "?";
}

double optimal_value(Metric m) { return m == Metric::kDI ? 1.0 : 0.0; }

MetricValue MetricVector::get(Metric m) const {
  switch (m) {
    case Metric::kDI: return di;
    case Metric::kEO: return eo;
    case Metric::kDP: return dp;
    case Metric::kEA: return ea;
    case Metric::kPE: return pe;
  }
  return std::nullopt;
}

MetricVector compute_metrics(const GroupConfusion& c, std::string feature, PeMode mode) {
  MetricVector m;
  m.feature = std::move(feature);
  m.mode = mode;
  m.di = disparate_impact(c);
  m.eo = equal_opportunity(c);
  m.dp = demographic_parity(c);
  m.ea = equal_accuracy(c);
  m.pe = predictive_equality(c, mode);
  if (c.privileged.size() == 0 || c.unprivileged.size() == 0) m.flags.push_back("empty_group");
  for (Metric metric : kAllMetrics) {
    if (!m.get(metric)) {
      std::string flag(to_string(metric));
      std::transform(flag.begin(), flag.end(), flag.begin(), [](unsigned char ch) { return std::tolower(ch); });
      m.flags.push_back(flag + "_undefined");
    }
  }
  return m;
}

MetricVector undefined_metrics(std::string feature, PeMode mode) {
  return compute_metrics(GroupConfusion{}, std::move(feature), mode);
}

namespace {

json_util::json metric_json(const MetricVector& m) {
  using json_util::json;
  auto value = [](const MetricValue& v) { return v ? json(*v) : json(nullptr); };
  return json{{"feature", m.feature}, {"mode", std::string(to_string(m.mode))},
              {"di", value(m.di)},    {"eo", value(m.eo)},
              {"dp", value(m.dp)},    {"ea", value(m.ea)},
              {"pe", value(m.pe)},    {"flags", m.flags}};
}

}  // namespace

std::string to_json(const MetricVector& m) { return json_util::dump(metric_json(m)); }

std::string to_json(std::span<const MetricVector> metrics) {
  json_util::json out = json_util::json::array();
  for (const auto& m : metrics) out.push_back(metric_json(m));
  return json_util::dump(out);
}

double counterfactual_flip_rate(const Classifier& model, const Dataset& d, std::string_view feature) {
  const std::size_t j = require_feature(d.schema(), feature);
  if (!d.feature(j).is_categorical()) throw ConfigError("counterfactual probe needs a categorical feature");
  if (d.empty()) throw DataError("counterfactual probe needs rows");
  const std::size_t k = d.feature(j).categories.size();
  std::size_t flipped = 0;
  std::vector<double> row(d.num_features());
  for (std::size_t i = 0; i < d.num_rows(); ++i) {
    auto original = d.row(i);
    std::copy(original.begin(), original.end(), row.begin());
    const std::uint8_t base = model.predict(row);
    for (std::size_t c = 0; c < k; ++c) {
      if (static_cast<double>(c) == original[j]) continue;
      row[j] = static_cast<double>(c);
      if (model.predict(row) != base) {
        ++flipped;
        break;
      }
    }
  }
  return static_cast<double>(flipped) / static_cast<double>(d.num_rows());
}

}  // namespace fairlens
