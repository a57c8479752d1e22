#include "fairlens/models.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "fairlens/error.hpp"
#include "fairlens/random.hpp"
#include "json_util.hpp"

namespace fairlens {
namespace {

using json_util::json;

constexpr int kModelFormatVersion = 1;

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

template <typename T>
T parse_value(std::string_view key, std::string_view text) {
  T value{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError("hyperparameter '" + std::string(key) + "': cannot parse '" + std::string(text) + "'");
  }
  return value;
}

json tree_to_json(const detail::DecisionTree& tree) {
  json nodes = json::array();
  for (const auto& n : tree.nodes()) {
    json node{{"f", n.feature}, {"v", n.value}};
    if (!n.is_leaf()) {
      node["l"] = n.left;
      node["r"] = n.right;
      if (n.left_categories.empty()) {
        node["t"] = n.threshold;
      } else {
        node["c"] = n.left_categories;
      }
    }
    nodes.push_back(std::move(node));
  }
  return nodes;
}

detail::DecisionTree tree_from_json(const json& j) {
  std::vector<detail::TreeNode> nodes;
  for (const auto& node : j) {
    detail::TreeNode n;
    n.feature = node.at("f").get<int>();
    n.value = node.at("v").get<double>();
    if (n.feature >= 0) {
      n.left = node.at("l").get<int>();
      n.right = node.at("r").get<int>();
      if (node.contains("c")) {
        n.left_categories = node.at("c").get<std::vector<std::uint8_t>>();
      } else {
        n.threshold = node.at("t").get<double>();
      }
    }
    nodes.push_back(std::move(n));
  }
  const auto count = static_cast<int>(nodes.size());
  for (const auto& n : nodes) {
    if (n.feature >= 0 && (n.left <= 0 || n.left >= count || n.right <= 0 || n.right >= count)) {
      throw DataError("model JSON: tree child index out of range");
    }
  }
  return detail::DecisionTree(std::move(nodes));
}

json params_to_json(const TrainedModel::Parameters& p) {
  return std::visit(
      [](const auto& m) -> json {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, detail::LogisticModel>) {
          const auto& e = m.encoder;
          return json{{"kind", "logistic"},
                      {"features", e.features},
                      {"offsets", e.offsets},
                      {"categorical", e.categorical},
                      {"mean", e.mean},
                      {"scale", e.scale},
                      {"width", e.width},
                      {"theta", m.theta},
                      {"iterations", m.iterations},
                      {"gradient_norm", m.gradient_norm}};
        } else if constexpr (std::is_same_v<T, detail::TreeEnsemble>) {
          json trees = json::array();
          for (const auto& t : m.trees) trees.push_back(tree_to_json(t));
          return json{{"kind", "trees"}, {"trees", trees}};
        } else {
          json stumps = json::array();
          for (const auto& t : m.stumps) stumps.push_back(tree_to_json(t));
          return json{{"kind", "boosted_stumps"},
                      {"stumps", stumps},
                      {"alphas", m.alphas},
                      {"round_errors", m.round_errors}};
        }
      },
      p);
}

TrainedModel::Parameters params_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "logistic") {
    detail::LogisticModel m;
    m.encoder.features = j.at("features").get<std::vector<std::size_t>>();
    m.encoder.offsets = j.at("offsets").get<std::vector<std::size_t>>();
    m.encoder.categorical = j.at("categorical").get<std::vector<std::uint8_t>>();
    m.encoder.mean = j.at("mean").get<std::vector<double>>();
    m.encoder.scale = j.at("scale").get<std::vector<double>>();
    m.encoder.width = j.at("width").get<std::size_t>();
    m.theta = j.at("theta").get<std::vector<double>>();
    m.iterations = j.at("iterations").get<int>();
    m.gradient_norm = j.at("gradient_norm").get<double>();
    if (m.theta.size() != m.encoder.width + 1) throw DataError("model JSON: coefficient count mismatch");
    return m;
  }
  if (kind == "trees") {
    detail::TreeEnsemble m;
    for (const auto& t : j.at("trees")) m.trees.push_back(tree_from_json(t));
    if (m.trees.empty()) throw DataError("model JSON: empty tree ensemble");
    return m;
  }
  if (kind == "boosted_stumps") {
    detail::BoostedStumps m;
    for (const auto& t : j.at("stumps")) m.stumps.push_back(tree_from_json(t));
    m.alphas = j.at("alphas").get<std::vector<double>>();
    m.round_errors = j.at("round_errors").get<std::vector<double>>();
    if (m.alphas.size() != m.stumps.size()) throw DataError("model JSON: alpha count mismatch");
    return m;
  }
  throw DataError("model JSON: unknown parameter kind '" + kind + "'");
}

json hyper_to_json(const Hyperparameters& h) {
  return json{{"l2_lambda", h.l2_lambda},   {"max_iter", h.max_iter},
              {"tolerance", h.tolerance},   {"max_depth", h.max_depth},
              {"min_samples_split", h.min_samples_split}, {"n_estimators", h.n_estimators},
              {"max_features", h.max_features}, {"bootstrap", h.bootstrap},
              {"learning_rate", h.learning_rate}};
}

Hyperparameters hyper_from_json(const json& j) {
  Hyperparameters h;
  h.l2_lambda = j.at("l2_lambda").get<double>();
  h.max_iter = j.at("max_iter").get<int>();
  h.tolerance = j.at("tolerance").get<double>();
  h.max_depth = j.at("max_depth").get<int>();
  h.min_samples_split = j.at("min_samples_split").get<int>();
  h.n_estimators = j.at("n_estimators").get<int>();
  h.max_features = j.at("max_features").get<int>();
  h.bootstrap = j.at("bootstrap").get<bool>();
  h.learning_rate = j.at("learning_rate").get<double>();
  return h;
}

}  // namespace

double accuracy(const Classifier& model, const Dataset& d) {
  if (d.empty()) throw DataError("accuracy of an empty dataset is undefined");
  if (d.schema() != model.schema()) throw DataError("dataset schema does not match the model");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < d.num_rows(); ++i) {
    if (model.predict(d.row(i)) == d.label(i)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(d.num_rows());
}

std::string_view to_string(ModelFamily family) {
  switch (family) {
    case ModelFamily::kLogistic: return "lr";
    case ModelFamily::kTree: return "tree";
    case ModelFamily::kBagging: return "bagging";
    case ModelFamily::kRandomForest: return "rf";
    case ModelFamily::kAdaBoost: return "ada";
  }
  return "?";
}

ModelFamily parse_model_family(std::string_view text) {
  const std::string s = lower(text);
  if (s == "lr") return ModelFamily::kLogistic;
  if (s == "tree") return ModelFamily::kTree;
  if (s == "bagging") return ModelFamily::kBagging;
  if (s == "rf") return ModelFamily::kRandomForest;
  if (s == "ada") return ModelFamily::kAdaBoost;
  throw ConfigError("unknown model family '" + std::string(text) + "' (expected lr|tree|bagging|rf|ada)");
}

ModelSpec ModelSpec::defaults(ModelFamily family, std::uint64_t seed) {
  ModelSpec spec;
  spec.family = family;
  spec.seed = seed;
  Hyperparameters& h = spec.params;
  switch (family) {
    case ModelFamily::kLogistic:
    case ModelFamily::kTree:
      break;
    case ModelFamily::kBagging:
      h.n_estimators = 10;
      h.bootstrap = true;
      break;
    case ModelFamily::kRandomForest:
      h.n_estimators = 100;
      h.bootstrap = true;
      h.max_features = -1;
      break;
    case ModelFamily::kAdaBoost:
      h.n_estimators = 50;
      h.max_depth = 1;
      h.learning_rate = 1.0;
      break;
  }
  return spec;
}

void ModelSpec::set(std::string_view key, std::string_view value) {
  Hyperparameters& h = params;
  if (key == "l2_lambda" || key == "lambda") {
    h.l2_lambda = parse_value<double>(key, value);
  } else if (key == "max_iter") {
    h.max_iter = parse_value<int>(key, value);
  } else if (key == "tolerance") {
    h.tolerance = parse_value<double>(key, value);
  } else if (key == "max_depth") {
    h.max_depth = parse_value<int>(key, value);
  } else if (key == "min_samples_split") {
    h.min_samples_split = parse_value<int>(key, value);
  } else if (key == "n_estimators") {
    h.n_estimators = parse_value<int>(key, value);
  } else if (key == "max_features") {
    h.max_features = value == "sqrt" ? -1 : parse_value<int>(key, value);
  } else if (key == "bootstrap") {
    if (value != "true" && value != "false") throw ConfigError("bootstrap must be true or false");
    h.bootstrap = value == "true";
  } else if (key == "learning_rate") {
    h.learning_rate = parse_value<double>(key, value);
  } else {
    throw ConfigError("unknown hyperparameter '" + std::string(key) + "'");
  }
}

void ModelSpec::validate() const {
  const Hyperparameters& h = params;
  if (!(h.l2_lambda >= 0.0) || !std::isfinite(h.l2_lambda)) throw ConfigError("l2_lambda must be >= 0");
  if (h.max_iter < 1) throw ConfigError("max_iter must be >= 1");
  if (!(h.tolerance >= 0.0)) throw ConfigError("tolerance must be >= 0");
  if (h.max_depth < 0) throw ConfigError("max_depth must be >= 0 (0 = unlimited)");
  if (h.min_samples_split < 2) throw ConfigError("min_samples_split must be >= 2");
  if (h.n_estimators < 1) throw ConfigError("n_estimators must be >= 1");
  if (h.max_features < -1) throw ConfigError("max_features must be >= -1");
  if (!(h.learning_rate > 0.0) || !std::isfinite(h.learning_rate)) throw ConfigError("learning_rate must be > 0");
}

TrainedModel::TrainedModel(ModelSpec spec, Schema schema, std::set<std::string> dropped,
                           Parameters parameters)
    : spec_(std::move(spec)),
      schema_(std::move(schema)),
      dropped_(std::move(dropped)),
      parameters_(std::move(parameters)) {
  validate_schema(schema_);
  for (const auto& name : dropped_) require_feature(schema_, name);
}

double TrainedModel::predict_proba(std::span<const double> row) const {
  check_row(schema_, row);
  return std::visit([row](const auto& m) { return m.predict(row); }, parameters_);
}

std::string TrainedModel::to_json() const {
  json j{{"format", "fairlens.model"},
         {"version", kModelFormatVersion},
         {"family", std::string(to_string(spec_.family))},
         {"seed", spec_.seed},
         {"hyperparameters", hyper_to_json(spec_.params)},
         {"schema", json_util::schema_to_json(schema_)},
         {"dropped_features", dropped_},
         {"parameters", params_to_json(parameters_)}};
  return json_util::dump(j);
}

TrainedModel TrainedModel::from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    if (j.at("format").get<std::string>() != "fairlens.model") throw DataError("not a fairlens model file");
    if (j.at("version").get<int>() != kModelFormatVersion) {
      throw DataError("unsupported model format version " + std::to_string(j.at("version").get<int>()));
    }
    ModelSpec spec;
    spec.family = parse_model_family(j.at("family").get<std::string>());
    spec.seed = j.at("seed").get<std::uint64_t>();
    spec.params = hyper_from_json(j.at("hyperparameters"));
    return TrainedModel(spec, json_util::schema_from_json(j.at("schema")),
                        j.at("dropped_features").get<std::set<std::string>>(),
                        params_from_json(j.at("parameters")));
  } catch (const json::exception& e) {
    throw DataError(std::string("model JSON: ") + e.what());
  }
}

TrainedModel train(const ModelSpec& spec, const Dataset& d, const std::set<std::string>& drop) {
  spec.validate();
  for (const auto& name : drop) {
    if (!find_feature(d.schema(), name)) {
      throw DataError("drop references unknown feature '" + name + "'");
    }
  }
  std::vector<std::size_t> active;
  for (std::size_t j = 0; j < d.num_features(); ++j) {
    if (!drop.contains(d.feature(j).name)) active.push_back(j);
  }
  if (active.empty()) throw DataError("drop set removes every feature");
  if (d.count_label(0) == 0 || d.count_label(1) == 0) {
    throw DataError("training data holds a single class");
  }

  const Hyperparameters& h = spec.params;
  Rng rng(spec.seed);
  TrainedModel::Parameters params;
  switch (spec.family) {
    case ModelFamily::kLogistic:
      params = detail::fit_logistic(d, active, h.l2_lambda, h.max_iter, h.tolerance);
      break;
    case ModelFamily::kAdaBoost:
      params = detail::fit_adaboost(d, active, h.n_estimators, h.learning_rate, rng);
      break;
    case ModelFamily::kTree:
    case ModelFamily::kBagging:
    case ModelFamily::kRandomForest: {
      detail::TreeOptions options{h.max_depth, h.min_samples_split, h.max_features};
      if (h.max_features == -1) {
        options.max_features =
            std::max(1, static_cast<int>(std::sqrt(static_cast<double>(active.size()))));
      }
      const int count = spec.family == ModelFamily::kTree ? 1 : h.n_estimators;
      const std::size_t n = d.num_rows();
      detail::TreeEnsemble ensemble;
      std::vector<double> weights(n);
      for (int t = 0; t < count; ++t) {
        Rng tree_rng(derive_seed(spec.seed, static_cast<std::uint64_t>(t)));
        if (h.bootstrap) {
          std::fill(weights.begin(), weights.end(), 0.0);
          for (std::size_t s = 0; s < n; ++s) weights[tree_rng.index(n)] += 1.0;
        } else {
          std::fill(weights.begin(), weights.end(), 1.0);
        }
        ensemble.trees.push_back(detail::fit_tree(d, weights, active, options, tree_rng));
      }
      params = std::move(ensemble);
      break;
    }
  }
  return TrainedModel(spec, d.schema(), drop, std::move(params));
}

}  // namespace fairlens
