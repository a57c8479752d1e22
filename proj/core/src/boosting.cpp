#include <cmath>

#include "fairlens/detail/boosting.hpp"
#include "fairlens/detail/logistic.hpp"
#include "fairlens/error.hpp"

namespace fairlens::detail {

double BoostedStumps::margin(std::span<const double> row) const {
  double vote = 0.0;
  double total = 0.0;
  for (std::size_t t = 0; t < stumps.size(); ++t) {
    vote += alphas[t] * (stumps[t].predict(row) >= 0.5 ? 1.0 : -1.0);
    total += alphas[t];
  }
  return total > 0.0 ? vote / total : 0.0;
}

double BoostedStumps::predict(std::span<const double> row) const { return sigmoid(margin(row)); }

BoostedStumps fit_adaboost(const Dataset& d, std::span<const std::size_t> features, int rounds,
                           double learning_rate, Rng& rng) {
  const std::size_t n = d.num_rows();
  if (n == 0) throw DataError("AdaBoost needs training rows");
  std::vector<double> w(n, 1.0 / static_cast<double>(n));
  std::vector<std::uint8_t> miss(n);
  const TreeOptions stump{.max_depth = 1, .min_samples_split = 2, .max_features = 0};
  BoostedStumps model;
  for (int t = 0; t < rounds; ++t) {
    DecisionTree tree = fit_tree(d, w, features, stump, rng);
    double err = 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint8_t h = tree.predict(d.row(i)) >= 0.5 ? 1 : 0;
      miss[i] = h != d.label(i) ? 1 : 0;
      err += miss[i] * w[i];
      total += w[i];
    }
    err /= total;
    if (err <= 0.0) {
      // A perfect learner ends boosting; it carries unit weight.
      model.stumps.push_back(std::move(tree));
      model.alphas.push_back(1.0);
      model.round_errors.push_back(0.0);
      break;
    }
    if (err >= 0.5) {
      if (model.stumps.empty()) {
        model.stumps.push_back(std::move(tree));
        model.alphas.push_back(1.0);
        model.round_errors.push_back(err);
      }
      break;
    }
    const double alpha = learning_rate * std::log((1.0 - err) / err);
    model.stumps.push_back(std::move(tree));
    model.alphas.push_back(alpha);
    model.round_errors.push_back(err);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (miss[i] != 0) w[i] *= std::exp(alpha);
      sum += w[i];
    }
    for (auto& x : w) x /= sum;
  }
  return model;
}

}  // namespace fairlens::detail
