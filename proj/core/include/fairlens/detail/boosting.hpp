#pragma once

#include <span>
#include <vector>

#include "fairlens/data.hpp"
#include "fairlens/detail/tree.hpp"
#include "fairlens/random.hpp"

namespace fairlens::detail {

// Two-class SAMME AdaBoost over depth-1 trees.
struct BoostedStumps {
  std::vector<DecisionTree> stumps;
  std::vector<double> alphas;
  // Weighted training error of each round's stump, before reweighting.
  std::vector<double> round_errors;

  // sum(alpha_t * h_t(x)) / sum(alpha_t) with h_t in {-1, +1}.
  double margin(std::span<const double> row) const;
  // Logistic transform of the normalized margin.
  double predict(std::span<const double> row) const;

  friend bool operator==(const BoostedStumps&, const BoostedStumps&) = default;
};

BoostedStumps fit_adaboost(const Dataset& d, std::span<const std::size_t> features, int rounds,
                           double learning_rate, Rng& rng);

}  // namespace fairlens::detail
