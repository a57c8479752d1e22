#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fairlens/data.hpp"
#include "fairlens/random.hpp"

namespace fairlens::detail {

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  // Continuous split: value <= threshold goes left.
  double threshold = 0.0;
  // Categorical split: category c goes left iff left_categories[c] != 0.
  // Categories beyond the mask (unseen at this node) go right.
  std::vector<std::uint8_t> left_categories;
  int left = -1;
  int right = -1;
  // Weighted fraction of class 1 among the training rows reaching the node.
  double value = 0.0;

  bool is_leaf() const { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

class DecisionTree {
 public:
  DecisionTree() = default;
  explicit DecisionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}

  // Leaf probability of class 1.
  double predict(std::span<const double> row) const;
  const std::vector<TreeNode>& nodes() const { return nodes_; }
  std::size_t depth() const;

  friend bool operator==(const DecisionTree&, const DecisionTree&) = default;

 private:
  std::vector<TreeNode> nodes_;
};

struct TreeOptions {
  int max_depth = 0;  // 0 = unlimited
  int min_samples_split = 2;
  // Features examined per split; 0 = all candidate features.
  int max_features = 0;
};

// CART with Gini impurity on weighted rows. Rows with zero weight are
// ignored. Only columns listed in `features` are ever split on.
DecisionTree fit_tree(const Dataset& d, std::span<const double> weights,
                      std::span<const std::size_t> features, const TreeOptions& options, Rng& rng);

// Mean of member-tree probabilities (a single tree, bagging or random forest).
struct TreeEnsemble {
  std::vector<DecisionTree> trees;

  double predict(std::span<const double> row) const;
  friend bool operator==(const TreeEnsemble&, const TreeEnsemble&) = default;
};

}  // namespace fairlens::detail
