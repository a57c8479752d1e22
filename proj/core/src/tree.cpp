#include <algorithm>
#include <limits>

#include "fairlens/detail/tree.hpp"
#include "fairlens/error.hpp"

namespace fairlens::detail {
namespace {

struct Split {
  double score = -std::numeric_limits<double>::infinity();
  int feature = -1;
  double threshold = 0.0;
  std::vector<std::uint8_t> left_categories;
};

struct Task {
  int node;
  std::size_t begin;
  std::size_t end;
  int depth;
};

// (l0^2 + l1^2) / wl + (r0^2 + r1^2) / wr; larger means lower weighted Gini.
double purity(double l0, double l1, double r0, double r1) {
  return (l0 * l0 + l1 * l1) / (l0 + l1) + (r0 * r0 + r1 * r1) / (r0 + r1);
}

class Builder {
 public:
  Builder(const Dataset& d, std::span<const double> weights, std::span<const std::size_t> features,
          const TreeOptions& options, Rng& rng)
      : d_(d), weights_(weights), features_(features.begin(), features.end()), options_(options), rng_(rng) {}

  std::vector<TreeNode> build() {
    for (std::size_t i = 0; i < d_.num_rows(); ++i) {
      if (weights_[i] > 0.0) rows_.push_back(i);
    }
    if (rows_.empty()) throw DataError("tree training data has no weighted rows");
    nodes_.emplace_back();
    std::vector<Task> stack{{0, 0, rows_.size(), 0}};
    while (!stack.empty()) {
      const Task task = stack.back();
      stack.pop_back();
      expand(task, stack);
    }
    return std::move(nodes_);
  }

 private:
  void expand(const Task& task, std::vector<Task>& stack) {
    double w0 = 0.0;
    double w1 = 0.0;
    for (std::size_t r = task.begin; r < task.end; ++r) {
      const std::size_t i = rows_[r];
      (d_.label(i) == 1 ? w1 : w0) += weights_[i];
    }
    nodes_[task.node].value = w1 / (w0 + w1);
    const std::size_t n = task.end - task.begin;
    if (w0 <= 0.0 || w1 <= 0.0) return;
    if (n < static_cast<std::size_t>(std::max(2, options_.min_samples_split))) return;
    if (options_.max_depth > 0 && task.depth >= options_.max_depth) return;

    Split best = find_split(task, w0, w1);
    if (best.feature < 0) return;

    const auto j = static_cast<std::size_t>(best.feature);
    const bool categorical = d_.feature(j).is_categorical();
    auto goes_left = [&](std::size_t i) {
      const double v = d_.cell(i, j);
      if (categorical) {
        const auto c = static_cast<std::size_t>(v);
        return c < best.left_categories.size() && best.left_categories[c] != 0;
      }
      return v <= best.threshold;
    };
    auto first = rows_.begin() + static_cast<std::ptrdiff_t>(task.begin);
    auto last = rows_.begin() + static_cast<std::ptrdiff_t>(task.end);
    auto mid = std::stable_partition(first, last, goes_left);
    const std::size_t split_at = static_cast<std::size_t>(mid - rows_.begin());

    const int left = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    const int right = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    TreeNode& node = nodes_[task.node];
    node.feature = best.feature;
    node.threshold = best.threshold;
    node.left_categories = std::move(best.left_categories);
    node.left = left;
    node.right = right;
    stack.push_back({right, split_at, task.end, task.depth + 1});
    stack.push_back({left, task.begin, split_at, task.depth + 1});
  }

  Split find_split(const Task& task, double w0, double w1) {
    std::vector<std::size_t> order = features_;
    std::size_t budget = order.size();
    if (options_.max_features > 0 && static_cast<std::size_t>(options_.max_features) < order.size()) {
      rng_.shuffle(std::span<std::size_t>(order));
      budget = static_cast<std::size_t>(options_.max_features);
    }
    Split best;
    std::size_t examined = 0;
    for (std::size_t j : order) {
      if (examined >= budget) break;
      const bool informative = d_.feature(j).is_categorical() ? scan_categorical(task, j, w0, w1, best)
                                                              : scan_continuous(task, j, w0, w1, best);
      if (informative) ++examined;
    }
    return best;
  }

  // Returns false when the feature is constant over the node.
  bool scan_continuous(const Task& task, std::size_t j, double w0, double w1, Split& best) {
    sorted_.clear();
    for (std::size_t r = task.begin; r < task.end; ++r) {
      const std::size_t i = rows_[r];
      sorted_.push_back({d_.cell(i, j), i});
    }
    std::sort(sorted_.begin(), sorted_.end());
    if (sorted_.front().first == sorted_.back().first) return false;
    double l0 = 0.0;
    double l1 = 0.0;
    for (std::size_t k = 0; k + 1 < sorted_.size(); ++k) {
      const std::size_t i = sorted_[k].second;
      (d_.label(i) == 1 ? l1 : l0) += weights_[i];
      const double a = sorted_[k].first;
      const double b = sorted_[k + 1].first;
      if (!(a < b)) continue;
      const double score = purity(l0, l1, w0 - l0, w1 - l1);
      if (score > best.score) {
        double t = a + (b - a) / 2.0;
        if (!(t < b)) t = a;
        best.score = score;
        best.feature = static_cast<int>(j);
        best.threshold = t;
        best.left_categories.clear();
      }
    }
    return true;
  }

  bool scan_categorical(const Task& task, std::size_t j, double w0, double w1, Split& best) {
    const std::size_t k_total = d_.feature(j).categories.size();
    cat0_.assign(k_total, 0.0);
    cat1_.assign(k_total, 0.0);
    for (std::size_t r = task.begin; r < task.end; ++r) {
      const std::size_t i = rows_[r];
      const auto c = static_cast<std::size_t>(d_.cell(i, j));
      (d_.label(i) == 1 ? cat1_ : cat0_)[c] += weights_[i];
    }
    present_.clear();
    for (std::size_t c = 0; c < k_total; ++c) {
      if (cat0_[c] + cat1_[c] > 0.0) present_.push_back(c);
    }
    if (present_.size() < 2) return false;
    // Ordering categories by positive rate makes the best prefix partition
    // optimal for two-class Gini.
    std::stable_sort(present_.begin(), present_.end(), [&](std::size_t a, std::size_t b) {
      return cat1_[a] / (cat0_[a] + cat1_[a]) < cat1_[b] / (cat0_[b] + cat1_[b]);
    });
    double l0 = 0.0;
    double l1 = 0.0;
    for (std::size_t p = 0; p + 1 < present_.size(); ++p) {
      l0 += cat0_[present_[p]];
      l1 += cat1_[present_[p]];
      const double score = purity(l0, l1, w0 - l0, w1 - l1);
      if (score > best.score) {
        best.score = score;
        best.feature = static_cast<int>(j);
        best.threshold = 0.0;
        best.left_categories.assign(k_total, 0);
        for (std::size_t q = 0; q <= p; ++q) best.left_categories[present_[q]] = 1;
      }
    }
    return true;
  }

  const Dataset& d_;
  std::span<const double> weights_;
  std::vector<std::size_t> features_;
  const TreeOptions& options_;
  Rng& rng_;
  std::vector<std::size_t> rows_;
  std::vector<TreeNode> nodes_;
  std::vector<std::pair<double, std::size_t>> sorted_;
  std::vector<double> cat0_;
  std::vector<double> cat1_;
  std::vector<std::size_t> present_;
};

}  // namespace

double DecisionTree::predict(std::span<const double> row) const {
  std::size_t at = 0;
  while (!nodes_[at].is_leaf()) {
    const TreeNode& node = nodes_[at];
    const double v = row[static_cast<std::size_t>(node.feature)];
    bool left;
    if (node.left_categories.empty()) {
      left = v <= node.threshold;
    } else {
      const auto c = static_cast<std::size_t>(v);
      left = c < node.left_categories.size() && node.left_categories[c] != 0;
    }
    at = static_cast<std::size_t>(left ? node.left : node.right);
  }
  return nodes_[at].value;
}

std::size_t DecisionTree::depth() const {
  if (nodes_.empty()) return 0;
  std::size_t deepest = 0;
  std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
  while (!stack.empty()) {
    auto [at, depth] = stack.back();
    stack.pop_back();
    deepest = std::max(deepest, depth);
    if (!nodes_[at].is_leaf()) {
      stack.push_back({static_cast<std::size_t>(nodes_[at].left), depth + 1});
      stack.push_back({static_cast<std::size_t>(nodes_[at].right), depth + 1});
    }
  }
  return deepest;
}

DecisionTree fit_tree(const Dataset& d, std::span<const double> weights,
                      std::span<const std::size_t> features, const TreeOptions& options, Rng& rng) {
  if (weights.size() != d.num_rows()) throw DataError("tree weights do not match row count");
  return DecisionTree(Builder(d, weights, features, options, rng).build());
}

double TreeEnsemble::predict(std::span<const double> row) const {
  double sum = 0.0;
  for (const auto& tree : trees) sum += tree.predict(row);
  return sum / static_cast<double>(trees.size());
}

}  // namespace fairlens::detail
