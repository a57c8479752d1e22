#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fairlens/data.hpp"
#include "fairlens/models.hpp"
#include "fairlens/random.hpp"

namespace fairlens {

// Training-distribution summary used to perturb instances and to map raw
// values onto interpretable slots. Categorical features keep their empirical
// category frequencies; continuous features are cut at the training quartiles
// (duplicate edges merged) and remember each bin's observed value range.
class NeighborhoodSampler {
 public:
  explicit NeighborhoodSampler(const Dataset& training);

  const Schema& schema() const { return schema_; }
  std::size_t num_features() const { return schema_.size(); }

  // Category index, or the quartile bin of a continuous value.
  std::size_t bin_of(std::size_t feature, double value) const;
  std::size_t num_bins(std::size_t feature) const;
  std::span<const double> bin_edges(std::size_t feature) const { return features_[feature].edges; }
  // Human-readable slot condition, e.g. "CapitalGain <= 0.00" or "Sex = Male".
  std::string describe(std::size_t feature, double value) const;

  double draw(std::size_t feature, Rng& rng) const;

 private:
  struct Bin {
    double lo;
    double hi;
  };
  struct FeatureModel {
    // Cumulative training frequencies of the categories, or of the non-empty
    // bins of a continuous feature.
    std::vector<double> cumulative;
    std::vector<double> edges;       // continuous: de-duplicated quartiles
    std::vector<std::size_t> nonempty_bins;
    std::vector<Bin> ranges;  // observed [min, max] per bin
  };

  Schema schema_;
  std::vector<FeatureModel> features_;
};

// Perturbed neighbourhood of one instance. Sample 0 is the instance itself.
struct NeighborSamples {
  std::size_t num_features = 0;
  std::vector<double> rows;              // raw perturbed rows, row-major
  std::vector<std::uint8_t> agreement;   // 1 iff the slot matches the instance's bin/category
  std::vector<std::uint8_t> resampled;   // 1 iff the feature was drawn from the training distribution

  std::size_t size() const { return num_features == 0 ? 0 : rows.size() / num_features; }
  std::span<const double> row(std::size_t s) const {
    return {rows.data() + s * num_features, num_features};
  }
  std::span<const std::uint8_t> interpretable(std::size_t s) const {
    return {agreement.data() + s * num_features, num_features};
  }
};

// Each sample resamples a uniformly random subset of features (every feature
// independently with probability 1/2): categorical from the empirical
// distribution, continuous by a bin drawn with its training frequency then a
// uniform value in the bin's observed range.
NeighborSamples sample_neighbors(std::span<const double> x, const NeighborhoodSampler& sampler,
                                 std::size_t n, std::uint64_t seed);
NeighborSamples sample_neighbors(std::span<const double> x, const Dataset& training, std::size_t n,
                                 std::uint64_t seed);

// exp(-D(x, z)^2 / sigma^2) with D the Euclidean distance.
double kernel_weight(std::span<const double> x, std::span<const double> z, double sigma);
double kernel_weight_from_distance(double distance, double sigma);
// 0.75 * sqrt(num_features).
double default_kernel_width(std::size_t num_features);

// Weighted ridge problem over an n x width design (rows are interpretable
// vectors). The intercept is not penalized.
struct SurrogateProblem {
  std::size_t width = 0;
  std::span<const double> design;
  std::span<const double> targets;
  std::span<const double> weights;
  double ridge_lambda = 1.0;
};

struct SurrogateFit {
  double intercept = 0.0;
  std::vector<double> coefficients;
  double fidelity = 1.0;  // weighted R^2
};

// Closed-form normal-equations solve of
//   min sum_i w_i (y_i - a0 - a . z_i)^2 + lambda * ||a||^2.
SurrogateFit fit_surrogate(const SurrogateProblem& problem);

struct Contribution {
  std::string feature;
  double value = 0.0;
  std::string condition;

  friend bool operator==(const Contribution&, const Contribution&) = default;
};

struct Explanation {
  double intercept = 0.0;
  // One entry per feature, sorted by |value| descending (schema order on ties).
  std::vector<Contribution> contributions;
  double kernel_width = 0.0;
  std::size_t n_samples = 0;
  double local_fidelity = 1.0;

  // Contribution of a feature by name (0 when absent).
  double contribution(std::string_view feature) const;

  // {intercept, contributions: [{feature, value, condition}], sigma, n_samples, fidelity}
  std::string to_json() const;
  static Explanation from_json(std::string_view text);

  friend bool operator==(const Explanation&, const Explanation&) = default;
};

struct LimeConfig {
  std::size_t n_samples = 5000;
  std::optional<double> kernel_width;  // default_kernel_width(d) when unset
  double ridge_lambda = 1.0;
  std::uint64_t seed = 0;
};

// sample_neighbors -> predict_proba on the raw perturbed rows -> kernel
// weights -> fit_surrogate. Deterministic in cfg.seed.
Explanation explain(const Classifier& model, std::span<const double> x,
                    const NeighborhoodSampler& sampler, const LimeConfig& cfg);
Explanation explain(const Classifier& model, std::span<const double> x, const Dataset& training,
                    const LimeConfig& cfg);

}  // namespace fairlens
