#include "fairlens/lime.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "fairlens/error.hpp"
#include "json_util.hpp"

namespace fairlens {
namespace {

// Linear-interpolated percentile, matching numpy's default method.
double percentile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

std::string format_edge(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace

NeighborhoodSampler::NeighborhoodSampler(const Dataset& training)
    : schema_(training.schema()), features_(training.num_features()) {
  const std::size_t n = training.num_rows();
  if (n == 0) throw DataError("neighbourhood sampler needs training rows");
  for (std::size_t j = 0; j < schema_.size(); ++j) {
    FeatureModel& fm = features_[j];
    if (schema_[j].is_categorical()) {
      std::vector<double> counts(schema_[j].categories.size(), 0.0);
      for (std::size_t i = 0; i < n; ++i) counts[static_cast<std::size_t>(training.cell(i, j))] += 1.0;
      double acc = 0.0;
      for (double c : counts) {
        acc += c / static_cast<double>(n);
        fm.cumulative.push_back(acc);
      }
      fm.cumulative.back() = 1.0;
      continue;
    }
    std::vector<double> values(n);
    for (std::size_t i = 0; i < n; ++i) values[i] = training.cell(i, j);
    std::sort(values.begin(), values.end());
    for (double q : {0.25, 0.5, 0.75}) {
      const double e = percentile(values, q);
      if (fm.edges.empty() || e > fm.edges.back()) fm.edges.push_back(e);
    }
    const std::size_t bins = fm.edges.size() + 1;
    fm.ranges.assign(bins, Bin{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()});
    for (double v : values) {
      Bin& b = fm.ranges[bin_of(j, v)];
      b.lo = std::min(b.lo, v);
      b.hi = std::max(b.hi, v);
    }
    std::vector<double> counts(bins, 0.0);
    for (double v : values) counts[bin_of(j, v)] += 1.0;
    double acc = 0.0;
    for (std::size_t b = 0; b < bins; ++b) {
      if (counts[b] == 0.0) continue;
      acc += counts[b] / static_cast<double>(n);
      fm.nonempty_bins.push_back(b);
      fm.cumulative.push_back(acc);
    }
    fm.cumulative.back() = 1.0;
  }
}

std::size_t NeighborhoodSampler::bin_of(std::size_t feature, double value) const {
  if (schema_[feature].is_categorical()) return static_cast<std::size_t>(value);
  const auto& edges = features_[feature].edges;
  return static_cast<std::size_t>(std::lower_bound(edges.begin(), edges.end(), value) - edges.begin());
}

std::size_t NeighborhoodSampler::num_bins(std::size_t feature) const {
  return schema_[feature].is_categorical() ? schema_[feature].categories.size()
                                           : features_[feature].edges.size() + 1;
}

std::string NeighborhoodSampler::describe(std::size_t feature, double value) const {
  const FeatureSchema& f = schema_[feature];
  if (f.is_categorical()) return f.name + " = " + f.categories[static_cast<std::size_t>(value)];
  const auto& edges = features_[feature].edges;
  const std::size_t b = bin_of(feature, value);
  if (b == 0) return f.name + " <= " + format_edge(edges.front());
  if (b == edges.size()) return f.name + " > " + format_edge(edges.back());
  return format_edge(edges[b - 1]) + " < " + f.name + " <= " + format_edge(edges[b]);
}

double NeighborhoodSampler::draw(std::size_t feature, Rng& rng) const {
  const FeatureModel& fm = features_[feature];
  if (schema_[feature].is_categorical()) {
    const double u = rng.uniform();
    const auto it = std::upper_bound(fm.cumulative.begin(), fm.cumulative.end(), u);
    return static_cast<double>(std::min<std::size_t>(
        static_cast<std::size_t>(it - fm.cumulative.begin()), fm.cumulative.size() - 1));
  }
  const auto it = std::upper_bound(fm.cumulative.begin(), fm.cumulative.end(), rng.uniform());
  const std::size_t pick = std::min<std::size_t>(static_cast<std::size_t>(it - fm.cumulative.begin()),
                                                 fm.nonempty_bins.size() - 1);
  const Bin& b = fm.ranges[fm.nonempty_bins[pick]];
  return b.lo == b.hi ? b.lo : rng.uniform(b.lo, b.hi);
}

NeighborSamples sample_neighbors(std::span<const double> x, const NeighborhoodSampler& sampler,
                                 std::size_t n, std::uint64_t seed) {
  if (n < 1) throw ConfigError("sample_neighbors needs n >= 1");
  check_row(sampler.schema(), x);
  const std::size_t d = sampler.num_features();
  NeighborSamples out;
  out.num_features = d;
  out.rows.resize(n * d);
  out.agreement.assign(n * d, 1);
  out.resampled.assign(n * d, 0);
  std::copy(x.begin(), x.end(), out.rows.begin());
  std::vector<std::size_t> own_bin(d);
  for (std::size_t j = 0; j < d; ++j) own_bin[j] = sampler.bin_of(j, x[j]);
  Rng rng(seed);
  for (std::size_t s = 1; s < n; ++s) {
    for (std::size_t j = 0; j < d; ++j) {
      const std::size_t at = s * d + j;
      if (!rng.bernoulli(0.5)) {
        out.rows[at] = x[j];
        continue;
      }
      const double v = sampler.draw(j, rng);
      out.rows[at] = v;
      out.resampled[at] = 1;
      out.agreement[at] = sampler.bin_of(j, v) == own_bin[j] ? 1 : 0;
    }
  }
  return out;
}

NeighborSamples sample_neighbors(std::span<const double> x, const Dataset& training, std::size_t n,
                                 std::uint64_t seed) {
  return sample_neighbors(x, NeighborhoodSampler(training), n, seed);
}

double kernel_weight_from_distance(double distance, double sigma) {
  if (!(sigma > 0.0)) throw ConfigError("kernel width must be > 0");
  return std::exp(-(distance * distance) / (sigma * sigma));
}

double kernel_weight(std::span<const double> x, std::span<const double> z, double sigma) {
  if (x.size() != z.size()) throw DataError("kernel_weight: dimension mismatch");
  double d2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) d2 += (x[i] - z[i]) * (x[i] - z[i]);
  return kernel_weight_from_distance(std::sqrt(d2), sigma);
}

double default_kernel_width(std::size_t num_features) {
  return 0.75 * std::sqrt(static_cast<double>(num_features));
}

SurrogateFit fit_surrogate(const SurrogateProblem& p) {
  const std::size_t w = p.width;
  if (w == 0) throw DataError("surrogate needs at least one interpretable feature");
  const std::size_t n = p.targets.size();
  if (p.design.size() != n * w || p.weights.size() != n) {
    throw DataError("surrogate: design, targets and weights disagree in size");
  }
  if (n < w + 1) throw DataError("surrogate needs at least width + 1 samples");
  if (!(p.ridge_lambda >= 0.0)) throw ConfigError("ridge lambda must be >= 0");
  double total = 0.0;
  for (double wi : p.weights) {
    if (!(wi >= 0.0) || !std::isfinite(wi)) throw DataError("surrogate weights must be finite and >= 0");
    total += wi;
  }
  if (!(total > 0.0)) throw DataError("surrogate weights are all zero");

  const auto dim = static_cast<Eigen::Index>(w + 1);
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd z(dim);
  for (std::size_t i = 0; i < n; ++i) {
    const double wi = p.weights[i];
    if (wi == 0.0) continue;
    z[0] = 1.0;
    for (std::size_t c = 0; c < w; ++c) z[static_cast<Eigen::Index>(c + 1)] = p.design[i * w + c];
    gram.noalias() += wi * z * z.transpose();
    rhs.noalias() += (wi * p.targets[i]) * z;
  }
  for (Eigen::Index c = 1; c < dim; ++c) gram(c, c) += p.ridge_lambda;

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(gram);
  if (qr.rank() < dim) {
    throw DataError("surrogate system is rank-deficient; use ridge_lambda > 0");
  }
  const Eigen::VectorXd coef = qr.solve(rhs);

  SurrogateFit fit;
  fit.intercept = coef[0];
  fit.coefficients.assign(coef.data() + 1, coef.data() + dim);
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += p.weights[i] * p.targets[i];
  mean /= total;
  double ss_res = 0.0;
  double ss_tot = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double pred = fit.intercept;
    for (std::size_t c = 0; c < w; ++c) pred += fit.coefficients[c] * p.design[i * w + c];
    ss_res += p.weights[i] * (p.targets[i] - pred) * (p.targets[i] - pred);
    ss_tot += p.weights[i] * (p.targets[i] - mean) * (p.targets[i] - mean);
  }
  // Constant targets are reproduced exactly by the intercept.
  fit.fidelity = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  return fit;
}

double Explanation::contribution(std::string_view feature) const {
  for (const auto& c : contributions) {
    if (c.feature == feature) return c.value;
  }
  return 0.0;
}

std::string Explanation::to_json() const {
  using json_util::json;
  json contribs = json::array();
  for (const auto& c : contributions) {
    contribs.push_back(json{{"feature", c.feature}, {"value", c.value}, {"condition", c.condition}});
  }
  return json_util::dump(json{{"intercept", intercept},
                              {"contributions", contribs},
                              {"sigma", kernel_width},
                              {"n_samples", n_samples},
                              {"fidelity", local_fidelity}});
}

Explanation Explanation::from_json(std::string_view text) {
  using json_util::json;
  try {
    const json j = json::parse(text);
    Explanation e;
    e.intercept = j.at("intercept").get<double>();
    e.kernel_width = j.at("sigma").get<double>();
    e.n_samples = j.at("n_samples").get<std::size_t>();
    e.local_fidelity = j.at("fidelity").get<double>();
    for (const auto& c : j.at("contributions")) {
      e.contributions.push_back(
          {c.at("feature").get<std::string>(), c.at("value").get<double>(), c.value("condition", "")});
    }
    return e;
  } catch (const json::exception& ex) {
    throw DataError(std::string("explanation JSON: ") + ex.what());
  }
}

Explanation explain(const Classifier& model, std::span<const double> x,
                    const NeighborhoodSampler& sampler, const LimeConfig& cfg) {
  if (model.schema() != sampler.schema()) throw DataError("model and sampler schemas differ");
  const std::size_t d = sampler.num_features();
  const double sigma = cfg.kernel_width.value_or(default_kernel_width(d));
  if (!(sigma > 0.0)) throw ConfigError("kernel width must be > 0");
  const NeighborSamples samples = sample_neighbors(x, sampler, cfg.n_samples, cfg.seed);
  const std::size_t n = samples.size();

  std::vector<double> design(n * d);
  std::vector<double> targets(n);
  std::vector<double> weights(n);
  for (std::size_t s = 0; s < n; ++s) {
    auto z = samples.interpretable(s);
    std::size_t agree = 0;
    for (std::size_t j = 0; j < d; ++j) {
      design[s * d + j] = z[j];
      agree += z[j];
    }
    // Distance to the all-ones vector of the instance itself.
    weights[s] = kernel_weight_from_distance(std::sqrt(static_cast<double>(d - agree)), sigma);
    targets[s] = model.predict_proba(samples.row(s));
  }
  const SurrogateFit fit = fit_surrogate({d, design, targets, weights, cfg.ridge_lambda});

  Explanation e;
  e.intercept = fit.intercept;
  e.kernel_width = sigma;
  e.n_samples = n;
  e.local_fidelity = fit.fidelity;
  for (std::size_t j = 0; j < d; ++j) {
    e.contributions.push_back({sampler.schema()[j].name, fit.coefficients[j], sampler.describe(j, x[j])});
  }
  std::stable_sort(e.contributions.begin(), e.contributions.end(),
                   [](const Contribution& a, const Contribution& b) { return std::abs(a.value) > std::abs(b.value); });
  return e;
}

Explanation explain(const Classifier& model, std::span<const double> x, const Dataset& training,
                    const LimeConfig& cfg) {
  return explain(model, x, NeighborhoodSampler(training), cfg);
}

}  // namespace fairlens
