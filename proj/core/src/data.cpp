#include "fairlens/data.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "fairlens/error.hpp"
#include "fairlens/random.hpp"

namespace fairlens {

std::string_view to_string(FeatureKind kind) {
  return kind == FeatureKind::kCategorical ? "categorical" : "continuous";
}

FeatureKind parse_feature_kind(std::string_view text) {
  if (text == "categorical") return FeatureKind::kCategorical;
  if (text == "continuous") return FeatureKind::kContinuous;
  throw ConfigError("unknown feature kind '" + std::string(text) +
                    "' (expected categorical or continuous)");
}

std::optional<std::size_t> find_feature(const Schema& schema, std::string_view name) {
  for (std::size_t j = 0; j < schema.size(); ++j) {
    if (schema[j].name == name) return j;
  }
  return std::nullopt;
}

std::size_t require_feature(const Schema& schema, std::string_view name) {
  if (auto j = find_feature(schema, name)) return *j;
  throw DataError("unknown feature '" + std::string(name) + "'");
}

void validate_schema(const Schema& schema) {
  std::unordered_set<std::string> names;
  for (const auto& f : schema) {
    if (!names.insert(f.name).second) throw DataError("duplicate feature name '" + f.name + "'");
    if (f.is_categorical()) {
      if (f.categories.empty()) throw DataError("categorical feature '" + f.name + "' has no categories");
      std::unordered_set<std::string> seen(f.categories.begin(), f.categories.end());
      if (seen.size() != f.categories.size()) {
        throw DataError("categorical feature '" + f.name + "' has duplicate categories");
      }
    } else if (!f.categories.empty()) {
      throw DataError("continuous feature '" + f.name + "' carries a category table");
    }
  }
}

void check_row(const Schema& schema, std::span<const double> row) {
  if (row.size() != schema.size()) {
    throw DataError("row has " + std::to_string(row.size()) + " cells, schema has " +
                    std::to_string(schema.size()));
  }
  for (std::size_t j = 0; j < schema.size(); ++j) {
    const double v = row[j];
    if (!std::isfinite(v)) throw DataError("non-finite value in feature '" + schema[j].name + "'");
    if (schema[j].is_categorical()) {
      if (v < 0 || v != std::floor(v) || v >= static_cast<double>(schema[j].categories.size())) {
        throw DataError("unseen category index " + std::to_string(v) + " for feature '" +
                        schema[j].name + "'");
      }
    }
  }
}

Dataset::Dataset(Schema schema, std::vector<double> cells, std::vector<std::uint8_t> target,
                 std::set<std::string> sensitive, TargetEncoding encoding)
    : schema_(std::move(schema)),
      cells_(std::move(cells)),
      target_(std::move(target)),
      sensitive_(std::move(sensitive)),
      encoding_(std::move(encoding)) {
  validate_schema(schema_);
  if (cells_.size() != target_.size() * schema_.size()) {
    throw DataError("cell count " + std::to_string(cells_.size()) + " does not match " +
                    std::to_string(target_.size()) + " rows x " + std::to_string(schema_.size()) +
                    " features");
  }
  for (auto y : target_) {
    if (y > 1) throw DataError("target labels must be 0 or 1");
  }
  for (const auto& s : sensitive_) require_feature(schema_, s);
  for (std::size_t i = 0; i < num_rows(); ++i) check_row(schema_, row(i));
}

std::size_t Dataset::count_label(std::uint8_t label) const {
  return static_cast<std::size_t>(std::count(target_.begin(), target_.end(), label));
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  const std::size_t d = num_features();
  std::vector<double> cells;
  cells.reserve(rows.size() * d);
  std::vector<std::uint8_t> target;
  target.reserve(rows.size());
  for (auto i : rows) {
    if (i >= num_rows()) throw DataError("row index out of range");
    auto r = row(i);
    cells.insert(cells.end(), r.begin(), r.end());
    target.push_back(target_[i]);
  }
  return Dataset(schema_, std::move(cells), std::move(target), sensitive_, encoding_);
}

Dataset Dataset::with_sensitive(std::set<std::string> sensitive) const {
  return Dataset(schema_, cells_, target_, std::move(sensitive), encoding_);
}

Dataset Dataset::concat(std::span<const double> extra_cells,
                        std::span<const std::uint8_t> extra_target) const {
  std::vector<double> cells = cells_;
  cells.insert(cells.end(), extra_cells.begin(), extra_cells.end());
  std::vector<std::uint8_t> target = target_;
  target.insert(target.end(), extra_target.begin(), extra_target.end());
  return Dataset(schema_, std::move(cells), std::move(target), sensitive_, encoding_);
}

Standardizer::Standardizer(const Dataset& d)
    : mean_(d.num_features(), 0.0), scale_(d.num_features(), 1.0) {
  const std::size_t n = d.num_rows();
  if (n == 0) return;
  for (std::size_t j = 0; j < d.num_features(); ++j) {
    if (d.feature(j).is_categorical()) continue;
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += d.cell(i, j);
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double dv = d.cell(i, j) - mean;
      ss += dv * dv;
    }
    const double sd = std::sqrt(ss / static_cast<double>(n));
    mean_[j] = mean;
    scale_[j] = sd > 0.0 ? sd : 1.0;
  }
}

SplitPair split(const Dataset& d, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ConfigError("train fraction must lie in (0, 1)");
  }
  if (d.count_label(0) < 2 || d.count_label(1) < 2) {
    throw DataError("split needs at least 2 rows of each class");
  }
  const std::size_t n = d.num_rows();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));
  const auto n_train =
      static_cast<std::size_t>(std::ceil(train_fraction * static_cast<double>(n)));
  if (n_train == 0 || n_train >= n) throw DataError("split leaves an empty partition");
  std::span<const std::size_t> all(order);
  return SplitPair{d.subset(all.first(n_train)), d.subset(all.subspan(n_train)), seed};
}

Dataset smote(const Dataset& d, std::size_t k_neighbors, std::uint64_t seed) {
  const std::size_t n0 = d.count_label(0);
  const std::size_t n1 = d.count_label(1);
  if (n0 == 0 || n1 == 0) throw DataError("smote needs both classes present");
  if (n0 == n1) return d;
  const std::uint8_t minority = n1 < n0 ? 1 : 0;
  const std::size_t n_min = std::min(n0, n1);
  if (k_neighbors == 0) throw ConfigError("smote needs k_neighbors >= 1");
  if (n_min <= k_neighbors) {
    throw DataError("smote: minority count " + std::to_string(n_min) +
                    " must exceed k_neighbors " + std::to_string(k_neighbors));
  }

  std::vector<std::size_t> members;
  for (std::size_t i = 0; i < d.num_rows(); ++i) {
    if (d.label(i) == minority) members.push_back(i);
  }

  const Standardizer scaler(d);
  std::vector<std::size_t> continuous;
  for (std::size_t j = 0; j < d.num_features(); ++j) {
    if (!d.feature(j).is_categorical()) continuous.push_back(j);
  }
  std::vector<double> z(n_min * continuous.size());
  for (std::size_t a = 0; a < n_min; ++a) {
    for (std::size_t c = 0; c < continuous.size(); ++c) {
      const std::size_t j = continuous[c];
      z[a * continuous.size() + c] = scaler.transform(j, d.cell(members[a], j));
    }
  }

  // k nearest minority neighbours of each minority row; ties by lower index.
  std::vector<std::size_t> neighbours(n_min * k_neighbors);
  std::vector<std::pair<double, std::size_t>> dist(n_min - 1);
  for (std::size_t a = 0; a < n_min; ++a) {
    std::size_t m = 0;
    for (std::size_t b = 0; b < n_min; ++b) {
      if (b == a) continue;
      double s = 0.0;
      for (std::size_t c = 0; c < continuous.size(); ++c) {
        const double diff = z[a * continuous.size() + c] - z[b * continuous.size() + c];
        s += diff * diff;
      }
      dist[m++] = {s, b};
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k_neighbors),
                      dist.end());
    for (std::size_t r = 0; r < k_neighbors; ++r) neighbours[a * k_neighbors + r] = dist[r].second;
  }

  const std::size_t needed = std::max(n0, n1) - n_min;
  const std::size_t width = d.num_features();
  std::vector<double> cells(needed * width);
  std::vector<std::uint8_t> target(needed, minority);
  Rng rng(seed);
  for (std::size_t s = 0; s < needed; ++s) {
    const std::size_t a = rng.index(n_min);
    const std::size_t b = neighbours[a * k_neighbors + rng.index(k_neighbors)];
    const double u = rng.uniform();
    auto x = d.row(members[a]);
    auto nn = d.row(members[b]);
    double* out = cells.data() + s * width;
    for (std::size_t j = 0; j < width; ++j) {
      // A two-way vote between x and its neighbour always resolves to x
      // (agreement, or a tie broken toward x).
      if (d.feature(j).is_categorical()) {
        out[j] = x[j];
      } else {
        const auto [lo, hi] = std::minmax(x[j], nn[j]);
        out[j] = std::clamp(x[j] + u * (nn[j] - x[j]), lo, hi);
      }
    }
  }
  return d.concat(cells, target);
}

}  // namespace fairlens
