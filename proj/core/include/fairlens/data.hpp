#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace fairlens {

enum class FeatureKind { kCategorical, kContinuous };

std::string_view to_string(FeatureKind kind);
FeatureKind parse_feature_kind(std::string_view text);

struct FeatureSchema {
  std::string name;
  FeatureKind kind = FeatureKind::kContinuous;
  // Ordered distinct values; a categorical cell stores an index into this list.
  std::vector<std::string> categories;

  bool is_categorical() const { return kind == FeatureKind::kCategorical; }

  friend bool operator==(const FeatureSchema&, const FeatureSchema&) = default;
};

using Schema = std::vector<FeatureSchema>;

std::optional<std::size_t> find_feature(const Schema& schema, std::string_view name);
// Throws DataError when the feature is absent.
std::size_t require_feature(const Schema& schema, std::string_view name);
// Checks name uniqueness and category-table invariants.
void validate_schema(const Schema& schema);

// How the two raw target values map onto {0, 1}.
struct TargetEncoding {
  std::string column = "target";
  std::string negative_label = "0";
  std::string positive_label = "1";

  friend bool operator==(const TargetEncoding&, const TargetEncoding&) = default;
};

// Immutable tabular dataset with a binary target. Cells are stored row-major
// as doubles: categorical cells hold their category index, continuous cells
// hold the raw value.
class Dataset {
 public:
  Dataset() = default;
  // Validates every invariant; throws DataError on violation.
  Dataset(Schema schema, std::vector<double> cells, std::vector<std::uint8_t> target,
          std::set<std::string> sensitive = {}, TargetEncoding encoding = {});

  std::size_t num_rows() const { return target_.size(); }
  std::size_t num_features() const { return schema_.size(); }
  bool empty() const { return target_.empty(); }

  const Schema& schema() const { return schema_; }
  const FeatureSchema& feature(std::size_t j) const { return schema_[j]; }
  const std::set<std::string>& sensitive() const { return sensitive_; }
  const TargetEncoding& target_encoding() const { return encoding_; }

  std::span<const double> row(std::size_t i) const {
    return {cells_.data() + i * schema_.size(), schema_.size()};
  }
  double cell(std::size_t i, std::size_t j) const { return cells_[i * schema_.size() + j]; }
  std::uint8_t label(std::size_t i) const { return target_[i]; }
  std::span<const std::uint8_t> labels() const { return target_; }
  std::span<const double> cells() const { return cells_; }

  std::size_t count_label(std::uint8_t label) const;

  // Rows in the given order (duplicates allowed).
  Dataset subset(std::span<const std::size_t> rows) const;
  Dataset with_sensitive(std::set<std::string> sensitive) const;
  // Appends rows sharing this dataset's schema.
  Dataset concat(std::span<const double> extra_cells, std::span<const std::uint8_t> extra_target) const;

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  Schema schema_;
  std::vector<double> cells_;
  std::vector<std::uint8_t> target_;
  std::set<std::string> sensitive_;
  TargetEncoding encoding_;
};

// Throws DataError when `row` does not conform to `schema` (width, category
// index range, finiteness).
void check_row(const Schema& schema, std::span<const double> row);

struct LoadOptions {
  // Per-column kind overrides; unlisted columns are auto-typed.
  std::map<std::string, FeatureKind> hints;
  // Frozen schema (e.g. from the training file). When set, columns take their
  // kinds and category tables from it and unseen categories are rejected.
  const Schema* reference = nullptr;
  // Raw target value mapped to 1; defaults to the lexicographically greater
  // of the two observed values.
  std::optional<std::string> positive_label;
  std::set<std::string> sensitive;
};

Dataset load_csv(const std::filesystem::path& path, std::string_view target_column,
                 const LoadOptions& options = {});
Dataset parse_csv(std::string_view text, std::string_view target_column,
                  const LoadOptions& options = {});

// Canonical CSV form: header row, categorical cells verbatim, continuous
// cells in shortest round-trip notation, target as its raw label.
std::string to_csv(const Dataset& d);
void write_csv(const Dataset& d, const std::filesystem::path& path);

// Schema-hint file: JSON object {column: "categorical" | "continuous"}.
std::map<std::string, FeatureKind> load_schema_hints(const std::filesystem::path& path);
std::map<std::string, FeatureKind> schema_hints(const Schema& schema);

// Per-column mean and standard deviation of continuous features, used for
// distance computations. Categorical columns get mean 0, scale 1.
class Standardizer {
 public:
  Standardizer() = default;
  explicit Standardizer(const Dataset& d);

  double transform(std::size_t j, double value) const { return (value - mean_[j]) / scale_[j]; }
  double mean(std::size_t j) const { return mean_[j]; }
  double scale(std::size_t j) const { return scale_[j]; }
  std::size_t size() const { return mean_.size(); }

 private:
  std::vector<double> mean_;
  std::vector<double> scale_;
};

struct SplitPair {
  Dataset train;
  Dataset test;
  std::uint64_t seed = 0;
};

// Uniform shuffle under `seed`; the first ceil(fraction * n) shuffled rows go
// to train, the rest to test.
SplitPair split(const Dataset& d, double train_fraction, std::uint64_t seed);

// Appends synthetic minority rows until both classes have equal counts.
// Original rows are kept verbatim and come first.
Dataset smote(const Dataset& d, std::size_t k_neighbors, std::uint64_t seed);

}  // namespace fairlens
