#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fairlens/data.hpp"

namespace fairlens::detail {

// Maps a raw row onto the logistic design: continuous features standardized
// with training statistics, categorical features one-hot over all categories.
// Every encoded row has exactly one non-zero slot per active feature.
struct LogisticEncoder {
  std::vector<std::size_t> features;  // active schema columns
  std::vector<std::size_t> offsets;   // first design column of each active feature
  std::vector<std::uint8_t> categorical;
  std::vector<double> mean;
  std::vector<double> scale;
  std::size_t width = 0;

  static LogisticEncoder fit(const Dataset& d, std::span<const std::size_t> features);

  std::size_t nnz() const { return features.size(); }
  void encode(std::span<const double> row, std::span<std::size_t> columns,
              std::span<double> values) const;

  friend bool operator==(const LogisticEncoder&, const LogisticEncoder&) = default;
};

// Sum of log-losses plus (lambda / 2) * ||w||^2 over parameters
// theta = [bias, w_1 .. w_width]; the bias is not penalized.
class LogisticObjective {
 public:
  LogisticObjective(const Dataset& d, const LogisticEncoder& encoder, double lambda);

  std::size_t dimension() const { return width_ + 1; }
  double value(std::span<const double> theta) const;
  double value_and_gradient(std::span<const double> theta, std::span<double> gradient) const;

 private:
  double margin(std::size_t i, std::span<const double> theta) const;

  std::size_t width_;
  std::size_t nnz_;
  std::vector<std::size_t> columns_;
  std::vector<double> values_;
  std::vector<double> labels_;
  double lambda_;
};

struct LogisticModel {
  LogisticEncoder encoder;
  std::vector<double> theta;  // [bias, weights...]
  int iterations = 0;
  double gradient_norm = 0.0;

  double decision(std::span<const double> row) const;
  double predict(std::span<const double> row) const;
  friend bool operator==(const LogisticModel&, const LogisticModel&) = default;
};

// Full-batch gradient descent with Armijo backtracking.
LogisticModel fit_logistic(const Dataset& d, std::span<const std::size_t> features, double lambda,
                           int max_iter, double tolerance);

double sigmoid(double x);

}  // namespace fairlens::detail
