#include <cmath>

#include "fairlens/detail/logistic.hpp"
#include "fairlens/error.hpp"

namespace fairlens::detail {
namespace {

// log(1 + exp(x)) without overflow.
double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double squared_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

}  // namespace

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

LogisticEncoder LogisticEncoder::fit(const Dataset& d, std::span<const std::size_t> features) {
  LogisticEncoder enc;
  const Standardizer scaler(d);
  for (std::size_t j : features) {
    enc.features.push_back(j);
    enc.offsets.push_back(enc.width);
    const bool cat = d.feature(j).is_categorical();
    enc.categorical.push_back(cat ? 1 : 0);
    enc.mean.push_back(cat ? 0.0 : scaler.mean(j));
    enc.scale.push_back(cat ? 1.0 : scaler.scale(j));
    enc.width += cat ? d.feature(j).categories.size() : 1;
  }
  return enc;
}

void LogisticEncoder::encode(std::span<const double> row, std::span<std::size_t> columns,
                             std::span<double> values) const {
  for (std::size_t a = 0; a < features.size(); ++a) {
    const double v = row[features[a]];
    if (categorical[a] != 0) {
      columns[a] = offsets[a] + static_cast<std::size_t>(v);
      values[a] = 1.0;
    } else {
      columns[a] = offsets[a];
      values[a] = (v - mean[a]) / scale[a];
    }
  }
}

LogisticObjective::LogisticObjective(const Dataset& d, const LogisticEncoder& encoder, double lambda)
    : width_(encoder.width),
      nnz_(encoder.nnz()),
      columns_(d.num_rows() * encoder.nnz()),
      values_(d.num_rows() * encoder.nnz()),
      labels_(d.num_rows()),
      lambda_(lambda) {
  for (std::size_t i = 0; i < d.num_rows(); ++i) {
    encoder.encode(d.row(i), std::span(columns_).subspan(i * nnz_, nnz_),
                   std::span(values_).subspan(i * nnz_, nnz_));
    labels_[i] = d.label(i);
  }
}

double LogisticObjective::margin(std::size_t i, std::span<const double> theta) const {
  double m = theta[0];
  for (std::size_t a = 0; a < nnz_; ++a) m += theta[1 + columns_[i * nnz_ + a]] * values_[i * nnz_ + a];
  return m;
}

double LogisticObjective::value(std::span<const double> theta) const {
  double loss = 0.0;
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    const double m = margin(i, theta);
    loss += labels_[i] > 0.5 ? softplus(-m) : softplus(m);
  }
  return loss + 0.5 * lambda_ * squared_norm(theta.subspan(1));
}

double LogisticObjective::value_and_gradient(std::span<const double> theta,
                                             std::span<double> gradient) const {
  std::fill(gradient.begin(), gradient.end(), 0.0);
  double loss = 0.0;
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    const double m = margin(i, theta);
    const double y = labels_[i];
    loss += y > 0.5 ? softplus(-m) : softplus(m);
    const double r = sigmoid(m) - y;
    gradient[0] += r;
    for (std::size_t a = 0; a < nnz_; ++a) {
      gradient[1 + columns_[i * nnz_ + a]] += r * values_[i * nnz_ + a];
    }
  }
  for (std::size_t c = 1; c < theta.size(); ++c) gradient[c] += lambda_ * theta[c];
  return loss + 0.5 * lambda_ * squared_norm(theta.subspan(1));
}

double LogisticModel::decision(std::span<const double> row) const {
  double m = theta[0];
  for (std::size_t a = 0; a < encoder.features.size(); ++a) {
    const double v = row[encoder.features[a]];
    if (encoder.categorical[a] != 0) {
      m += theta[1 + encoder.offsets[a] + static_cast<std::size_t>(v)];
    } else {
      m += theta[1 + encoder.offsets[a]] * ((v - encoder.mean[a]) / encoder.scale[a]);
    }
  }
  return m;
}

double LogisticModel::predict(std::span<const double> row) const { return sigmoid(decision(row)); }

LogisticModel fit_logistic(const Dataset& d, std::span<const std::size_t> features, double lambda,
                           int max_iter, double tolerance) {
  LogisticModel model;
  model.encoder = LogisticEncoder::fit(d, features);
  const LogisticObjective objective(d, model.encoder, lambda);
  const std::size_t dim = objective.dimension();
  std::vector<double> theta(dim, 0.0);
  std::vector<double> grad(dim);
  std::vector<double> trial(dim);
  double f = objective.value_and_gradient(theta, grad);
  double step = 1.0 / static_cast<double>(std::max<std::size_t>(d.num_rows(), 1));
  constexpr double kArmijo = 1e-4;
  int it = 0;
  double gnorm2 = squared_norm(grad);
  for (; it < max_iter && std::sqrt(gnorm2) > tolerance; ++it) {
    step *= 2.0;
    double f_trial = 0.0;
    for (;;) {
      for (std::size_t c = 0; c < dim; ++c) trial[c] = theta[c] - step * grad[c];
      f_trial = objective.value(trial);
      if (f_trial <= f - kArmijo * step * gnorm2 || step < 1e-20) break;
      step *= 0.5;
    }
    if (!(f_trial < f)) break;
    theta.swap(trial);
    f = objective.value_and_gradient(theta, grad);
    gnorm2 = squared_norm(grad);
  }
  model.theta = std::move(theta);
  model.iterations = it;
  model.gradient_norm = std::sqrt(gnorm2);
  return model;
}

}  // namespace fairlens::detail
