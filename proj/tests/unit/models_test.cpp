#include <gmock/gmock.h>
#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "fairlens/error.hpp"
#include "fairlens/models.hpp"
#include "synthetic.hpp"

namespace fairlens {
namespace {

using ::testing::HasSubstr;

constexpr ModelFamily kFamilies[] = {ModelFamily::kLogistic, ModelFamily::kTree, ModelFamily::kBagging,
                                     ModelFamily::kRandomForest, ModelFamily::kAdaBoost};

ModelSpec small_spec(ModelFamily f, std::uint64_t seed = 1) {
  ModelSpec s = ModelSpec::defaults(f, seed);
  if (f == ModelFamily::kRandomForest) s.params.n_estimators = 15;
  return s;
}

std::vector<std::size_t> all_features(const Dataset& d) {
  std::vector<std::size_t> f(d.num_features());
  std::iota(f.begin(), f.end(), std::size_t{0});
  return f;
}

class ConstantModel final : public Classifier {
 public:
  ConstantModel(Schema s, double p) : schema_(std::move(s)), p_(p) {}
  const Schema& schema() const override { return schema_; }
  double predict_proba(std::span<const double>) const override { return p_; }

 private:
  Schema schema_;
  double p_;
};

TEST(Logistic, SeparableToyDataFitsPerfectly) {
  Schema schema{{"a", FeatureKind::kContinuous, {}}, {"b", FeatureKind::kContinuous, {}}};
  std::vector<double> cells;
  std::vector<std::uint8_t> y;
  Rng rng(4);
  for (int i = 0; i < 60; ++i) {
    const double a = rng.uniform(-1, 1);
    const double b = rng.uniform(-1, 1);
    const double shift = a + b > 0 ? 0.5 : -0.5;
    cells.push_back(a + shift);
    cells.push_back(b + shift);
    y.push_back(a + b > 0 ? 1 : 0);
  }
  const Dataset d(schema, cells, y);
  EXPECT_DOUBLE_EQ(accuracy(train(ModelSpec::defaults(ModelFamily::kLogistic), d), d), 1.0);
}

TEST(Logistic, ZeroParametersGiveOneHalf) {
  const Dataset d = testing::random_dataset(20, 2, 2, 1);
  detail::LogisticModel m;
  m.encoder = detail::LogisticEncoder::fit(d, all_features(d));
  m.theta.assign(m.encoder.width + 1, 0.0);
  EXPECT_EQ(m.predict(d.row(0)), 0.5);
  const TrainedModel t(ModelSpec::defaults(ModelFamily::kLogistic), d.schema(), {}, m);
  EXPECT_EQ(t.predict(d.row(0)), 1);
}

TEST(Logistic, GradientMatchesCentralDifferences) {
  const Dataset d = testing::random_dataset(80, 2, 3, 12);
  const auto enc = detail::LogisticEncoder::fit(d, all_features(d));
  const detail::LogisticObjective obj(d, enc, 1.0);
  Rng rng(99);
  for (int point = 0; point < 20; ++point) {
    std::vector<double> theta(obj.dimension());
    for (auto& t : theta) t = rng.normal();
    std::vector<double> grad(obj.dimension());
    obj.value_and_gradient(theta, grad);
    for (std::size_t j = 0; j < theta.size(); ++j) {
      const double h = 1e-5;
      auto plus = theta, minus = theta;
      plus[j] += h;
      minus[j] -= h;
      const double fd = (obj.value(plus) - obj.value(minus)) / (2 * h);
      EXPECT_LE(std::abs(fd - grad[j]), 1e-4 * std::max(1.0, std::abs(grad[j])));
    }
  }
}

TEST(Tree, MemorizesUniqueRows) {
  const Dataset d = testing::random_dataset(50, 1, 3, 8);
  EXPECT_DOUBLE_EQ(accuracy(train(ModelSpec::defaults(ModelFamily::kTree), d), d), 1.0);
}

TEST(TreeEnsemble, AveragesLeafProbabilities) {
  auto leaf = [](double v) {
    detail::TreeNode n;
    n.value = v;
    return detail::DecisionTree({n});
  };
  const detail::TreeEnsemble rf{{leaf(1.0), leaf(1.0), leaf(0.0)}};
  const std::vector<double> row{0.0};
  EXPECT_DOUBLE_EQ(rf.predict(row), 2.0 / 3.0);
}

TEST(AdaBoost, SingleStumpVotingOneIsAboveHalf) {
  detail::TreeNode n;
  n.value = 1.0;
  detail::BoostedStumps b;
  b.stumps.push_back(detail::DecisionTree({n}));
  b.alphas.push_back(0.7);
  const std::vector<double> row{0.0};
  EXPECT_GT(b.predict(row), 0.5);
  EXPECT_DOUBLE_EQ(b.predict(row), detail::sigmoid(1.0));
}

TEST(AdaBoost, TrainingErrorUnderExponentialBound) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Dataset d = testing::two_driver_dataset(seed, {.rows = 300});
    Rng rng(seed);
    const auto model = detail::fit_adaboost(d, all_features(d), 30, 1.0, rng);
    double bound = 1.0;
    double previous = 2.0;
    for (std::size_t t = 0; t < model.stumps.size(); ++t) {
      const double e = model.round_errors[t];
      ASSERT_GT(e, 0.0);
      ASSERT_LT(e, 0.5);
      bound *= 2.0 * std::sqrt(e * (1.0 - e));
      EXPECT_LT(bound, previous);
      previous = bound;
      detail::BoostedStumps prefix;
      prefix.stumps.assign(model.stumps.begin(), model.stumps.begin() + static_cast<std::ptrdiff_t>(t + 1));
      prefix.alphas.assign(model.alphas.begin(), model.alphas.begin() + static_cast<std::ptrdiff_t>(t + 1));
      std::size_t wrong = 0;
      for (std::size_t i = 0; i < d.num_rows(); ++i) wrong += (prefix.predict(d.row(i)) >= 0.5 ? 1 : 0) != d.label(i);
      EXPECT_LE(static_cast<double>(wrong) / static_cast<double>(d.num_rows()), bound + 1e-12);
    }
  }
}

TEST(Accuracy, ConstantModelGivesBaseRate) {
  Schema schema{{"a", FeatureKind::kContinuous, {}}};
  const Dataset d(schema, {0, 1, 2, 3, 4, 5, 6, 7, 8, 9}, {1, 1, 1, 1, 1, 1, 0, 0, 0, 0});
  EXPECT_DOUBLE_EQ(accuracy(ConstantModel(schema, 0.9), d), 0.6);
  EXPECT_DOUBLE_EQ(accuracy(ConstantModel(schema, 0.5), d), 0.6);
}

TEST(Accuracy, RejectsEmptyAndMismatchedData) {
  Schema schema{{"a", FeatureKind::kContinuous, {}}};
  EXPECT_THROW(accuracy(ConstantModel(schema, 0.9), Dataset(schema, {}, {})), DataError);
  Schema other{{"b", FeatureKind::kContinuous, {}}};
  EXPECT_THROW(accuracy(ConstantModel(other, 0.9), Dataset(schema, {1}, {1})), DataError);
}

class FamilyTest : public ::testing::TestWithParam<ModelFamily> {};

TEST_P(FamilyTest, ProbabilitiesAreValid) {
  const Dataset d = testing::random_dataset(120, 2, 3, 21);
  const TrainedModel m = train(small_spec(GetParam()), d);
  Rng rng(3);
  std::vector<double> row(d.num_features());
  for (int i = 0; i < 500; ++i) {
    for (std::size_t j = 0; j < d.num_features(); ++j) {
      row[j] = d.feature(j).is_categorical() ? static_cast<double>(rng.index(d.feature(j).categories.size()))
                                             : rng.normal() * 3;
    }
    const double p = m.predict_proba(row);
    EXPECT_GE(p, 0.0);
    EXPECT_LE(p, 1.0);
  }
}

TEST_P(FamilyTest, DroppedFeaturesNeverChangePredictions) {
  const Dataset d = testing::two_driver_dataset(4, {.rows = 300});
  const TrainedModel m = train(small_spec(GetParam()), d, {"s1", "s2"});
  Rng rng(5);
  for (std::size_t i = 0; i < d.num_rows(); ++i) {
    std::vector<double> row(d.row(i).begin(), d.row(i).end());
    const double p = m.predict_proba(row);
    row[0] = static_cast<double>(rng.index(2));
    row[1] = static_cast<double>(rng.index(2));
    EXPECT_EQ(m.predict_proba(row), p);
  }
}

TEST_P(FamilyTest, TrainingIsDeterministic) {
  const Dataset d = testing::random_dataset(100, 2, 2, 6);
  const TrainedModel a = train(small_spec(GetParam(), 7), d);
  const TrainedModel b = train(small_spec(GetParam(), 7), d);
  EXPECT_EQ(a.parameters(), b.parameters());
}

TEST_P(FamilyTest, JsonRoundTripKeepsPredictions) {
  const Dataset d = testing::random_dataset(100, 2, 2, 6);
  const TrainedModel a = train(small_spec(GetParam()), d, {"k0"});
  const TrainedModel b = TrainedModel::from_json(a.to_json());
  EXPECT_EQ(b.spec(), a.spec());
  EXPECT_EQ(b.schema(), a.schema());
  EXPECT_EQ(b.dropped_features(), a.dropped_features());
  for (std::size_t i = 0; i < d.num_rows(); ++i) EXPECT_EQ(b.predict_proba(d.row(i)), a.predict_proba(d.row(i)));
  EXPECT_EQ(b.to_json(), a.to_json());
}

INSTANTIATE_TEST_SUITE_P(AllFamilies, FamilyTest, ::testing::ValuesIn(kFamilies),
                         [](const auto& info) { return std::string(to_string(info.param)); });

TEST(Train, RejectsUnknownDropAndFullDrop) {
  const Dataset d = testing::random_dataset(40, 1, 1, 2);
  try {
    train(ModelSpec::defaults(ModelFamily::kLogistic), d, {"S2"});
    FAIL();
  } catch (const DataError& e) {
    EXPECT_THAT(e.what(), HasSubstr("drop references unknown feature"));
  }
  EXPECT_THROW(train(ModelSpec::defaults(ModelFamily::kLogistic), d, {"k0", "x0"}), DataError);
}

TEST(ModelSpec, DefaultsAndOverrides) {
  EXPECT_EQ(ModelSpec::defaults(ModelFamily::kRandomForest).params.n_estimators, 100);
  EXPECT_EQ(ModelSpec::defaults(ModelFamily::kRandomForest).params.max_features, -1);
  EXPECT_EQ(ModelSpec::defaults(ModelFamily::kBagging).params.n_estimators, 10);
  EXPECT_EQ(ModelSpec::defaults(ModelFamily::kAdaBoost).params.n_estimators, 50);
  EXPECT_EQ(ModelSpec::defaults(ModelFamily::kAdaBoost).params.max_depth, 1);
  EXPECT_EQ(ModelSpec::defaults(ModelFamily::kLogistic).params.max_iter, 1000);
  ModelSpec s = ModelSpec::defaults(ModelFamily::kBagging);
  s.set("n_estimators", "20");
  EXPECT_EQ(s.params.n_estimators, 20);
  EXPECT_THROW(s.set("n_estimators", "many"), ConfigError);
  EXPECT_THROW(s.set("depth", "3"), ConfigError);
  s.params.min_samples_split = 1;
  EXPECT_THROW(s.validate(), ConfigError);
  EXPECT_EQ(parse_model_family("RF"), ModelFamily::kRandomForest);
  EXPECT_THROW(parse_model_family("svm"), ConfigError);
}

}  // namespace
}  // namespace fairlens
