#include <gmock/gmock.h>
#include <gtest/gtest.h>

#include <cmath>

#include "fairlens/error.hpp"
#include "fairlens/metrics.hpp"
#include "fairlens/random.hpp"
#include "synthetic.hpp"

namespace fairlens {
namespace {

using ::testing::Contains;

struct Rows {
  std::vector<std::uint8_t> y, p, priv;
};

// Row-by-row oracle that never forms a confusion table.
std::optional<double> oracle_rate(const Rows& r, bool privileged, auto select, auto hit) {
  double num = 0, den = 0;
  for (std::size_t i = 0; i < r.y.size(); ++i) {
    if ((r.priv[i] != 0) != privileged || !select(r.y[i], r.p[i])) continue;
    den += 1;
    num += hit(r.y[i], r.p[i]) ? 1 : 0;
  }
  if (den == 0) return std::nullopt;
  return num / den;
}

std::optional<double> diff(std::optional<double> a, std::optional<double> b) {
  if (!a || !b) return std::nullopt;
  return *a - *b;
}

void expect_same(MetricValue got, std::optional<double> want) {
  ASSERT_EQ(got.has_value(), want.has_value());
  if (want) EXPECT_EQ(*got, *want);
}

TEST(Metrics, MatchBruteForceOracle) {
  Rng rng(31);
  auto any = [](auto, auto) { return true; };
  for (int fixture = 0; fixture < 50; ++fixture) {
    Rows r;
    const std::size_t n = 1 + rng.index(20);
    for (std::size_t i = 0; i < n; ++i) {
      r.y.push_back(static_cast<std::uint8_t>(rng.bernoulli(0.5)));
      r.p.push_back(static_cast<std::uint8_t>(rng.bernoulli(0.5)));
      r.priv.push_back(static_cast<std::uint8_t>(rng.bernoulli(0.5)));
    }
    const GroupConfusion c = tally(r.y, r.p, r.priv);
    auto pos_rate = [&](bool g) { return oracle_rate(r, g, any, [](auto, auto p) { return p == 1; }); };
    auto recall = [&](bool g) {
      return oracle_rate(r, g, [](auto y, auto) { return y == 1; }, [](auto, auto p) { return p == 1; });
    };
    auto acc = [&](bool g) { return oracle_rate(r, g, any, [](auto y, auto p) { return y == p; }); };
    auto fdr = [&](bool g) {
      return oracle_rate(r, g, [](auto, auto p) { return p == 1; }, [](auto y, auto) { return y == 0; });
    };
    auto fpr = [&](bool g) {
      return oracle_rate(r, g, [](auto y, auto) { return y == 0; }, [](auto, auto p) { return p == 1; });
    };
    std::optional<double> di;
    if (pos_rate(false) && pos_rate(true) && *pos_rate(true) > 0) di = *pos_rate(false) / *pos_rate(true);
    expect_same(disparate_impact(c), di);
    expect_same(equal_opportunity(c), diff(recall(false), recall(true)));
    expect_same(demographic_parity(c), diff(pos_rate(false), pos_rate(true)));
    expect_same(equal_accuracy(c), diff(acc(false), acc(true)));
    expect_same(predictive_equality(c, PeMode::kPaper), diff(fdr(false), fdr(true)));
    expect_same(predictive_equality(c, PeMode::kConventional), diff(fpr(false), fpr(true)));

    const GroupConfusion s = c.swapped();
    for (auto f : {equal_opportunity, demographic_parity, equal_accuracy}) {
      if (f(c)) EXPECT_DOUBLE_EQ(*f(s), -*f(c));
    }
    for (auto mode : {PeMode::kPaper, PeMode::kConventional}) {
      if (predictive_equality(c, mode)) EXPECT_DOUBLE_EQ(*predictive_equality(s, mode), -*predictive_equality(c, mode));
    }
    if (disparate_impact(c) && disparate_impact(s)) EXPECT_DOUBLE_EQ(*disparate_impact(s), 1.0 / *disparate_impact(c));
    if (disparate_impact(c) && demographic_parity(c)) {
      EXPECT_EQ(*disparate_impact(c) == 1.0, *demographic_parity(c) == 0.0);
    }
  }
}

Confusion conf(std::size_t tp, std::size_t fp, std::size_t tn, std::size_t fn) { return {tp, fp, tn, fn}; }

TEST(Metrics, HandExamples) {
  // priv rows first, unp second.
  EXPECT_DOUBLE_EQ(*disparate_impact({conf(4, 0, 6, 0), conf(2, 0, 8, 0)}), 0.5);
  EXPECT_NEAR(*equal_opportunity({conf(8, 0, 0, 2), conf(6, 0, 0, 4)}), -0.2, 1e-15);
  EXPECT_NEAR(*demographic_parity({conf(10, 0, 10, 0), conf(7, 0, 13, 0)}), -0.15, 1e-15);
  EXPECT_NEAR(*equal_accuracy({conf(8, 2, 0, 0), conf(9, 1, 0, 0)}), 0.1, 1e-15);
  EXPECT_NEAR(*predictive_equality({conf(9, 1, 0, 0), conf(8, 2, 0, 0)}, PeMode::kPaper), 0.1, 1e-15);
  EXPECT_NEAR(*predictive_equality({conf(0, 1, 9, 0), conf(0, 2, 8, 0)}, PeMode::kConventional), 0.1, 1e-15);
  EXPECT_EQ(*predictive_equality({conf(5, 0, 5, 0), conf(3, 0, 2, 0)}), 0.0);
}

TEST(Metrics, ConstantOnePredictorTally) {
  const std::vector<std::uint8_t> y{1, 1, 1, 0, 0};
  const std::vector<std::uint8_t> p(5, 1);
  const std::vector<std::uint8_t> g(5, 1);
  EXPECT_EQ(tally(y, p, g).privileged, conf(3, 2, 0, 0));
}

TEST(Metrics, PerfectPredictorNulls) {
  const std::vector<std::uint8_t> y{1, 0, 1, 1, 0, 0, 0, 1};
  const std::vector<std::uint8_t> g{1, 1, 1, 0, 0, 0, 0, 0};
  const GroupConfusion c = tally(y, y, g);
  EXPECT_EQ(c.privileged.fp + c.privileged.fn + c.unprivileged.fp + c.unprivileged.fn, 0u);
  EXPECT_EQ(*equal_opportunity(c), 0.0);
  EXPECT_EQ(*equal_accuracy(c), 0.0);
  EXPECT_EQ(*predictive_equality(c), 0.0);
  EXPECT_NEAR(*demographic_parity(c), 0.4 - 2.0 / 3.0, 1e-15);
}

TEST(Metrics, UndefinedValuesAreFlagged) {
  const MetricVector m = compute_metrics({conf(0, 0, 5, 0), conf(0, 0, 0, 0)}, "s", PeMode::kPaper);
  EXPECT_FALSE(m.di.has_value());
  EXPECT_FALSE(m.eo.has_value());
  EXPECT_THAT(m.flags, Contains("empty_group"));
  EXPECT_THAT(m.flags, Contains("di_undefined"));
  EXPECT_THAT(m.flags, Contains("pe_undefined"));
  EXPECT_THAT(to_json(m), ::testing::HasSubstr("\"di\": null"));
  for (Metric metric : kAllMetrics) EXPECT_FALSE(undefined_metrics("s", PeMode::kPaper).get(metric));
}

TEST(Metrics, OptimalReferences) {
  EXPECT_EQ(optimal_value(Metric::kDI), 1.0);
  for (Metric m : {Metric::kEO, Metric::kDP, Metric::kEA, Metric::kPE}) EXPECT_EQ(optimal_value(m), 0.0);
}

TEST(GroupSpec, ParseAndValidate) {
  const GroupSpec g = GroupSpec::parse("race=White|Asian");
  EXPECT_EQ(g.feature, "race");
  EXPECT_EQ(g.privileged_values, (std::set<std::string>{"White", "Asian"}));
  EXPECT_THROW(GroupSpec::parse("race"), ConfigError);
  EXPECT_THROW(GroupSpec::parse("race=a||b"), ConfigError);
  Schema schema{{"race", FeatureKind::kCategorical, {"White", "Asian", "Black"}}, {"x", FeatureKind::kContinuous, {}}};
  EXPECT_NO_THROW(g.validate(schema));
  EXPECT_THROW(GroupSpec::parse("race=Green").validate(schema), ConfigError);
  EXPECT_THROW(GroupSpec::parse("race=White|Asian|Black").validate(schema), ConfigError);
  EXPECT_THROW(GroupSpec::parse("x=1").validate(schema), ConfigError);
}

class Threshold final : public Classifier {
 public:
  explicit Threshold(Schema s) : schema_(std::move(s)) {}
  const Schema& schema() const override { return schema_; }
  double predict_proba(std::span<const double> row) const override { return row[0] == 1.0 ? 1.0 : 0.0; }

 private:
  Schema schema_;
};

TEST(GroupConfusion, FromModelAndCounterfactualProbe) {
  Schema schema{{"s", FeatureKind::kCategorical, {"a", "b"}}, {"x", FeatureKind::kContinuous, {}}};
  const Dataset d(schema, {1, 0, 1, 1, 0, 2, 0, 3}, {1, 0, 1, 0});
  const Threshold m(schema);
  const GroupConfusion c = group_confusion(m, d, GroupSpec::parse("s=b"));
  EXPECT_EQ(c.privileged, conf(1, 1, 0, 0));
  EXPECT_EQ(c.unprivileged, conf(0, 0, 1, 1));
  EXPECT_EQ(counterfactual_flip_rate(m, d, "s"), 1.0);
  EXPECT_THROW(group_confusion(m, d.subset(std::vector<std::size_t>{0, 1}), GroupSpec::parse("s=b")), DataError);
}

}  // namespace
}  // namespace fairlens
