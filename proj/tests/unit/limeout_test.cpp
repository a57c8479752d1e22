#include <gmock/gmock.h>
#include <gtest/gtest.h>

#include "fairlens/error.hpp"
#include "fairlens/limeout.hpp"
#include "synthetic.hpp"

namespace fairlens {
namespace {

using ::testing::ElementsAre;
using ::testing::HasSubstr;

GlobalExplanation ranked(std::initializer_list<const char*> names) {
  GlobalExplanation g;
  double v = 100.0;
  for (const char* n : names) g.entries.push_back({n, v--});
  return g;
}

TrainedModel constant(const Schema& schema, double p) {
  detail::TreeNode leaf;
  leaf.value = p;
  return TrainedModel(ModelSpec::defaults(ModelFamily::kTree), schema, {},
                      detail::TreeEnsemble{{detail::DecisionTree({leaf})}});
}

TEST(Gate, RuleOnCraftedExplanations) {
  const std::set<std::string> sensitive{"Sex", "Race", "MaritalStatus"};
  const auto g0 = gate(ranked({"a", "b", "c", "Sex"}), sensitive, 3);
  EXPECT_FALSE(g0.deemed_unfair);
  EXPECT_TRUE(g0.sensitive_in_topk.empty());
  EXPECT_FALSE(gate(ranked({"a", "Race", "b", "c"}), sensitive, 3).deemed_unfair);
  const auto g2 = gate(ranked({"a", "MaritalStatus", "b", "Sex"}), sensitive, 4);
  EXPECT_TRUE(g2.deemed_unfair);
  EXPECT_THAT(g2.sensitive_in_topk, ElementsAre("MaritalStatus", "Sex"));
  EXPECT_EQ(g2.k, 4u);
  EXPECT_TRUE(gate(ranked({"Race", "Sex", "MaritalStatus"}), sensitive, 3).deemed_unfair);
  EXPECT_THROW(gate(ranked({"a", "b"}), sensitive, 3), ConfigError);
}

TEST(Gate, MonotoneInSensitiveSet) {
  const auto g = ranked({"a", "b", "c", "d", "e"});
  std::set<std::string> sensitive;
  std::size_t last = 0;
  for (const char* f : {"z", "c", "a", "e", "b"}) {
    sensitive.insert(f);
    const std::size_t now = gate(g, sensitive, 4).sensitive_in_topk.size();
    EXPECT_GE(now, last);
    last = now;
  }
}

TEST(DropoutSets, FollowThePlusOneRule) {
  FairnessGateResult r{true, {"S1", "S2"}, 10};
  EXPECT_EQ(dropout_sets(r), (std::vector<std::set<std::string>>{{"S1"}, {"S2"}, {"S1", "S2"}}));
  r.sensitive_in_topk.push_back("S3");
  EXPECT_EQ(dropout_sets(r).size(), 4u);
  r.sensitive_in_topk = {"S1", "S1"};
  EXPECT_EQ(dropout_sets(r), (std::vector<std::set<std::string>>{{"S1"}}));
}

TEST(BuildPool, MembersAndErrors) {
  const Dataset d = testing::two_driver_dataset(1, {.rows = 300});
  const ModelSpec spec = ModelSpec::defaults(ModelFamily::kLogistic, 5);
  const EnsembleModel e = build_pool(spec, d, {true, {"s1", "s2"}, 10});
  ASSERT_EQ(e.members().size(), 3u);
  EXPECT_EQ(e.provenance(), (std::vector<std::set<std::string>>{{"s1"}, {"s2"}, {"s1", "s2"}}));
  EXPECT_EQ(e.members()[1].spec().seed, 7u);
  EXPECT_THROW(build_pool(spec, d, {false, {"s1"}, 10}), Error);
  try {
    build_pool(spec, d, {true, {"s1", "S2"}, 10});
    FAIL();
  } catch (const DataError& err) {
    EXPECT_THAT(err.what(), HasSubstr("drop references unknown feature"));
  }
  EXPECT_EQ(build_pool(spec, d, {true, {"s1", "s2"}, 10}, 3).provenance(), e.provenance());
}

TEST(Ensemble, MeanOfMembers) {
  Schema schema{{"x", FeatureKind::kContinuous, {}}};
  const std::vector<double> row{0.0};
  EXPECT_DOUBLE_EQ(EnsembleModel({constant(schema, 0.3), constant(schema, 0.7)}).predict_proba(row), 0.5);
  EXPECT_EQ(EnsembleModel({constant(schema, 0.3), constant(schema, 0.7)}).predict(row), 1);
  const EnsembleModel three({constant(schema, 0.9), constant(schema, 0.8), constant(schema, 0.1)});
  EXPECT_NEAR(ensemble_predict_proba(three, row), 0.6, 1e-15);
  Schema other{{"y", FeatureKind::kContinuous, {}}};
  EXPECT_THROW(EnsembleModel({constant(schema, 0.1), constant(other, 0.1)}), DataError);
  EXPECT_THROW(EnsembleModel({}), Error);
}

TEST(Ensemble, CopiesEqualTheSingleModel) {
  const Dataset d = testing::random_dataset(150, 2, 3, 3);
  const TrainedModel m = train(ModelSpec::defaults(ModelFamily::kLogistic), d);
  for (std::size_t copies : {1, 2, 3, 7}) {
    const EnsembleModel e(std::vector<TrainedModel>(copies, m));
    for (std::size_t i = 0; i < d.num_rows(); ++i) EXPECT_EQ(e.predict_proba(d.row(i)), m.predict_proba(d.row(i)));
  }
}

TEST(RunLimeout, TwoSensitiveDriversFireTheGate) {
  const Dataset d = testing::two_driver_dataset(7);
  LimeOutConfig cfg;
  cfg.groups = {GroupSpec::parse("s1=g1"), GroupSpec::parse("s2=g1")};
  cfg.global.lime.n_samples = 1000;
  cfg.global.pool_size = 100;
  cfg.global.budget = 10;
  const RepetitionRecord r = run_limeout(ModelSpec::defaults(ModelFamily::kLogistic), d, cfg, 3);
  ASSERT_TRUE(r.gate.deemed_unfair);
  ASSERT_TRUE(r.ensemble.has_value());
  EXPECT_EQ(r.ensemble_members.size(), 3u);
  EXPECT_EQ(r.original.metrics.size(), 2u);
  EXPECT_EQ(r.ensemble->metrics.size(), 2u);
  for (const char* s : {"s1", "s2"}) {
    double before = 0, after = 0;
    for (const auto& e : r.original.explanation.entries) if (e.feature == s) before = std::abs(e.contribution);
    for (const auto& e : r.ensemble->explanation.entries) if (e.feature == s) after = std::abs(e.contribution);
    EXPECT_LT(after, before) << s;
  }
  // The split keeps 30% of rows; the explanation never invents rows.
  for (auto i : r.original.explanation.picked_instances) EXPECT_LT(i, 600u);
}

TEST(RunLimeout, SingleSensitiveDriverPassesTheGate) {
  const Dataset d = testing::two_driver_dataset(8, {.sensitive_weight = 0.0}).with_sensitive({"s1", "s2"});
  LimeOutConfig cfg;
  cfg.groups = {GroupSpec::parse("s1=g1"), GroupSpec::parse("s2=g1")};
  cfg.global.lime.n_samples = 500;
  cfg.global.pool_size = 60;
  cfg.global.budget = 10;
  const RepetitionRecord r = run_limeout(ModelSpec::defaults(ModelFamily::kLogistic), d, cfg, 1);
  EXPECT_FALSE(r.gate.deemed_unfair);
  EXPECT_FALSE(r.ensemble.has_value());
  EXPECT_TRUE(r.ensemble_members.empty());
}

TEST(RunLimeout, DeterministicPerSeed) {
  const Dataset d = testing::two_driver_dataset(2, {.rows = 400});
  LimeOutConfig cfg;
  cfg.groups = {GroupSpec::parse("s1=g1"), GroupSpec::parse("s2=g1")};
  cfg.global.lime.n_samples = 300;
  cfg.global.pool_size = 40;
  cfg.global.budget = 5;
  const auto a = run_limeout(ModelSpec::defaults(ModelFamily::kAdaBoost), d, cfg, 5);
  const auto b = run_limeout(ModelSpec::defaults(ModelFamily::kAdaBoost), d, cfg, 5);
  EXPECT_EQ(a.original.explanation, b.original.explanation);
  EXPECT_EQ(a.gate, b.gate);
  EXPECT_EQ(a.original.accuracy, b.original.accuracy);
}

}  // namespace
}  // namespace fairlens
