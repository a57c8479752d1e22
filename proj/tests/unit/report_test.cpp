#include <gmock/gmock.h>
#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "fairlens/error.hpp"
#include "fairlens/report.hpp"
#include "synthetic.hpp"

namespace fairlens {
namespace {

using ::testing::HasSubstr;

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

RunConfig small_config() {
  RunConfig cfg;
  cfg.groups = {GroupSpec::parse("s1=g1"), GroupSpec::parse("s2=g1")};
  cfg.n_samples = 400;
  cfg.pool_size = 40;
  cfg.budget = 8;
  cfg.repetitions = 3;
  cfg.base_seed = 11;
  return cfg;
}

TEST(Format, MeanStd) {
  EXPECT_EQ(format_mean_std({0.7721, 0.0161, 10}), "0.772 (0.016)");
  EXPECT_EQ(format_mean_std({0.5, 0.0, 3}), "0.500 (0.000)");
  EXPECT_EQ(format_mean_std({}), "-");
}

TEST(Summarize, SampleStandardDeviation) {
  const std::vector<double> one{0.8};
  EXPECT_EQ(summarize(one).std, 0.0);
  const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
  EXPECT_DOUBLE_EQ(summarize(v).mean, 2.5);
  EXPECT_DOUBLE_EQ(summarize(v).std, std::sqrt(5.0 / 3.0));
  const std::vector<double> constant(5, 0.3);
  EXPECT_EQ(format_mean_std(summarize(constant)), "0.300 (0.000)");
}

TEST(RunConfig, ValidationAndJson) {
  RunConfig cfg = small_config();
  EXPECT_NO_THROW(cfg.validate());
  cfg.k = 1;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg.k = 10;
  cfg.repetitions = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = small_config();
  cfg.groups.push_back(GroupSpec::parse("nope=a"));
  EXPECT_THROW(cfg.validate(testing::two_driver_dataset(1, {.rows = 50})), ConfigError);

  cfg = small_config();
  cfg.families = {ModelFamily::kRandomForest, ModelFamily::kLogistic};
  cfg.overrides["n_estimators"] = "20";
  cfg.kernel_width = 1.5;
  cfg.positive_label = "yes";
  cfg.data_path = "x.csv";
  cfg.target = "y";
  const RunConfig back = RunConfig::from_json(cfg.to_json());
  EXPECT_EQ(back.to_json(), cfg.to_json());
  EXPECT_EQ(back.model_spec(ModelFamily::kRandomForest).params.n_estimators, 20);
  EXPECT_THAT(cfg.to_json(), HasSubstr("\"pe_mode\": \"paper\""));
  EXPECT_THROW(RunConfig::from_json("{\"k\": \"ten\"}"), ConfigError);
  EXPECT_THROW(RunConfig::from_json("[1"), ConfigError);
}

TEST(ThreadsFromEnv, ParsesOrRejects) {
  ::setenv("FAIRLENS_THREADS", "3", 1);
  EXPECT_EQ(threads_from_env(), 3u);
  ::setenv("FAIRLENS_THREADS", "x", 1);
  EXPECT_THROW(threads_from_env(), ConfigError);
  ::unsetenv("FAIRLENS_THREADS");
  EXPECT_EQ(threads_from_env(5), 5u);
}

class AuditFixture : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    data_ = new Dataset(testing::two_driver_dataset(5, {.rows = 600}));
    RunConfig cfg = small_config();
    cfg.families = {ModelFamily::kLogistic, ModelFamily::kAdaBoost};
    run_ = new AuditRun(run_audit(cfg, *data_));
  }
  static void TearDownTestSuite() {
    delete run_;
    delete data_;
  }
  static Dataset* data_;
  static AuditRun* run_;
};

Dataset* AuditFixture::data_ = nullptr;
AuditRun* AuditFixture::run_ = nullptr;

TEST_F(AuditFixture, SeedsAndSummaryConsistency) {
  ASSERT_EQ(run_->models.size(), 2u);
  for (const auto& m : run_->models) {
    ASSERT_EQ(m.records.size(), 3u);
    for (std::size_t r = 0; r < 3; ++r) EXPECT_EQ(m.records[r].seed, 11 + r);
    double sum = 0;
    for (const auto& r : m.records) {
      sum += r.original.accuracy;
      EXPECT_EQ(r.ensemble.has_value(), r.gate.deemed_unfair);
    }
    EXPECT_NEAR(m.summary.original_accuracy.mean, sum / 3, 1e-12);
    const ModelSummary again = summarize(m.records);
    EXPECT_NEAR(again.original_accuracy.std, m.summary.original_accuracy.std, 1e-12);
    EXPECT_NEAR(again.ensemble_accuracy.mean, m.summary.ensemble_accuracy.mean, 1e-12);
  }
}

TEST_F(AuditFixture, AccuracyTableLayout) {
  const auto rows = lines(emit_accuracy_table(*run_));
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0], "model,lr,ada");
  EXPECT_THAT(rows[1], ::testing::StartsWith("Original,"));
  EXPECT_THAT(rows[2], ::testing::StartsWith("LimeOut,"));
}

TEST_F(AuditFixture, ExplanationTables) {
  const auto tables = emit_explanation_tables(*run_);
  EXPECT_EQ(tables.size(), 6u);
  const auto& rec = run_->models[0].records[0];
  const auto rows = lines(tables.at("explanations_lr_11.csv"));
  ASSERT_EQ(rows.size(), 11u);
  double previous = 1e300;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    std::vector<std::string> cells;
    std::stringstream ss(rows[r]);
    for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
    EXPECT_EQ(cells[1], rec.original.explanation.entries[r - 1].feature);
    const double v = std::abs(std::stod(cells[2]));
    EXPECT_LE(v, previous);
    previous = v;
    EXPECT_EQ(cells[3], cells[1][0] == 's' ? "1" : "0");
  }
}

TEST_F(AuditFixture, MetricPointsCount) {
  const auto rows = lines(emit_metric_points(*run_));
  std::size_t expected = 0;
  for (const auto& m : run_->models) {
    const std::size_t fired = m.summary.gate_fired;
    if (fired > 0) expected += (fired + 1) * 2 * 5;
  }
  EXPECT_EQ(rows.size(), expected + 1);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const bool di = rows[r].find(",DI,") != std::string::npos;
    EXPECT_THAT(rows[r], ::testing::EndsWith(di ? ",1" : ",0"));
  }
}

TEST_F(AuditFixture, ArtifactsAreReproducible) {
  const auto dir = std::filesystem::temp_directory_path() / "fairlens_report_test";
  std::filesystem::remove_all(dir);
  write_artifacts(*run_, dir / "a");
  RunConfig cfg = run_->config;
  cfg.threads = 3;
  write_artifacts(run_audit(cfg, *data_), dir / "b");
  std::size_t files = 0;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(dir / "a")) {
    if (!entry.is_regular_file()) continue;
    ++files;
    const auto rel = std::filesystem::relative(entry.path(), dir / "a");
    std::ifstream fa(entry.path()), fb(dir / "b" / rel);
    ASSERT_TRUE(fb.good()) << rel;
    std::stringstream sa, sb;
    sa << fa.rdbuf();
    sb << fb.rdbuf();
    EXPECT_EQ(sa.str(), sb.str()) << rel;
  }
  EXPECT_EQ(files, 2u + 3u + 1u + 6u + 1u);
  EXPECT_TRUE(std::filesystem::exists(dir / "a" / "runs" / "12" / "record.json"));
  std::filesystem::remove_all(dir);
}

TEST(RunAudit, SingleRepetitionHasZeroStd) {
  RunConfig cfg = small_config();
  cfg.repetitions = 1;
  const AuditRun run = run_audit(cfg, testing::two_driver_dataset(3, {.rows = 200}));
  ASSERT_EQ(run.models[0].records.size(), 1u);
  EXPECT_EQ(run.models[0].summary.original_accuracy.std, 0.0);
}

TEST(RunAudit, FairModelsGetDashes) {
  RunConfig cfg = small_config();
  cfg.repetitions = 2;
  const Dataset d = testing::two_driver_dataset(4, {.rows = 400, .sensitive_weight = 0.0});
  const AuditRun run = run_audit(cfg, d);
  ASSERT_EQ(run.models[0].summary.gate_fired, 0u);
  EXPECT_EQ(lines(emit_accuracy_table(run))[2], "LimeOut,-");
  EXPECT_EQ(lines(emit_metric_points(run)).size(), 1u);
  const auto table = lines(emit_explanation_tables(run).begin()->second);
  EXPECT_THAT(table[1], ::testing::EndsWith(",,,"));
}

TEST(RunAudit, ErrorsNameTheRepetition) {
  RunConfig cfg = small_config();
  cfg.smote_k = 50;
  try {
    run_audit(cfg, testing::two_driver_dataset(3, {.rows = 60}));
    FAIL();
  } catch (const PipelineError& e) {
    EXPECT_THAT(e.what(), HasSubstr("repetition 0"));
    EXPECT_THAT(e.what(), HasSubstr("seed 11"));
  }
}

}  // namespace
}  // namespace fairlens
