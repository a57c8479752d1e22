#include "fairlens/report.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "fairlens/error.hpp"
#include "json_util.hpp"
#include "parallel.hpp"

namespace fairlens {
namespace {

using json_util::json;

std::string number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string group_text(const GroupSpec& g) {
  std::string out = g.feature + "=";
  bool first = true;
  for (const auto& v : g.privileged_values) {
    if (!first) out += "|";
    out += v;
    first = false;
  }
  return out;
}

std::set<std::string> sensitive_names(const RunConfig& cfg) {
  std::set<std::string> out;
  for (const auto& g : cfg.groups) out.insert(g.feature);
  return out;
}

json explanation_json(const GlobalExplanation& g, const std::set<std::string>& sensitive) {
  return json::parse(to_json(g, sensitive));
}

json assessment_json(const ModelAssessment& a, const std::set<std::string>& sensitive) {
  json flips = json::object();
  for (const auto& [feature, rate] : a.flip_rates) flips[feature] = rate;
  return json{{"accuracy", a.accuracy},
              {"explanation", explanation_json(a.explanation, sensitive)},
              {"metrics", json::parse(to_json(std::span<const MetricVector>(a.metrics)))},
              {"counterfactual_flip_rate", flips}};
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

}  // namespace

void RunConfig::validate() const {
  if (k < 2) throw ConfigError("k must be >= 2");
  if (repetitions < 1) throw ConfigError("repetitions must be >= 1");
  if (groups.empty()) throw ConfigError("at least one sensitive feature is required");
  if (families.empty()) throw ConfigError("at least one model family is required");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ConfigError("train fraction must lie in (0, 1)");
  if (n_samples < 2) throw ConfigError("n_samples must be >= 2");
  if (kernel_width && !(*kernel_width > 0.0)) throw ConfigError("kernel width must be positive");
  if (!(ridge_lambda >= 0.0)) throw ConfigError("ridge lambda must be >= 0");
  if (pool_size < 1) throw ConfigError("pool size must be >= 1");
  if (budget < 1) throw ConfigError("budget must be >= 1");
  if (smote && smote_k < 1) throw ConfigError("SMOTE needs k >= 1");
  std::set<std::string> seen;
  for (const auto& g : groups) {
    if (!seen.insert(g.feature).second) throw ConfigError("sensitive feature '" + g.feature + "' given twice");
  }
  for (ModelFamily f : families) model_spec(f).validate();
}

void RunConfig::validate(const Dataset& d) const {
  validate();
  for (const auto& g : groups) {
    if (!find_feature(d.schema(), g.feature)) {
      throw ConfigError("sensitive feature '" + g.feature + "' is not a column of the dataset");
    }
    g.validate(d.schema());
  }
  if (k > d.num_features()) {
    throw ConfigError("k = " + std::to_string(k) + " exceeds the " + std::to_string(d.num_features()) +
                      " features of the dataset");
  }
}

ModelSpec RunConfig::model_spec(ModelFamily family) const {
  ModelSpec spec = ModelSpec::defaults(family, base_seed);
  for (const auto& [key, value] : overrides) spec.set(key, value);
  return spec;
}

LimeOutConfig RunConfig::limeout_config() const {
  LimeOutConfig c;
  c.groups = groups;
  c.train_fraction = train_fraction;
  c.smote = smote;
  c.smote_k = smote_k;
  c.pe_mode = pe_mode;
  c.global.lime.n_samples = n_samples;
  c.global.lime.kernel_width = kernel_width;
  c.global.lime.ridge_lambda = ridge_lambda;
  c.global.pool_size = pool_size;
  c.global.budget = budget;
  c.global.k = k;
  c.global.features_per_explanation = features_per_explanation;
  c.global.threads = 1;
  return c;
}

std::string RunConfig::to_json() const {
  json groups_json = json::array();
  for (const auto& g : groups) groups_json.push_back(group_text(g));
  json families_json = json::array();
  for (ModelFamily f : families) families_json.push_back(std::string(to_string(f)));
  json hints_json = json::object();
  for (const auto& [name, kind] : hints) hints_json[name] = std::string(to_string(kind));
  json models = json::object();
  for (ModelFamily f : families) {
    const Hyperparameters& p = model_spec(f).params;
    models[std::string(to_string(f))] = json{{"l2_lambda", p.l2_lambda},         {"max_iter", p.max_iter},
                                             {"tolerance", p.tolerance},         {"max_depth", p.max_depth},
                                             {"min_samples_split", p.min_samples_split},
                                             {"n_estimators", p.n_estimators},   {"max_features", p.max_features},
                                             {"bootstrap", p.bootstrap},         {"learning_rate", p.learning_rate}};
  }
  json j{{"data", data_path.generic_string()},
         {"target", target},
         {"positive_label", positive_label ? json(*positive_label) : json(nullptr)},
         {"hints", hints_json},
         {"sensitive", groups_json},
         {"models", families_json},
         {"overrides", overrides},
         {"resolved_hyperparameters", models},
         {"k", k},
         {"n_samples", n_samples},
         {"kernel_width", kernel_width ? json(*kernel_width) : json(nullptr)},
         {"ridge_lambda", ridge_lambda},
         {"pool_size", pool_size},
         {"budget", budget},
         {"features_per_explanation", features_per_explanation},
         {"train_fraction", train_fraction},
         {"smote", smote},
         {"smote_k", smote_k},
         {"repetitions", repetitions},
         {"seed", base_seed},
         {"pe_mode", std::string(to_string(pe_mode))}};
  return json_util::dump(j);
}

RunConfig RunConfig::from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig c;
  try {
    if (j.contains("data")) c.data_path = j["data"].get<std::string>();
    if (j.contains("target")) c.target = j["target"].get<std::string>();
    if (j.contains("positive_label") && !j["positive_label"].is_null()) {
      c.positive_label = j["positive_label"].get<std::string>();
    }
    if (j.contains("hints")) {
      for (const auto& [name, kind] : j["hints"].items()) c.hints[name] = parse_feature_kind(kind.get<std::string>());
    }
    if (j.contains("sensitive")) {
      for (const auto& g : j["sensitive"]) c.groups.push_back(GroupSpec::parse(g.get<std::string>()));
    }
    if (j.contains("models")) {
      c.families.clear();
      for (const auto& f : j["models"]) c.families.push_back(parse_model_family(f.get<std::string>()));
    }
    if (j.contains("overrides")) c.overrides = j["overrides"].get<std::map<std::string, std::string>>();
    auto size = [&j](const char* key, std::size_t& field) {
      if (j.contains(key)) field = j[key].get<std::size_t>();
    };
    size("k", c.k);
    size("n_samples", c.n_samples);
    size("pool_size", c.pool_size);
    size("budget", c.budget);
    size("features_per_explanation", c.features_per_explanation);
    size("smote_k", c.smote_k);
    size("repetitions", c.repetitions);
    if (j.contains("kernel_width") && !j["kernel_width"].is_null()) c.kernel_width = j["kernel_width"].get<double>();
    if (j.contains("ridge_lambda")) c.ridge_lambda = j["ridge_lambda"].get<double>();
    if (j.contains("train_fraction")) c.train_fraction = j["train_fraction"].get<double>();
    if (j.contains("smote")) c.smote = j["smote"].get<bool>();
    if (j.contains("seed")) c.base_seed = j["seed"].get<std::uint64_t>();
    if (j.contains("pe_mode")) c.pe_mode = parse_pe_mode(j["pe_mode"].get<std::string>());
    if (j.contains("out")) c.out_dir = j["out"].get<std::string>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config field: ") + e.what());
  }
  return c;
}

std::size_t threads_from_env(std::size_t fallback) {
  const char* raw = std::getenv("FAIRLENS_THREADS");
  if (raw == nullptr || *raw == '\0') return fallback;
  const std::string_view text(raw);
  std::size_t value = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    throw ConfigError("FAIRLENS_THREADS must be a non-negative integer, got '" + std::string(text) + "'");
  }
  return value;
}

Stat summarize(std::span<const double> values) {
  Stat s;
  s.count = values.size();
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

ModelSummary summarize(std::span<const RepetitionRecord> records) {
  ModelSummary s;
  std::vector<double> original;
  std::vector<double> ensemble;
  double gap = 0.0;
  for (const auto& r : records) {
    original.push_back(r.original.accuracy);
    if (r.ensemble) {
      ensemble.push_back(r.ensemble->accuracy);
      gap += r.ensemble->accuracy - r.original.accuracy;
    }
  }
  s.original_accuracy = summarize(original);
  s.ensemble_accuracy = summarize(ensemble);
  s.gate_fired = ensemble.size();
  if (!ensemble.empty()) s.accuracy_gap = gap / static_cast<double>(ensemble.size());
  return s;
}

Dataset load_dataset(const RunConfig& cfg) {
  if (cfg.data_path.empty()) throw ConfigError("no dataset path given");
  if (cfg.target.empty()) throw ConfigError("no target column given");
  LoadOptions options;
  options.hints = cfg.hints;
  options.positive_label = cfg.positive_label;
  options.sensitive = sensitive_names(cfg);
  Dataset d = [&] {
    try {
      return load_csv(cfg.data_path, cfg.target, options);
    } catch (const DataError& e) {
      throw ConfigError(e.what());
    }
  }();
  return d;
}

AuditRun run_audit(const RunConfig& cfg, const Dataset& d) {
  cfg.validate(d);
  const Dataset data = d.with_sensitive(sensitive_names(cfg));
  const LimeOutConfig lo = cfg.limeout_config();

  AuditRun run;
  run.config = cfg;
  for (ModelFamily family : cfg.families) {
    const ModelSpec spec = cfg.model_spec(family);
    ModelRun m;
    m.family = family;
    m.records.resize(cfg.repetitions);
    parallel::for_each_index(cfg.repetitions, cfg.threads, [&](std::size_t r) {
      try {
        m.records[r] = run_limeout(spec, data, lo, cfg.base_seed + r);
      } catch (const std::exception& e) {
        throw PipelineError(std::string(to_string(family)) + " repetition " + std::to_string(r) + " (seed " +
                            std::to_string(cfg.base_seed + r) + "): " + e.what());
      }
    });
    m.summary = summarize(m.records);
    run.models.push_back(std::move(m));
  }
  return run;
}

AuditRun run_audit(const RunConfig& cfg) {
  cfg.validate();
  return run_audit(cfg, load_dataset(cfg));
}

std::string format_mean_std(const Stat& s) {
  if (s.count == 0) return "-";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f (%.3f)", s.mean, s.std);
  return buf;
}

std::string emit_accuracy_table(const AuditRun& run) {
  std::string out = "model";
  for (const auto& m : run.models) out += "," + std::string(to_string(m.family));
  out += "\nOriginal";
  for (const auto& m : run.models) out += "," + csv_field(format_mean_std(m.summary.original_accuracy));
  out += "\nLimeOut";
  for (const auto& m : run.models) out += "," + csv_field(format_mean_std(m.summary.ensemble_accuracy));
  return out + "\n";
}

std::string emit_explanation_table(const RepetitionRecord& record, const std::set<std::string>& sensitive,
                                   std::size_t k) {
  std::string out =
      "rank,original_feature,original_contribution,original_sensitive,"
      "ensemble_feature,ensemble_contribution,ensemble_sensitive\n";
  const auto& orig = record.original.explanation.entries;
  const std::size_t rows = std::min(k, orig.size());
  for (std::size_t r = 0; r < rows; ++r) {
    out += std::to_string(r + 1) + "," + csv_field(orig[r].feature) + "," + number(orig[r].contribution) + "," +
           (sensitive.contains(orig[r].feature) ? "1" : "0") + ",";
    if (record.ensemble && r < record.ensemble->explanation.entries.size()) {
      const GlobalEntry& e = record.ensemble->explanation.entries[r];
      out += csv_field(e.feature) + "," + number(e.contribution) + "," + (sensitive.contains(e.feature) ? "1" : "0");
    } else {
      out += ",,";
    }
    out += "\n";
  }
  return out;
}

std::map<std::string, std::string> emit_explanation_tables(const AuditRun& run) {
  std::map<std::string, std::string> out;
  const auto sensitive = sensitive_names(run.config);
  for (const auto& m : run.models) {
    for (const auto& r : m.records) {
      const std::string name = "explanations_" + std::string(to_string(m.family)) + "_" + std::to_string(r.seed) + ".csv";
      out[name] = emit_explanation_table(r, sensitive, r.gate.k);
    }
  }
  return out;
}

std::string emit_metric_points(const AuditRun& run) {
  std::string out = "model,seed,feature,metric,original,ensemble,optimal\n";
  auto cell = [](const MetricValue& v) { return v ? number(*v) : std::string(); };
  for (const auto& m : run.models) {
    const std::string family(to_string(m.family));
    // feature -> metric -> (original values, ensemble values)
    std::map<std::string, std::map<int, std::pair<std::vector<double>, std::vector<double>>>> pooled;
    for (const auto& r : m.records) {
      if (!r.ensemble) continue;
      for (std::size_t g = 0; g < r.original.metrics.size(); ++g) {
        const MetricVector& o = r.original.metrics[g];
        const MetricVector& e = r.ensemble->metrics[g];
        for (Metric metric : kAllMetrics) {
          const MetricValue ov = o.get(metric);
          const MetricValue ev = e.get(metric);
          out += family + "," + std::to_string(r.seed) + "," + csv_field(o.feature) + "," +
                 std::string(to_string(metric)) + "," + cell(ov) + "," + cell(ev) + "," +
                 number(optimal_value(metric)) + "\n";
          auto& slot = pooled[o.feature][static_cast<int>(metric)];
          if (ov) slot.first.push_back(*ov);
          if (ev) slot.second.push_back(*ev);
        }
      }
    }
    if (m.summary.gate_fired == 0) continue;
    for (const auto& g : run.config.groups) {
      for (Metric metric : kAllMetrics) {
        const auto& slot = pooled[g.feature][static_cast<int>(metric)];
        auto mean = [](const std::vector<double>& v) -> MetricValue {
          if (v.empty()) return std::nullopt;
          return summarize(v).mean;
        };
        out += family + ",mean," + csv_field(g.feature) + "," + std::string(to_string(metric)) + "," +
               cell(mean(slot.first)) + "," + cell(mean(slot.second)) + "," + number(optimal_value(metric)) + "\n";
      }
    }
  }
  return out;
}

std::string record_to_json(const RepetitionRecord& record, const std::set<std::string>& sensitive) {
  json members = json::array();
  for (const auto& drop : record.ensemble_members) members.push_back(drop);
  json j{{"seed", record.seed},
         {"original", assessment_json(record.original, sensitive)},
         {"gate",
          json{{"deemed_unfair", record.gate.deemed_unfair},
               {"sensitive_in_topk", record.gate.sensitive_in_topk},
               {"k", record.gate.k}}},
         {"ensemble", record.ensemble ? assessment_json(*record.ensemble, sensitive) : json(nullptr)},
         {"ensemble_members", members}};
  return json_util::dump(j);
}

std::string summary_to_json(const AuditRun& run) {
  auto stat = [](const Stat& s) {
    return s.count == 0 ? json(nullptr) : json{{"mean", s.mean}, {"std", s.std}, {"count", s.count}};
  };
  json models = json::object();
  for (const auto& m : run.models) {
    models[std::string(to_string(m.family))] =
        json{{"original_accuracy", stat(m.summary.original_accuracy)},
             {"ensemble_accuracy", stat(m.summary.ensemble_accuracy)},
             {"gate_fired", m.summary.gate_fired},
             {"repetitions", m.records.size()},
             {"accuracy_gap", m.summary.accuracy_gap ? json(*m.summary.accuracy_gap) : json(nullptr)}};
  }
  return json_util::dump(json{{"models", models}});
}

void write_artifacts(const AuditRun& run, const std::filesystem::path& dir) {
  const auto sensitive = sensitive_names(run.config);
  write_file(dir / "config.json", run.config.to_json());
  write_file(dir / "summary.json", summary_to_json(run));
  for (std::size_t r = 0; r < run.config.repetitions; ++r) {
    json per_model = json::object();
    std::uint64_t seed = run.config.base_seed + r;
    for (const auto& m : run.models) {
      per_model[std::string(to_string(m.family))] = json::parse(record_to_json(m.records[r], sensitive));
    }
    write_file(dir / "runs" / std::to_string(seed) / "record.json", json_util::dump(per_model));
  }
  write_file(dir / "tables" / "accuracy.csv", emit_accuracy_table(run));
  for (const auto& [name, text] : emit_explanation_tables(run)) write_file(dir / "tables" / name, text);
  write_file(dir / "plotdata" / "metric_points.csv", emit_metric_points(run));
}

}  // namespace fairlens
