#include "fairlens/global_explain.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "fairlens/error.hpp"
#include "fairlens/random.hpp"
#include "json_util.hpp"
#include "parallel.hpp"

namespace fairlens {
namespace {

// Dense view of a candidate set: feature ids, importances and non-zero masks.
struct CoverageTable {
  std::vector<double> importance;
  std::vector<std::vector<std::uint8_t>> nonzero;

  explicit CoverageTable(std::span<const Explanation> explanations) {
    std::map<std::string, std::size_t> ids;
    std::vector<double> abs_sum;
    for (const auto& e : explanations) {
      for (const auto& c : e.contributions) {
        auto [it, inserted] = ids.emplace(c.feature, ids.size());
        if (inserted) abs_sum.push_back(0.0);
        abs_sum[it->second] += std::abs(c.value);
      }
    }
    importance.resize(abs_sum.size());
    for (std::size_t f = 0; f < abs_sum.size(); ++f) importance[f] = std::sqrt(abs_sum[f]);
    for (const auto& e : explanations) {
      std::vector<std::uint8_t> mask(ids.size(), 0);
      for (const auto& c : e.contributions) {
        if (std::abs(c.value) > 0.0) mask[ids.at(c.feature)] = 1;
      }
      nonzero.push_back(std::move(mask));
    }
  }
};

}  // namespace

std::vector<std::pair<std::string, double>> global_importance(std::span<const Explanation> explanations) {
  std::vector<std::pair<std::string, double>> out;
  std::map<std::string, std::size_t> at;
  for (const auto& e : explanations) {
    for (const auto& c : e.contributions) {
      auto [it, inserted] = at.emplace(c.feature, out.size());
      if (inserted) out.emplace_back(c.feature, 0.0);
      out[it->second].second += std::abs(c.value);
    }
  }
  for (auto& [name, v] : out) v = std::sqrt(v);
  return out;
}

double coverage(std::span<const Explanation> explanations, std::span<const std::size_t> picked) {
  const CoverageTable table(explanations);
  double total = 0.0;
  for (std::size_t f = 0; f < table.importance.size(); ++f) {
    const bool covered = std::any_of(picked.begin(), picked.end(), [&](std::size_t i) {
      return table.nonzero.at(i)[f] != 0;
    });
    if (covered) total += table.importance[f];
  }
  return total;
}

std::vector<std::size_t> submodular_pick(std::span<const Explanation> explanations, std::size_t budget) {
  if (budget < 1) throw ConfigError("submodular pick budget must be >= 1");
  if (budget > explanations.size()) {
    throw ConfigError("submodular pick budget " + std::to_string(budget) + " exceeds " +
                      std::to_string(explanations.size()) + " candidates");
  }
  const CoverageTable table(explanations);
  const std::size_t features = table.importance.size();
  std::vector<std::uint8_t> covered(features, 0);
  std::vector<std::uint8_t> taken(explanations.size(), 0);
  std::vector<std::size_t> picked;
  while (picked.size() < budget) {
    double best_gain = -1.0;
    std::size_t best = 0;
    for (std::size_t i = 0; i < explanations.size(); ++i) {
      if (taken[i] != 0) continue;
      double gain = 0.0;
      for (std::size_t f = 0; f < features; ++f) {
        if (table.nonzero[i][f] != 0 && covered[f] == 0) gain += table.importance[f];
      }
      if (gain > best_gain) {
        best_gain = gain;
        best = i;
      }
    }
    taken[best] = 1;
    for (std::size_t f = 0; f < features; ++f) covered[f] |= table.nonzero[best][f];
    picked.push_back(best);
  }
  return picked;
}

GlobalExplanation aggregate(std::span<const Explanation> explanations, std::span<const std::size_t> picked,
                            std::span<const std::string> schema_order, std::size_t k) {
  if (picked.empty()) throw ConfigError("aggregate needs at least one picked explanation");
  std::map<std::string, double> sums;
  for (const auto& name : schema_order) sums.emplace(name, 0.0);
  for (std::size_t i : picked) {
    if (i >= explanations.size()) throw ConfigError("picked index out of range");
    for (const auto& c : explanations[i].contributions) {
      auto it = sums.find(c.feature);
      if (it == sums.end()) throw DataError("explanation mentions unknown feature '" + c.feature + "'");
      it->second += c.value;
    }
  }
  GlobalExplanation g;
  for (const auto& name : schema_order) g.entries.push_back({name, sums.at(name)});
  std::stable_sort(g.entries.begin(), g.entries.end(), [](const GlobalEntry& a, const GlobalEntry& b) {
    return std::abs(a.contribution) > std::abs(b.contribution);
  });
  g.picked_instances.assign(picked.begin(), picked.end());
  g.budget = picked.size();
  g.k = std::min(k, g.entries.size());
  return g;
}

std::vector<GlobalEntry> top_k(const GlobalExplanation& g, std::size_t k) {
  if (k < 1 || k > g.entries.size()) {
    throw ConfigError("k = " + std::to_string(k) + " outside [1, " + std::to_string(g.entries.size()) + "]");
  }
  return {g.entries.begin(), g.entries.begin() + static_cast<std::ptrdiff_t>(k)};
}

Explanation truncate(const Explanation& e, std::size_t m) {
  Explanation out = e;
  if (m == 0) return out;
  for (std::size_t r = m; r < out.contributions.size(); ++r) out.contributions[r].value = 0.0;
  return out;
}

GlobalExplanation explain_globally(const Classifier& model, const NeighborhoodSampler& sampler,
                                   const Dataset& candidates, const GlobalConfig& cfg) {
  if (candidates.empty()) throw DataError("global explanation needs candidate rows");
  if (cfg.pool_size < 1) throw ConfigError("candidate pool size must be >= 1");
  std::vector<std::size_t> pool(candidates.num_rows());
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  if (pool.size() > cfg.pool_size) {
    Rng rng(derive_seed(cfg.seed, 0x706f6f6cULL));
    for (std::size_t i = 0; i < cfg.pool_size; ++i) {
      std::swap(pool[i], pool[i + rng.index(pool.size() - i)]);
    }
    pool.resize(cfg.pool_size);
    std::sort(pool.begin(), pool.end());
  }

  std::vector<Explanation> local(pool.size());
  parallel::for_each_index(pool.size(), cfg.threads, [&](std::size_t p) {
    LimeConfig lime = cfg.lime;
    lime.seed = derive_seed(cfg.seed, pool[p] + 1);
    local[p] = truncate(explain(model, candidates.row(pool[p]), sampler, lime), cfg.features_per_explanation);
  });

  const std::vector<std::size_t> picked_local = submodular_pick(local, std::min(cfg.budget, local.size()));
  std::vector<std::string> names;
  for (const auto& f : candidates.schema()) names.push_back(f.name);
  GlobalExplanation g = aggregate(local, picked_local, names, cfg.k);
  for (auto& i : g.picked_instances) i = pool[i];
  return g;
}

std::string to_json(const GlobalExplanation& g, const std::set<std::string>& sensitive) {
  using json_util::json;
  json entries = json::array();
  for (const auto& e : g.entries) {
    entries.push_back(json{{"feature", e.feature},
                           {"contribution", e.contribution},
                           {"sensitive", sensitive.contains(e.feature)}});
  }
  return json_util::dump(
      json{{"entries", entries}, {"picked_instances", g.picked_instances}, {"budget", g.budget}, {"k", g.k}});
}

}  // namespace fairlens
