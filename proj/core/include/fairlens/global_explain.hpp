#pragma once

#include <cstddef>
#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fairlens/data.hpp"
#include "fairlens/lime.hpp"
#include "fairlens/models.hpp"

namespace fairlens {

struct GlobalEntry {
  std::string feature;
  double contribution = 0.0;

  friend bool operator==(const GlobalEntry&, const GlobalEntry&) = default;
};

struct GlobalExplanation {
  // Every schema feature exactly once, sorted by |contribution| descending
  // with schema order breaking ties.
  std::vector<GlobalEntry> entries;
  std::vector<std::size_t> picked_instances;
  std::size_t budget = 0;
  std::size_t k = 0;

  friend bool operator==(const GlobalExplanation&, const GlobalExplanation&) = default;
};

// Global importance I_j = sqrt(sum_i |a_ij|) over all candidate explanations.
std::vector<std::pair<std::string, double>> global_importance(std::span<const Explanation> explanations);

// Coverage c(V) = sum_j I_j * [exists i in V : |a_ij| > 0].
double coverage(std::span<const Explanation> explanations, std::span<const std::size_t> picked);

// Greedy coverage maximization; ties go to the lowest index.
std::vector<std::size_t> submodular_pick(std::span<const Explanation> explanations, std::size_t budget);

// Signed per-feature sums over the picked explanations. `schema_order` fixes
// the feature set and the tie order; k is clamped to the feature count.
GlobalExplanation aggregate(std::span<const Explanation> explanations, std::span<const std::size_t> picked,
                            std::span<const std::string> schema_order, std::size_t k = 10);

std::vector<GlobalEntry> top_k(const GlobalExplanation& g, std::size_t k);

// Keeps the m largest-|value| contributions and zeroes the rest (m = 0 keeps
// everything).
Explanation truncate(const Explanation& e, std::size_t m);

struct GlobalConfig {
  LimeConfig lime;
  std::size_t pool_size = 500;
  std::size_t budget = 25;
  std::size_t k = 10;
  // Local explanations keep their top-m features before pick and aggregation.
  std::size_t features_per_explanation = 10;
  std::uint64_t seed = 0;
  // Worker threads for the candidate explanations (0 = hardware concurrency).
  std::size_t threads = 1;
};

// LIME_Global: explain a candidate pool drawn from `candidates`, pick a
// diverse subset, aggregate into a ranked feature list.
GlobalExplanation explain_globally(const Classifier& model, const NeighborhoodSampler& sampler,
                                   const Dataset& candidates, const GlobalConfig& cfg);

// GlobalExplanation JSON mirroring the explanation tables: entries carry a
// sensitive flag.
std::string to_json(const GlobalExplanation& g, const std::set<std::string>& sensitive);

}  // namespace fairlens
