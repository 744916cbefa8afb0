#pragma once

#include "ibd/explanation.hpp"
#include "ibd/kernel.hpp"
#include "ibd/model.hpp"
#include "ibd/types.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace ibd {

// Order of single features used for order-specified explanations; must be a
// permutation of {0, ..., p-1}.
using FeatureOrder = std::vector<std::size_t>;

enum class TieBreak {
    SinglesFirst, // on exact score ties prefer the more parsimonious single
    PairsFirst,
};

struct ExplainConfig {
    // Pair scores are divided by this factor before ranking, so values > 1
    // demand stronger interaction evidence before a pair enters the path.
    // 1.0 ranks purely by absolute score.
    double interaction_preference = 1.0;
    TieBreak tie_break = TieBreak::SinglesFirst;
    std::size_t row_cap = 1000;
    std::uint64_t seed = 0;
    std::size_t workers = 1;

    KernelOptions kernel() const { return {row_cap, seed, workers}; }
};

// Ranked greedy selection over all singles (scored by their single-step
// contribution) and all pairs (scored by their interaction-specific
// contribution): sort by descending |score| (pair scores divided by
// interaction_preference first), then walk the ranking and accept a
// candidate iff all its features are still open. Ties break to the
// configured kind, then ascending feature index / pair lexicographic, so
// the path is fully determined by the scores.
std::vector<Candidate> build_path(const InteractionMatrix& matrix, const ExplainConfig& config);

// Full greedy explanation with interactions: rank candidates, pick the
// path, then attribute each step its added contribution given everything
// already fixed. The result satisfies baseline + sum(attributions) =
// prediction by construction.
Explanation sequential_explain(const ModelPtr& model, const Dataset& background,
                               const Observation& observation, const ExplainConfig& config = {});

// Order-specified explanation over single features: step k gets the added
// contribution of order[k] given order[0..k-1] are fixed. For non-additive
// models different orders tell different stories; that divergence is the
// point of sampling them.
Explanation explain_with_order(const ModelPtr& model, const Dataset& background,
                               const Observation& observation, const FeatureOrder& order,
                               const ExplainConfig& config = {});

// Contribution distributions over K feature orders sampled uniformly with
// repetition from `seed`. means = sampled Shapley values; iqr = explanation
// level uncertainty. The report also carries a baseline explanation (single
// features ordered by descending |single contribution|) whose bars the
// whisker plot annotates.
UncertaintyReport uncertainty_profile(const ModelPtr& model, const Dataset& background,
                                      const Observation& observation, std::size_t K,
                                      std::uint64_t seed, const ExplainConfig& config = {});

// Same report over caller-chosen orders (explicit scenario comparison and
// exhaustive small-p studies).
UncertaintyReport uncertainty_profile_with_orders(const ModelPtr& model, const Dataset& background,
                                                  const Observation& observation,
                                                  std::span<const FeatureOrder> orders,
                                                  const ExplainConfig& config = {});

// Per-feature Shapley values. Exhaustive mode averages over all p!
// permutations (allowed for p <= 8) and equals the classical subset-formula
// value; sampled mode averages over K seeded permutations.
std::vector<double> shapley_estimate(const ModelPtr& model, const Dataset& background,
                                     const Observation& observation, bool exhaustive,
                                     std::size_t K, std::uint64_t seed,
                                     const ExplainConfig& config = {});

} // namespace ibd
