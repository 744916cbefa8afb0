#pragma once

#include "ibd/explanation.hpp"
#include "ibd/model.hpp"
#include "ibd/types.hpp"

#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <unordered_map>
#include <vector>

namespace ibd {

struct KernelOptions {
    // Background rows used for expectations; datasets larger than this are
    // subsampled once, uniformly without replacement, from `seed`.
    // 0 disables the cap.
    std::size_t row_cap = 1000;
    std::uint64_t seed = 0;
    // Worker threads for the pairwise sweep. Results are identical at any
    // worker count: every expectation is a fixed-order mean over one batch.
    std::size_t workers = 1;
};

struct PairContribution {
    double total = 0.0;       // joint effect of fixing both features
    double interaction = 0.0; // total minus the two single contributions
};

// Expectation engine for one (model, background data, observation) triple.
//
// Every quantity reduces to group expectations E[f(X) | X_S = x*_S],
// estimated by overwriting the columns in S with the observation's values
// and averaging one batched model call over all background rows in stored
// row order. Expectations are memoized by fixed-set key, so path assembly
// and repeated-order sampling reuse earlier results.
class ContributionKernel {
public:
    ContributionKernel(ModelPtr model, const Dataset& background, Observation observation,
                       KernelOptions options = {});

    std::size_t n_features() const { return background_.n_features(); }
    std::size_t background_rows() const { return background_.n_rows(); }
    const Dataset& background() const { return background_; }
    const Observation& observation() const { return observation_; }
    const ModelPtr& model() const { return model_; }
    const KernelOptions& options() const { return options_; }

    // Mean model response over the background rows (the intercept).
    double baseline() const;

    // Model score of the observation itself. Identical to the expectation
    // with every feature fixed.
    double prediction() const;

    // E[f(X) | X_S = x*_S] for an arbitrary fixed set S (duplicates allowed,
    // order irrelevant). The background dataset is never modified.
    double group_expectation(std::span<const std::size_t> fixed_set) const;

    // Single-step contribution of feature i: how much the mean prediction
    // moves when feature i alone is fixed at the observation's value.
    double single_contribution(std::size_t i) const;

    // Joint contribution of fixing i and j together, plus the interaction
    // part left after removing both single contributions. Symmetric in
    // (i, j), bitwise.
    PairContribution pair_contribution(std::size_t i, std::size_t j) const;

    // All single contributions and all pairwise contributions/interactions.
    // The pairwise sweep runs on options().workers threads.
    InteractionMatrix interaction_matrix() const;

    // Added contribution of `group` once the features in `history` are
    // already fixed. `group` and `history` must be disjoint.
    double conditional_contribution(const FeatureGroup& group,
                                    std::span<const std::size_t> history) const;

private:
    struct Scratch {
        Table table;
        std::vector<double> scores;
    };
    using ScratchPtr = std::unique_ptr<Scratch>;

    ScratchPtr acquire_scratch() const;
    void release_scratch(ScratchPtr scratch) const;
    double expectation(const std::vector<std::size_t>& key) const;
    double compute(Scratch& scratch, const std::vector<std::size_t>& key) const;
    std::vector<std::size_t> canonical_set(std::span<const std::size_t> fixed_set) const;

    ModelPtr model_;
    Dataset background_;
    Observation observation_;
    KernelOptions options_;

    mutable std::mutex cache_mutex_;
    mutable std::unordered_map<std::string, double> cache_;
    mutable std::mutex scratch_mutex_;
    mutable std::vector<ScratchPtr> scratch_pool_;
};

// One-shot conveniences mirroring the kernel surface.
double baseline(const ModelPtr& model, const Dataset& background, KernelOptions options = {});
double group_expectation(const ModelPtr& model, const Dataset& background,
                         const Observation& observation, std::span<const std::size_t> fixed_set,
                         KernelOptions options = {});
double single_contribution(const ModelPtr& model, const Dataset& background,
                           const Observation& observation, std::size_t i,
                           KernelOptions options = {});
PairContribution pair_contribution(const ModelPtr& model, const Dataset& background,
                                   const Observation& observation, std::size_t i, std::size_t j,
                                   KernelOptions options = {});
InteractionMatrix interaction_matrix(const ModelPtr& model, const Dataset& background,
                                     const Observation& observation, KernelOptions options = {});

} // namespace ibd
