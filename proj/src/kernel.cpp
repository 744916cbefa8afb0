#include "ibd/kernel.hpp"

#include "ibd/errors.hpp"
#include "ibd/parallel.hpp"
#include "ibd/random.hpp"

#include <algorithm>
#include <cstring>
#include <utility>

namespace ibd {

namespace {

constexpr std::uint64_t kRowStream = 0x524f5753; // subsampling stream tag

Dataset apply_row_cap(const Dataset& background, const KernelOptions& options) {
    if (options.row_cap == 0 || background.n_rows() <= options.row_cap) return background;
    rng::Engine gen(rng::derive_seed(options.seed, kRowStream));
    auto rows = rng::sample_without_replacement(background.n_rows(), options.row_cap, gen);
    std::sort(rows.begin(), rows.end()); // keep stored row order
    return background.take_rows(rows);
}

std::string set_key(const std::vector<std::size_t>& sorted_set) {
    std::string key(sorted_set.size() * sizeof(std::size_t), '\0');
    if (!sorted_set.empty()) {
        std::memcpy(key.data(), sorted_set.data(), key.size());
    }
    return key;
}

} // namespace

ContributionKernel::ContributionKernel(ModelPtr model, const Dataset& background,
                                       Observation observation, KernelOptions options)
    : model_(std::move(model)),
      background_(apply_row_cap(background, options)),
      observation_(std::move(observation)),
      options_(options) {
    if (!model_) throw ValidationError("kernel requires a model");
    if (observation_.n_features() != background_.n_features()) {
        throw ValidationError("observation arity does not match the background data");
    }
}

ContributionKernel::ScratchPtr ContributionKernel::acquire_scratch() const {
    {
        std::lock_guard<std::mutex> lock(scratch_mutex_);
        if (!scratch_pool_.empty()) {
            ScratchPtr s = std::move(scratch_pool_.back());
            scratch_pool_.pop_back();
            return s;
        }
    }
    auto s = std::make_unique<Scratch>();
    s->table = background_.table();
    s->scores.resize(background_.n_rows());
    return s;
}

void ContributionKernel::release_scratch(ScratchPtr scratch) const {
    std::lock_guard<std::mutex> lock(scratch_mutex_);
    scratch_pool_.push_back(std::move(scratch));
}

std::vector<std::size_t> ContributionKernel::canonical_set(
    std::span<const std::size_t> fixed_set) const {
    std::vector<std::size_t> key(fixed_set.begin(), fixed_set.end());
    std::sort(key.begin(), key.end());
    key.erase(std::unique(key.begin(), key.end()), key.end());
    if (!key.empty() && key.back() >= n_features()) {
        throw ValidationError("feature index " + std::to_string(key.back()) + " out of range");
    }
    return key;
}

double ContributionKernel::compute(Scratch& scratch, const std::vector<std::size_t>& key) const {
    // Fixing every feature turns each background row into the observation;
    // score it once instead of averaging n identical values, so the
    // full-set expectation equals the prediction exactly.
    if (key.size() == n_features()) {
        return model_->score_one(observation_.values);
    }
    for (std::size_t f : key) {
        std::fill(scratch.table.columns[f].begin(), scratch.table.columns[f].end(),
                  observation_.values[f]);
    }
    try {
        model_->score(scratch.table, scratch.scores);
    } catch (const std::exception& e) {
        for (std::size_t f : key) scratch.table.columns[f] = background_.column(f);
        throw ModelError("scoring a batch of " + std::to_string(background_.n_rows()) +
                         " background rows failed: " + e.what());
    }
    for (std::size_t f : key) scratch.table.columns[f] = background_.column(f);

    // Fixed accumulation order: stored row order, plain summation.
    double sum = 0.0;
    for (double v : scratch.scores) sum += v;
    return sum / static_cast<double>(background_.n_rows());
}

double ContributionKernel::expectation(const std::vector<std::size_t>& key) const {
    const std::string id = set_key(key);
    {
        std::lock_guard<std::mutex> lock(cache_mutex_);
        const auto it = cache_.find(id);
        if (it != cache_.end()) return it->second;
    }
    ScratchPtr scratch = acquire_scratch();
    double value;
    try {
        value = compute(*scratch, key);
    } catch (...) {
        release_scratch(std::move(scratch));
        throw;
    }
    release_scratch(std::move(scratch));
    {
        std::lock_guard<std::mutex> lock(cache_mutex_);
        cache_.emplace(id, value);
    }
    return value;
}

double ContributionKernel::baseline() const {
    return expectation({});
}

double ContributionKernel::prediction() const {
    std::vector<std::size_t> all(n_features());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return expectation(all);
}

double ContributionKernel::group_expectation(std::span<const std::size_t> fixed_set) const {
    return expectation(canonical_set(fixed_set));
}

double ContributionKernel::single_contribution(std::size_t i) const {
    if (i >= n_features()) {
        throw ValidationError("feature index " + std::to_string(i) + " out of range");
    }
    return expectation({i}) - baseline();
}

PairContribution ContributionKernel::pair_contribution(std::size_t i, std::size_t j) const {
    if (i == j) throw ValidationError("pair requires distinct features");
    const std::size_t lo = std::min(i, j);
    const std::size_t hi = std::max(i, j);
    if (hi >= n_features()) {
        throw ValidationError("feature index " + std::to_string(hi) + " out of range");
    }
    PairContribution out;
    out.total = expectation({lo, hi}) - baseline();
    // Normalized (lo, hi) evaluation order keeps the result bitwise
    // symmetric in (i, j).
    out.interaction = out.total - single_contribution(lo) - single_contribution(hi);
    return out;
}

InteractionMatrix ContributionKernel::interaction_matrix() const {
    const std::size_t p = n_features();
    InteractionMatrix m;
    m.singles.resize(p);
    m.pair_totals = PairTable(p);
    m.interactions = PairTable(p);

    baseline();
    for (std::size_t i = 0; i < p; ++i) m.singles[i] = single_contribution(i);

    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    pairs.reserve(m.pair_totals.n_pairs());
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = i + 1; j < p; ++j) pairs.emplace_back(i, j);
    }

    parallel_chunks(pairs.size(), options_.workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t k = begin; k < end; ++k) {
            const auto [i, j] = pairs[k];
            const PairContribution pc = pair_contribution(i, j);
            m.pair_totals.set(i, j, pc.total);
            m.interactions.set(i, j, pc.interaction);
        }
    });
    return m;
}

double ContributionKernel::conditional_contribution(const FeatureGroup& group,
                                                    std::span<const std::size_t> history) const {
    const std::vector<std::size_t> before = canonical_set(history);
    std::vector<std::size_t> after = before;
    after.push_back(group.first);
    if (group.second) after.push_back(*group.second);
    std::sort(after.begin(), after.end());
    const std::size_t expected = before.size() + (group.second ? 2 : 1);
    if (after.size() != expected ||
        std::adjacent_find(after.begin(), after.end()) != after.end()) {
        throw ValidationError("conditional contribution requires the group to be disjoint from the history");
    }
    if (after.back() >= n_features()) {
        throw ValidationError("feature index " + std::to_string(after.back()) + " out of range");
    }
    return expectation(after) - expectation(before);
}

double baseline(const ModelPtr& model, const Dataset& background, KernelOptions options) {
    Observation obs{background.row(0)};
    return ContributionKernel(model, background, std::move(obs), options).baseline();
}

double group_expectation(const ModelPtr& model, const Dataset& background,
                         const Observation& observation, std::span<const std::size_t> fixed_set,
                         KernelOptions options) {
    return ContributionKernel(model, background, observation, options).group_expectation(fixed_set);
}

double single_contribution(const ModelPtr& model, const Dataset& background,
                           const Observation& observation, std::size_t i, KernelOptions options) {
    return ContributionKernel(model, background, observation, options).single_contribution(i);
}

PairContribution pair_contribution(const ModelPtr& model, const Dataset& background,
                                   const Observation& observation, std::size_t i, std::size_t j,
                                   KernelOptions options) {
    return ContributionKernel(model, background, observation, options).pair_contribution(i, j);
}

InteractionMatrix interaction_matrix(const ModelPtr& model, const Dataset& background,
                                     const Observation& observation, KernelOptions options) {
    return ContributionKernel(model, background, observation, options).interaction_matrix();
}

} // namespace ibd
