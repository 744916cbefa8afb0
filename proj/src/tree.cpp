#include "ibd/models/tree.hpp"

#include "ibd/errors.hpp"
#include "ibd/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace ibd {

namespace {

void check_targets(const Dataset& data, std::span<const double> targets) {
    if (targets.empty()) throw ValidationError("training requires non-empty targets");
    if (targets.size() != data.n_rows()) {
        throw ValidationError("targets length " + std::to_string(targets.size()) +
                              " does not match " + std::to_string(data.n_rows()) + " rows");
    }
    for (double t : targets) {
        if (!std::isfinite(t)) throw ValidationError("non-finite target value");
    }
}

double mean_of(std::span<const double> values, std::span<const std::size_t> rows) {
    double sum = 0.0;
    for (std::size_t r : rows) sum += values[r];
    return sum / static_cast<double>(rows.size());
}

struct Split {
    bool found = false;
    std::size_t feature = 0;
    bool categorical = false;
    double threshold = 0.0;
    std::int32_t left_level = 0; // one-level-vs-rest partition
    double gain = 0.0;
};

// Exact greedy squared-error split over the candidate features. Gain is the
// reduction in total squared error; ties keep the first candidate in scan
// order (features ascending, thresholds/levels ascending), so training is
// deterministic.
Split best_split(const Dataset& data, std::span<const double> response,
                 const std::vector<std::size_t>& rows,
                 std::span<const std::size_t> features, std::size_t min_leaf) {
    Split best;
    const std::size_t n = rows.size();
    if (n < 2 * min_leaf) return best;

    double total = 0.0;
    for (std::size_t r : rows) total += response[r];
    const double parent_score = total * total / static_cast<double>(n);

    std::vector<std::size_t> sorted;
    for (std::size_t f : features) {
        const auto& column = data.column(f);
        if (data.schema().kinds[f] == FeatureKind::Numeric) {
            sorted.assign(rows.begin(), rows.end());
            std::sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) {
                if (column[a] != column[b]) return column[a] < column[b];
                return a < b;
            });
            double left_sum = 0.0;
            for (std::size_t k = 0; k + 1 < n; ++k) {
                left_sum += response[sorted[k]];
                if (column[sorted[k]] == column[sorted[k + 1]]) continue;
                const std::size_t n_left = k + 1;
                const std::size_t n_right = n - n_left;
                if (n_left < min_leaf || n_right < min_leaf) continue;
                const double right_sum = total - left_sum;
                const double gain = left_sum * left_sum / static_cast<double>(n_left) +
                                    right_sum * right_sum / static_cast<double>(n_right) -
                                    parent_score;
                if (gain > best.gain && gain > 1e-12) {
                    best = {true, f, false,
                            0.5 * (column[sorted[k]] + column[sorted[k + 1]]), 0, gain};
                }
            }
        } else {
            const std::size_t n_levels = data.schema().levels[f].size();
            std::vector<double> level_sum(n_levels, 0.0);
            std::vector<std::size_t> level_count(n_levels, 0);
            for (std::size_t r : rows) {
                const auto id = static_cast<std::size_t>(column[r]);
                level_sum[id] += response[r];
                level_count[id] += 1;
            }
            for (std::size_t id = 0; id < n_levels; ++id) {
                const std::size_t n_left = level_count[id];
                const std::size_t n_right = n - n_left;
                if (n_left < min_leaf || n_right < min_leaf) continue;
                const double left_sum = level_sum[id];
                const double right_sum = total - left_sum;
                const double gain = left_sum * left_sum / static_cast<double>(n_left) +
                                    right_sum * right_sum / static_cast<double>(n_right) -
                                    parent_score;
                if (gain > best.gain && gain > 1e-12) {
                    best = {true, f, true, 0.0, static_cast<std::int32_t>(id), gain};
                }
            }
        }
    }
    return best;
}

struct TreeBuilder {
    const Dataset& data;
    std::span<const double> response;
    int max_depth;
    std::size_t min_leaf;
    std::size_t mtry = 0;        // 0 = all features
    rng::Engine* gen = nullptr;  // per-split feature subsampling (forests)
    Tree tree;

    std::int32_t build(std::vector<std::size_t>& rows, int depth) {
        const auto node_id = static_cast<std::int32_t>(tree.size());
        tree.emplace_back();
        tree[node_id].value = mean_of(response, rows);
        if (depth >= max_depth || rows.size() < 2 * min_leaf) return node_id;

        std::vector<std::size_t> features;
        if (mtry == 0 || mtry >= data.n_features()) {
            features.resize(data.n_features());
            std::iota(features.begin(), features.end(), std::size_t{0});
        } else {
            features = rng::sample_without_replacement(data.n_features(), mtry, *gen);
            std::sort(features.begin(), features.end());
        }

        const Split split = best_split(data, response, rows, features, min_leaf);
        if (!split.found) return node_id;

        std::vector<std::size_t> left_rows;
        std::vector<std::size_t> right_rows;
        const auto& column = data.column(split.feature);
        for (std::size_t r : rows) {
            const bool goes_left = split.categorical
                                       ? static_cast<std::int32_t>(column[r]) == split.left_level
                                       : column[r] <= split.threshold;
            (goes_left ? left_rows : right_rows).push_back(r);
        }

        tree[node_id].feature = static_cast<std::int32_t>(split.feature);
        tree[node_id].categorical = split.categorical;
        tree[node_id].threshold = split.threshold;
        if (split.categorical) tree[node_id].left_levels = {split.left_level};
        const std::int32_t left_id = build(left_rows, depth + 1);
        const std::int32_t right_id = build(right_rows, depth + 1);
        tree[node_id].left = left_id;
        tree[node_id].right = right_id;
        return node_id;
    }
};

std::string format_rate(double rate) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", rate);
    return buf;
}

} // namespace

TreeEnsemble::TreeEnsemble(EnsembleMode mode, std::vector<Tree> trees, double learning_rate,
                           double init_score, int max_depth, Schema schema, std::string name,
                           std::uint64_t seed)
    : mode_(mode),
      trees_(std::move(trees)),
      learning_rate_(learning_rate),
      init_score_(init_score),
      max_depth_(max_depth),
      schema_(std::move(schema)),
      name_(std::move(name)),
      seed_(seed) {}

double TreeEnsemble::eval_tree(const Tree& tree, const Table& rows, std::size_t row) {
    std::int32_t node = 0;
    while (!tree[node].is_leaf()) {
        const double v = rows.columns[tree[node].feature][row];
        bool goes_left;
        if (tree[node].categorical) {
            const auto id = static_cast<std::int32_t>(v);
            goes_left = std::binary_search(tree[node].left_levels.begin(),
                                           tree[node].left_levels.end(), id);
        } else {
            goes_left = v <= tree[node].threshold;
        }
        node = goes_left ? tree[node].left : tree[node].right;
    }
    return tree[node].value;
}

void TreeEnsemble::score(const Table& rows, std::span<double> out) const {
    for (std::size_t r = 0; r < rows.n_rows; ++r) {
        double acc = mode_ == EnsembleMode::Boosted ? init_score_ : 0.0;
        for (const Tree& tree : trees_) {
            const double leaf = eval_tree(tree, rows, r);
            acc += mode_ == EnsembleMode::Boosted ? learning_rate_ * leaf : leaf;
        }
        out[r] = mode_ == EnsembleMode::Boosted
                     ? acc
                     : acc / static_cast<double>(trees_.size());
    }
}

ModelPtr train_gbm(const Dataset& data, std::span<const double> targets, const GbmParams& params) {
    check_targets(data, targets);
    if (params.max_depth < 1 || params.max_depth > 3) {
        throw ValidationError("gbm max_depth must be 1, 2 or 3");
    }
    if (params.n_trees == 0) throw ValidationError("gbm requires n_trees >= 1");

    const std::size_t n = data.n_rows();
    double init = 0.0;
    for (double t : targets) init += t;
    init /= static_cast<double>(n);

    std::vector<double> residual(targets.begin(), targets.end());
    for (double& r : residual) r -= init;

    const Table table = data.table();
    std::vector<std::size_t> all_rows(n);
    std::iota(all_rows.begin(), all_rows.end(), std::size_t{0});

    std::vector<Tree> trees;
    trees.reserve(params.n_trees);
    for (std::size_t t = 0; t < params.n_trees; ++t) {
        TreeBuilder builder{data, residual, params.max_depth, params.min_leaf, 0, nullptr, {}};
        std::vector<std::size_t> rows = all_rows;
        builder.build(rows, 0);
        for (std::size_t r = 0; r < n; ++r) {
            residual[r] -= params.learning_rate * TreeEnsemble::eval_tree(builder.tree, table, r);
        }
        trees.push_back(std::move(builder.tree));
    }

    const std::string name = "gbm(depth=" + std::to_string(params.max_depth) +
                             ",trees=" + std::to_string(params.n_trees) +
                             ",rate=" + format_rate(params.learning_rate) + ")";
    return std::make_shared<TreeEnsemble>(EnsembleMode::Boosted, std::move(trees),
                                          params.learning_rate, init, params.max_depth,
                                          data.schema(), name, params.seed);
}

ModelPtr train_random_forest(const Dataset& data, std::span<const double> targets,
                             const ForestParams& params) {
    check_targets(data, targets);
    if (params.n_trees == 0) throw ValidationError("random forest requires n_trees >= 1");
    if (params.max_depth < 1) throw ValidationError("random forest requires max_depth >= 1");

    const std::size_t n = data.n_rows();
    const std::size_t mtry =
        params.mtry > 0 ? std::min(params.mtry, data.n_features())
                        : std::max<std::size_t>(
                              1, static_cast<std::size_t>(
                                     std::floor(std::sqrt(static_cast<double>(data.n_features())))));

    std::vector<Tree> trees;
    trees.reserve(params.n_trees);
    for (std::size_t t = 0; t < params.n_trees; ++t) {
        rng::Engine gen(rng::derive_seed(params.seed, t));
        std::vector<std::size_t> rows(n);
        for (std::size_t r = 0; r < n; ++r) {
            rows[r] = static_cast<std::size_t>(rng::below(gen, n));
        }
        TreeBuilder builder{data, targets, params.max_depth, params.min_leaf, mtry, &gen, {}};
        builder.build(rows, 0);
        trees.push_back(std::move(builder.tree));
    }

    const std::string name = "rf(trees=" + std::to_string(params.n_trees) +
                             ",depth=" + std::to_string(params.max_depth) + ")";
    return std::make_shared<TreeEnsemble>(EnsembleMode::Bagged, std::move(trees), 1.0, 0.0,
                                          params.max_depth, data.schema(), name, params.seed);
}

} // namespace ibd
