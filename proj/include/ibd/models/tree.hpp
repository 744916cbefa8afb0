#pragma once

#include "ibd/model.hpp"
#include "ibd/types.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace ibd {

// Binary regression tree node. `feature == -1` marks a leaf. Numeric splits
// send `x <= threshold` left; categorical splits send level ids found in
// `left_levels` (sorted) left.
struct TreeNode {
    std::int32_t feature = -1;
    bool categorical = false;
    double threshold = 0.0;
    std::vector<std::int32_t> left_levels;
    std::int32_t left = -1;
    std::int32_t right = -1;
    double value = 0.0;

    bool is_leaf() const { return feature < 0; }
};

using Tree = std::vector<TreeNode>; // nodes in construction order, root at 0

enum class EnsembleMode { Boosted, Bagged };

// Trained tree ensemble. Boosted mode predicts init_score plus the
// rate-weighted sum of tree outputs; bagged mode predicts the plain mean of
// tree outputs. Raw scores, never clipped: a depth-1 boosted ensemble is a
// sum of single-feature functions and must stay exactly additive.
class TreeEnsemble final : public Model {
public:
    TreeEnsemble(EnsembleMode mode, std::vector<Tree> trees, double learning_rate,
                 double init_score, int max_depth, Schema schema, std::string name,
                 std::uint64_t seed);

    void score(const Table& rows, std::span<double> out) const override;
    std::string family() const override {
        return mode_ == EnsembleMode::Boosted ? "gbm" : "random_forest";
    }
    std::string name() const override { return name_; }
    const Schema* schema() const override { return &schema_; }

    EnsembleMode mode() const { return mode_; }
    const std::vector<Tree>& trees() const { return trees_; }
    double learning_rate() const { return learning_rate_; }
    double init_score() const { return init_score_; }
    int max_depth() const { return max_depth_; }
    std::uint64_t seed() const { return seed_; }

    static double eval_tree(const Tree& tree, const Table& rows, std::size_t row);

private:
    EnsembleMode mode_;
    std::vector<Tree> trees_;
    double learning_rate_ = 1.0;
    double init_score_ = 0.0;
    int max_depth_ = 1;
    Schema schema_;
    std::string name_;
    std::uint64_t seed_ = 0;
};

struct GbmParams {
    int max_depth = 2; // 1, 2 or 3; depth 1 yields an exactly additive model
    std::size_t n_trees = 200;
    double learning_rate = 0.1;
    std::uint64_t seed = 0;
    std::size_t min_leaf = 5;
};

// Squared-loss gradient boosting on raw targets with exact greedy splits
// (midpoints of sorted unique values for numeric features, one-level-vs-rest
// for categorical ones). Deterministic: no row or feature subsampling.
ModelPtr train_gbm(const Dataset& data, std::span<const double> targets, const GbmParams& params);

struct ForestParams {
    std::size_t n_trees = 100;
    int max_depth = 4;
    std::uint64_t seed = 0;
    std::size_t min_leaf = 5;
    std::size_t mtry = 0; // features tried per split; 0 = floor(sqrt(p))
};

// Bagged trees: bootstrap row sample per tree, random feature subset per
// split, mean aggregation. Fully determined by the seed.
ModelPtr train_random_forest(const Dataset& data, std::span<const double> targets,
                             const ForestParams& params);

} // namespace ibd
