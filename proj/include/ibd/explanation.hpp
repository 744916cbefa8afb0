#pragma once

#include "ibd/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ibd {

// A single feature or an unordered feature pair (stored with first < second).
struct FeatureGroup {
    std::size_t first = 0;
    std::optional<std::size_t> second;

    static FeatureGroup single(std::size_t i) { return {i, std::nullopt}; }
    static FeatureGroup pair(std::size_t i, std::size_t j);

    bool is_pair() const { return second.has_value(); }
    bool contains(std::size_t f) const { return first == f || (second && *second == f); }
    bool operator==(const FeatureGroup&) const = default;
};

// Candidate for the greedy path: a group plus the score used for ranking
// (a single-step contribution for singles, an interaction-specific
// contribution for pairs).
struct Candidate {
    FeatureGroup group;
    double order_score = 0.0;
};

// Strictly-upper-triangular table over feature pairs (i < j).
class PairTable {
public:
    PairTable() = default;
    explicit PairTable(std::size_t p) : p_(p), values_(p >= 2 ? p * (p - 1) / 2 : 0, 0.0) {}

    double at(std::size_t i, std::size_t j) const { return values_[index(i, j)]; }
    void set(std::size_t i, std::size_t j, double v) { values_[index(i, j)] = v; }
    std::size_t n_features() const { return p_; }
    std::size_t n_pairs() const { return values_.size(); }

private:
    std::size_t index(std::size_t i, std::size_t j) const;

    std::size_t p_ = 0;
    std::vector<double> values_;
};

// All single-step quantities for one (model, data, observation) triple:
// per-feature contributions, joint pair contributions, and the
// interaction-specific parts (pair minus the two singles).
struct InteractionMatrix {
    std::vector<double> singles;
    PairTable pair_totals;
    PairTable interactions;

    std::size_t n_features() const { return singles.size(); }
};

struct ExplanationStep {
    FeatureGroup group;
    double order_score = 0.0;
    double attribution = 0.0;
};

struct ExplanationMeta {
    std::uint64_t seed = 0;
    std::size_t background_rows = 0;
    std::string model;
};

// An ordered additive decomposition of one prediction. Construction enforces
// the two contracts everything downstream relies on: the step groups
// partition the feature set, and baseline + sum of attributions equals the
// prediction to 1e-8 relative. A violation throws instead of renormalizing.
class Explanation {
public:
    Explanation(double baseline, double prediction, std::vector<ExplanationStep> steps,
                std::vector<std::string> feature_names, ExplanationMeta meta);

    double baseline() const { return baseline_; }
    double prediction() const { return prediction_; }
    const std::vector<ExplanationStep>& steps() const { return steps_; }
    const std::vector<std::string>& feature_names() const { return feature_names_; }
    const ExplanationMeta& meta() const { return meta_; }

    std::size_t n_features() const { return feature_names_.size(); }
    // Display label of a step: the feature name, or both names joined by ':'.
    std::string step_label(std::size_t k) const;

    std::string to_json() const;
    std::string to_text(int precision = 4) const;

private:
    double baseline_ = 0.0;
    double prediction_ = 0.0;
    std::vector<ExplanationStep> steps_;
    std::vector<std::string> feature_names_;
    ExplanationMeta meta_;
};

// Per-feature contribution distributions across K sampled feature orders.
// means[i] is the sampled Shapley value of feature i.
struct UncertaintyReport {
    std::size_t K = 0;
    std::uint64_t seed = 0;
    std::vector<std::string> feature_names;
    std::vector<std::vector<double>> samples; // [feature][k], in draw order
    std::vector<double> means;
    std::vector<double> q1;
    std::vector<double> q3;
    std::vector<double> iqr;
    std::optional<Explanation> baseline_explanation;

    std::string to_json() const;
    std::string to_text(int precision = 4) const;
};

// Linear-interpolation quantile (h = (n-1)q) over an unsorted sample.
double quantile(std::vector<double> values, double q);

} // namespace ibd
