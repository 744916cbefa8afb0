#include "ibd/explainer.hpp"

#include "ibd/errors.hpp"
#include "ibd/parallel.hpp"
#include "ibd/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace ibd {

namespace {

constexpr std::uint64_t kOrderStream = 0x4f524452; // permutation sampling stream tag

void check_config(const ExplainConfig& config) {
    if (!(config.interaction_preference > 0.0)) {
        throw ValidationError("interaction_preference must be > 0");
    }
}

void check_order(const FeatureOrder& order, std::size_t p) {
    if (order.size() != p) {
        throw ValidationError("order lists " + std::to_string(order.size()) +
                              " features, expected " + std::to_string(p));
    }
    std::vector<bool> seen(p, false);
    for (std::size_t f : order) {
        if (f >= p || seen[f]) throw ValidationError("order is not a permutation of the features");
        seen[f] = true;
    }
}

ExplanationMeta make_meta(const ContributionKernel& kernel, const ExplainConfig& config) {
    return ExplanationMeta{config.seed, kernel.background_rows(), kernel.model()->name()};
}

// Attribution walk shared by both explanation modes: successively fix each
// group and record how much the running expectation moves.
std::vector<double> path_attributions(const ContributionKernel& kernel,
                                      std::span<const FeatureGroup> path) {
    std::vector<double> attributions(path.size());
    std::vector<std::size_t> history;
    double previous = kernel.baseline();
    for (std::size_t k = 0; k < path.size(); ++k) {
        history.push_back(path[k].first);
        if (path[k].second) history.push_back(*path[k].second);
        const double current = kernel.group_expectation(history);
        attributions[k] = current - previous;
        previous = current;
    }
    return attributions;
}

FeatureOrder order_by_single_contribution(const ContributionKernel& kernel) {
    const std::size_t p = kernel.n_features();
    std::vector<double> magnitude(p);
    for (std::size_t i = 0; i < p; ++i) magnitude[i] = std::abs(kernel.single_contribution(i));
    FeatureOrder order(p);
    for (std::size_t i = 0; i < p; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (magnitude[a] != magnitude[b]) return magnitude[a] > magnitude[b];
        return a < b;
    });
    return order;
}

Explanation explain_with_order_impl(const ContributionKernel& kernel, const FeatureOrder& order,
                                    const ExplainConfig& config) {
    check_order(order, kernel.n_features());
    std::vector<FeatureGroup> path;
    path.reserve(order.size());
    for (std::size_t f : order) path.push_back(FeatureGroup::single(f));
    const std::vector<double> attributions = path_attributions(kernel, path);

    std::vector<ExplanationStep> steps;
    steps.reserve(order.size());
    for (std::size_t k = 0; k < order.size(); ++k) {
        steps.push_back({path[k], kernel.single_contribution(order[k]), attributions[k]});
    }
    return Explanation(kernel.baseline(), kernel.prediction(), std::move(steps),
                       kernel.background().schema().names, make_meta(kernel, config));
}

// Per-order conditional contributions of every feature, written into
// samples[feature][k]. Orders are processed in parallel; each slot is
// written exactly once, so the result is independent of the worker count.
void collect_order_samples(const ContributionKernel& kernel,
                           std::span<const FeatureOrder> orders,
                           std::vector<std::vector<double>>& samples,
                           std::size_t workers) {
    const std::size_t p = kernel.n_features();
    samples.assign(p, std::vector<double>(orders.size(), 0.0));
    kernel.baseline(); // warm the shared cache before the parallel walk
    parallel_chunks(orders.size(), workers, [&](std::size_t begin, std::size_t end) {
        std::vector<std::size_t> history;
        for (std::size_t k = begin; k < end; ++k) {
            check_order(orders[k], p);
            history.clear();
            double previous = kernel.baseline();
            for (std::size_t f : orders[k]) {
                history.push_back(f);
                const double current = kernel.group_expectation(history);
                samples[f][k] = current - previous;
                previous = current;
            }
        }
    });
}

UncertaintyReport report_from_orders(const ContributionKernel& kernel,
                                     std::span<const FeatureOrder> orders, std::uint64_t seed,
                                     const ExplainConfig& config) {
    if (orders.empty()) throw ValidationError("uncertainty profile requires K >= 1 orders");
    const std::size_t p = kernel.n_features();

    UncertaintyReport report;
    report.K = orders.size();
    report.seed = seed;
    report.feature_names = kernel.background().schema().names;
    collect_order_samples(kernel, orders, report.samples, config.workers);

    report.means.resize(p);
    report.q1.resize(p);
    report.q3.resize(p);
    report.iqr.resize(p);
    for (std::size_t f = 0; f < p; ++f) {
        double sum = 0.0;
        for (double v : report.samples[f]) sum += v;
        report.means[f] = sum / static_cast<double>(orders.size());
        report.q1[f] = quantile(report.samples[f], 0.25);
        report.q3[f] = quantile(report.samples[f], 0.75);
        report.iqr[f] = report.q3[f] - report.q1[f];
    }
    report.baseline_explanation =
        explain_with_order_impl(kernel, order_by_single_contribution(kernel), config);
    return report;
}

std::vector<FeatureOrder> draw_orders(std::size_t p, std::size_t K, std::uint64_t seed) {
    rng::Engine gen(rng::derive_seed(seed, kOrderStream));
    std::vector<FeatureOrder> orders;
    orders.reserve(K);
    for (std::size_t k = 0; k < K; ++k) orders.push_back(rng::permutation(p, gen));
    return orders;
}

} // namespace

std::vector<Candidate> build_path(const InteractionMatrix& matrix, const ExplainConfig& config) {
    check_config(config);
    const std::size_t p = matrix.n_features();

    std::vector<Candidate> candidates;
    candidates.reserve(p + matrix.interactions.n_pairs());
    for (std::size_t i = 0; i < p; ++i) {
        candidates.push_back({FeatureGroup::single(i), matrix.singles[i]});
    }
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = i + 1; j < p; ++j) {
            candidates.push_back({FeatureGroup::pair(i, j), matrix.interactions.at(i, j)});
        }
    }

    const bool singles_first = config.tie_break == TieBreak::SinglesFirst;
    const auto rank = [&](const Candidate& c) {
        const double magnitude = std::abs(c.order_score);
        return c.group.is_pair() ? magnitude / config.interaction_preference : magnitude;
    };
    std::sort(candidates.begin(), candidates.end(), [&](const Candidate& a, const Candidate& b) {
        const double ra = rank(a);
        const double rb = rank(b);
        if (ra != rb) return ra > rb;
        if (a.group.is_pair() != b.group.is_pair()) {
            return singles_first ? !a.group.is_pair() : a.group.is_pair();
        }
        if (a.group.first != b.group.first) return a.group.first < b.group.first;
        return a.group.second.value_or(0) < b.group.second.value_or(0);
    });

    std::vector<Candidate> path;
    std::vector<bool> open(p, true);
    std::size_t n_open = p;
    for (const Candidate& c : candidates) {
        if (n_open == 0) break;
        const bool accept = open[c.group.first] && (!c.group.second || open[*c.group.second]);
        if (!accept) continue;
        open[c.group.first] = false;
        --n_open;
        if (c.group.second) {
            open[*c.group.second] = false;
            --n_open;
        }
        path.push_back(c);
    }
    return path;
}

Explanation sequential_explain(const ModelPtr& model, const Dataset& background,
                               const Observation& observation, const ExplainConfig& config) {
    check_config(config);
    ContributionKernel kernel(model, background, observation, config.kernel());
    const InteractionMatrix matrix = kernel.interaction_matrix();
    const std::vector<Candidate> path = build_path(matrix, config);

    std::vector<FeatureGroup> groups;
    groups.reserve(path.size());
    for (const Candidate& c : path) groups.push_back(c.group);
    const std::vector<double> attributions = path_attributions(kernel, groups);

    std::vector<ExplanationStep> steps;
    steps.reserve(path.size());
    for (std::size_t k = 0; k < path.size(); ++k) {
        steps.push_back({path[k].group, path[k].order_score, attributions[k]});
    }
    return Explanation(kernel.baseline(), kernel.prediction(), std::move(steps),
                       background.schema().names, make_meta(kernel, config));
}

Explanation explain_with_order(const ModelPtr& model, const Dataset& background,
                               const Observation& observation, const FeatureOrder& order,
                               const ExplainConfig& config) {
    check_config(config);
    ContributionKernel kernel(model, background, observation, config.kernel());
    return explain_with_order_impl(kernel, order, config);
}

UncertaintyReport uncertainty_profile(const ModelPtr& model, const Dataset& background,
                                      const Observation& observation, std::size_t K,
                                      std::uint64_t seed, const ExplainConfig& config) {
    check_config(config);
    if (K == 0) throw ValidationError("uncertainty profile requires K >= 1");
    ExplainConfig cfg = config;
    cfg.seed = seed;
    ContributionKernel kernel(model, background, observation, cfg.kernel());
    const auto orders = draw_orders(kernel.n_features(), K, seed);
    return report_from_orders(kernel, orders, seed, cfg);
}

UncertaintyReport uncertainty_profile_with_orders(const ModelPtr& model, const Dataset& background,
                                                  const Observation& observation,
                                                  std::span<const FeatureOrder> orders,
                                                  const ExplainConfig& config) {
    check_config(config);
    ContributionKernel kernel(model, background, observation, config.kernel());
    return report_from_orders(kernel, orders, config.seed, config);
}

std::vector<double> shapley_estimate(const ModelPtr& model, const Dataset& background,
                                     const Observation& observation, bool exhaustive,
                                     std::size_t K, std::uint64_t seed,
                                     const ExplainConfig& config) {
    check_config(config);
    ExplainConfig cfg = config;
    cfg.seed = seed;
    ContributionKernel kernel(model, background, observation, cfg.kernel());
    const std::size_t p = kernel.n_features();

    std::vector<FeatureOrder> orders;
    if (exhaustive) {
        if (p > 8) {
            throw ValidationError("exhaustive Shapley values are limited to p <= 8 features (p! orders)");
        }
        FeatureOrder order(p);
        for (std::size_t i = 0; i < p; ++i) order[i] = i;
        do {
            orders.push_back(order);
        } while (std::next_permutation(order.begin(), order.end()));
    } else {
        if (K == 0) throw ValidationError("sampled Shapley values require K >= 1");
        orders = draw_orders(p, K, seed);
    }

    std::vector<std::vector<double>> samples;
    collect_order_samples(kernel, orders, samples, cfg.workers);
    std::vector<double> values(p);
    for (std::size_t f = 0; f < p; ++f) {
        double sum = 0.0;
        for (double v : samples[f]) sum += v;
        values[f] = sum / static_cast<double>(orders.size());
    }
    return values;
}

} // namespace ibd
