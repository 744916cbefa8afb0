#include "ibd/kernel.hpp"

#include "ibd/errors.hpp"
#include "ibd/models/tree.hpp"
#include "ibd/random.hpp"
#include "fixtures.hpp"
#include "oracle.hpp"

#include <doctest.h>

#include <cmath>

using namespace ibd;

namespace {

ContributionKernel grid_kernel(const ModelPtr& model) {
    const Dataset data = fixtures::grid4();
    return ContributionKernel(model, data, fixtures::ones(data));
}

oracle::RowFn as_row_fn(const ModelPtr& model) {
    return [model](const std::vector<double>& row) { return model->score_one(row); };
}

} // namespace

TEST_CASE("baseline is the mean model response") {
    const Dataset data = fixtures::grid4();
    CHECK(baseline(fixtures::const_model(7.0), data) == 7.0);

    // Frozen from the enumeration oracle: mean of f over the 4 grid rows.
    const auto rows = oracle::rows_of(data);
    CHECK(oracle::expectation(as_row_fn(fixtures::prod_model()), rows, {1, 1}, {}) == 0.25);
    CHECK(oracle::expectation(as_row_fn(fixtures::add_model()), rows, {1, 1}, {}) == 1.0);
    CHECK(baseline(fixtures::prod_model(), data) == 0.25);
    CHECK(baseline(fixtures::add_model(), data) == 1.0);
}

TEST_CASE("group expectations replace fixed columns") {
    const auto kernel = grid_kernel(fixtures::prod_model());
    const auto rows = oracle::rows_of(fixtures::grid4());
    const auto f = as_row_fn(fixtures::prod_model());

    CHECK(kernel.group_expectation(std::vector<std::size_t>{}) == 0.25); // empty set = baseline
    CHECK(oracle::expectation(f, rows, {1, 1}, {0}) == 0.5);
    CHECK(kernel.group_expectation(std::vector<std::size_t>{0}) == 0.5);
    CHECK(kernel.group_expectation(std::vector<std::size_t>{0, 1}) == 1.0); // = f(x*)
}

TEST_CASE("full-set expectation equals the prediction exactly") {
    // Values whose n-fold mean would round: the special-cased full set must
    // still reproduce f(x*) bitwise.
    const auto model = std::make_shared<FunctionModel>(
        "third", [](std::span<const double> x) { return x[0] + 0.1; });
    Dataset data = make_numeric_dataset({"a"}, {{0.3, 0.7, 0.9}});
    const Observation obs = bind_observation(data, std::vector<double>{0.3});
    ContributionKernel kernel(model, data, obs);
    CHECK(kernel.group_expectation(std::vector<std::size_t>{0}) == model->score_one({0.3}));
    CHECK(kernel.prediction() == 0.3 + 0.1);
}

TEST_CASE("single contributions on the grid fixtures") {
    CHECK(grid_kernel(fixtures::const_model(3.0)).single_contribution(0) == 0.0);
    CHECK(grid_kernel(fixtures::const_model(3.0)).single_contribution(1) == 0.0);

    // PROD: E[f|x1=1] = 0.5, baseline 0.25.
    CHECK(grid_kernel(fixtures::prod_model()).single_contribution(0) == 0.25);
    // ADD: E[f|x1=1] = 1.5, baseline 1.0.
    CHECK(grid_kernel(fixtures::add_model()).single_contribution(0) == 0.5);

    CHECK_THROWS_AS(grid_kernel(fixtures::prod_model()).single_contribution(5), ValidationError);
}

TEST_CASE("pair contributions and interaction parts") {
    const auto prod = grid_kernel(fixtures::prod_model());
    const PairContribution pc = prod.pair_contribution(0, 1);
    CHECK(pc.total == 0.75);
    CHECK(pc.interaction == 0.25);

    const auto add = grid_kernel(fixtures::add_model());
    CHECK(add.pair_contribution(0, 1).interaction == 0.0);

    const auto xor_k = grid_kernel(fixtures::xor_model());
    CHECK(xor_k.single_contribution(0) == 0.0);
    CHECK(xor_k.single_contribution(1) == 0.0);
    CHECK(xor_k.pair_contribution(0, 1).total == -0.5);
    CHECK(xor_k.pair_contribution(0, 1).interaction == -0.5);

    CHECK_THROWS_WITH_AS(prod.pair_contribution(1, 1), doctest::Contains("distinct"),
                         ValidationError);
}

TEST_CASE("pair contributions are bitwise symmetric") {
    rng::Engine gen(7);
    const auto model = std::make_shared<FunctionModel>(
        "messy", [](std::span<const double> x) {
            return std::sin(3.1 * x[0]) * x[1] + 0.37 * x[1] * x[2] - x[2] / (1.1 + x[0]);
        });
    std::vector<std::vector<double>> cols(3, std::vector<double>(17));
    for (auto& col : cols) {
        for (double& v : col) v = rng::unit(gen) * 3.0 - 1.0;
    }
    const Dataset data = make_numeric_dataset({"a", "b", "c"}, std::move(cols));
    const Observation obs = bind_observation(data, data.row(3));
    ContributionKernel kernel(model, data, obs);
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = i + 1; j < 3; ++j) {
            const PairContribution ij = kernel.pair_contribution(i, j);
            const PairContribution ji = kernel.pair_contribution(j, i);
            CHECK(ij.total == ji.total);
            CHECK(ij.interaction == ji.interaction);
        }
    }
}

TEST_CASE("conditional contributions reduce to the unconditional ones and compose") {
    const auto kernel = grid_kernel(fixtures::prod_model());
    const std::vector<std::size_t> empty;
    CHECK(kernel.conditional_contribution(FeatureGroup::single(0), empty) ==
          kernel.single_contribution(0));
    CHECK(kernel.conditional_contribution(FeatureGroup::pair(0, 1), empty) ==
          kernel.pair_contribution(0, 1).total);

    // PROD: fixing x2 after x1 moves the mean from 0.5 to 1.0.
    CHECK(kernel.conditional_contribution(FeatureGroup::single(1), std::vector<std::size_t>{0}) ==
          0.5);

    const auto xor_k = grid_kernel(fixtures::xor_model());
    CHECK(xor_k.conditional_contribution(FeatureGroup::single(1), std::vector<std::size_t>{0}) ==
          -0.5);

    CHECK_THROWS_WITH_AS(
        kernel.conditional_contribution(FeatureGroup::single(0), std::vector<std::size_t>{0}),
        doctest::Contains("disjoint"), ValidationError);
}

TEST_CASE("interaction matrix covers singles and all pairs") {
    const InteractionMatrix m = grid_kernel(fixtures::prod_model()).interaction_matrix();
    CHECK(m.n_features() == 2);
    CHECK(m.singles == std::vector<double>{0.25, 0.25});
    CHECK(m.interactions.at(0, 1) == 0.25);

    const InteractionMatrix add = grid_kernel(fixtures::add_model()).interaction_matrix();
    CHECK(add.interactions.at(0, 1) == 0.0);
}

TEST_CASE("interaction matrix handles p = 1") {
    const auto model = std::make_shared<FunctionModel>(
        "inc", [](std::span<const double> x) { return x[0] + 1.0; });
    const Dataset data = make_numeric_dataset({"a"}, {{0.0, 2.0}});
    ContributionKernel kernel(model, data, bind_observation(data, std::vector<double>{2.0}));
    const InteractionMatrix m = kernel.interaction_matrix();
    CHECK(m.singles.size() == 1);
    CHECK(m.singles[0] == 1.0); // E[f|x=2] = 3, baseline 2
    CHECK(m.interactions.n_pairs() == 0);
}

TEST_CASE("interaction matrix is identical at any worker count") {
    rng::Engine gen(12);
    std::vector<std::vector<double>> cols(5, std::vector<double>(40));
    for (auto& col : cols) {
        for (double& v : col) v = rng::unit(gen);
    }
    const Dataset data =
        make_numeric_dataset({"a", "b", "c", "d", "e"}, std::move(cols));
    const auto model = std::make_shared<FunctionModel>(
        "mix", [](std::span<const double> x) {
            return x[0] * x[1] + std::exp(x[2]) - x[3] * x[4] * x[0] + 0.5 * x[4];
        });
    const Observation obs = bind_observation(data, data.row(7));

    KernelOptions serial;
    KernelOptions parallel;
    parallel.workers = 4;
    const InteractionMatrix a =
        ContributionKernel(model, data, obs, serial).interaction_matrix();
    const InteractionMatrix b =
        ContributionKernel(model, data, obs, parallel).interaction_matrix();
    CHECK(a.singles == b.singles);
    for (std::size_t i = 0; i < 5; ++i) {
        for (std::size_t j = i + 1; j < 5; ++j) {
            CHECK(a.pair_totals.at(i, j) == b.pair_totals.at(i, j));
            CHECK(a.interactions.at(i, j) == b.interactions.at(i, j));
        }
    }
}

TEST_CASE("telescoping: ordered conditional contributions sum to the prediction gap") {
    rng::Engine gen(99);
    std::vector<std::vector<double>> cols(6, std::vector<double>(30));
    for (auto& col : cols) {
        for (double& v : col) v = rng::unit(gen) * 4.0 - 2.0;
    }
    const Dataset data =
        make_numeric_dataset({"a", "b", "c", "d", "e", "f"}, std::move(cols));
    const auto model = std::make_shared<FunctionModel>(
        "rough", [](std::span<const double> x) {
            return x[0] * x[1] * x[2] + std::abs(x[3]) - std::sin(x[4]) * x[5];
        });
    const Observation obs = bind_observation(data, data.row(11));
    ContributionKernel kernel(model, data, obs);

    for (std::uint64_t trial = 0; trial < 5; ++trial) {
        rng::Engine order_gen(trial);
        const auto perm = rng::permutation(6, order_gen);
        std::vector<std::size_t> history;
        double sum = 0.0;
        for (std::size_t f : perm) {
            sum += kernel.conditional_contribution(FeatureGroup::single(f), history);
            history.push_back(f);
        }
        const double gap = kernel.prediction() - kernel.baseline();
        CHECK(std::abs(sum - gap) <= 1e-10 * std::max(1.0, std::abs(gap)));
    }
}

TEST_CASE("additive models have zero interaction everywhere") {
    rng::Engine gen(5);
    std::vector<std::vector<double>> cols(4, std::vector<double>(60));
    for (auto& col : cols) {
        for (double& v : col) v = rng::unit(gen) * 10.0 - 5.0;
    }
    const Dataset data = make_numeric_dataset({"a", "b", "c", "d"}, std::move(cols));
    const auto model = std::make_shared<FunctionModel>(
        "separable", [](std::span<const double> x) {
            return 2.0 * x[0] + std::sin(x[1]) + x[2] * x[2] - std::exp(0.3 * x[3]);
        });
    const Observation obs = bind_observation(data, data.row(0));
    ContributionKernel kernel(model, data, obs);
    const InteractionMatrix m = kernel.interaction_matrix();
    const double tol = 1e-10 * std::max(1.0, std::abs(kernel.baseline()));
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = i + 1; j < 4; ++j) {
            CHECK(std::abs(m.interactions.at(i, j)) <= tol);
        }
    }
}

TEST_CASE("fixing a feature to the value it already has changes nothing") {
    const Dataset data = make_numeric_dataset({"a", "b"}, {{2.0, 2.0, 2.0}, {1.0, 4.0, 7.0}});
    const auto model = std::make_shared<FunctionModel>(
        "swirl", [](std::span<const double> x) { return x[0] * 100.0 + std::sqrt(x[1]); });
    const Observation obs = bind_observation(data, std::vector<double>{2.0, 4.0});
    ContributionKernel kernel(model, data, obs);
    // Column a is constant at the observation's value.
    CHECK(kernel.group_expectation(std::vector<std::size_t>{0}) ==
          kernel.group_expectation(std::vector<std::size_t>{}));
}

TEST_CASE("row cap subsamples the background deterministically") {
    rng::Engine gen(3);
    std::vector<std::vector<double>> cols(2, std::vector<double>(500));
    for (auto& col : cols) {
        for (double& v : col) v = rng::unit(gen);
    }
    const Dataset data = make_numeric_dataset({"a", "b"}, std::move(cols));
    const Observation obs = bind_observation(data, data.row(0));

    KernelOptions capped;
    capped.row_cap = 100;
    capped.seed = 42;
    ContributionKernel k1(fixtures::prod_model(), data, obs, capped);
    ContributionKernel k2(fixtures::prod_model(), data, obs, capped);
    CHECK(k1.background_rows() == 100);
    CHECK(k1.baseline() == k2.baseline());

    KernelOptions other = capped;
    other.seed = 43;
    ContributionKernel k3(fixtures::prod_model(), data, obs, other);
    CHECK(k3.baseline() != k1.baseline()); // different subsample
}

TEST_CASE("scoring failures carry batch context") {
    const auto model = std::make_shared<FunctionModel>(
        "boom", [](std::span<const double>) -> double { throw std::runtime_error("boom"); });
    const Dataset data = fixtures::grid4();
    ContributionKernel kernel(model, data, fixtures::ones(data));
    CHECK_THROWS_WITH_AS(kernel.baseline(), doctest::Contains("background rows"), ModelError);
}
