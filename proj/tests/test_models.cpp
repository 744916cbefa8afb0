#include "ibd/models/tree.hpp"

#include "ibd/data_io.hpp"
#include "ibd/errors.hpp"
#include "ibd/kernel.hpp"
#include "ibd/models/external.hpp"
#include "ibd/models/linear.hpp"
#include "ibd/models/store.hpp"
#include "ibd/random.hpp"
#include "fixtures.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

using namespace ibd;

namespace {

double mse(const ModelPtr& model, const Dataset& data, std::span<const double> targets) {
    const auto scores = model->score(data.table());
    double sum = 0.0;
    for (std::size_t r = 0; r < scores.size(); ++r) {
        const double d = scores[r] - targets[r];
        sum += d * d;
    }
    return sum / static_cast<double>(scores.size());
}

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

} // namespace

TEST_CASE("least squares recovers exactly linear data") {
    const Dataset data = fixtures::grid4();
    const std::vector<double> targets = {0.0, 1.0, 1.0, 2.0}; // x1 + x2
    const ModelPtr model = train_linear(data, targets);
    const auto* linear = dynamic_cast<const LinearModel*>(model.get());
    REQUIRE(linear != nullptr);
    CHECK(std::abs(linear->intercept()) < 1e-12);
    CHECK(std::abs(linear->weights()[0] - 1.0) < 1e-12);
    CHECK(std::abs(linear->weights()[1] - 1.0) < 1e-12);
    CHECK(std::abs(model->score_one({1.0, 1.0}) - 2.0) < 1e-12);
}

TEST_CASE("least squares on constant targets yields the constant") {
    const Dataset data = fixtures::grid4();
    const std::vector<double> targets(4, 3.5);
    const ModelPtr model = train_linear(data, targets);
    const auto* linear = dynamic_cast<const LinearModel*>(model.get());
    CHECK(std::abs(linear->intercept() - 3.5) < 1e-12);
    CHECK(std::abs(linear->weights()[0]) < 1e-12);
}

TEST_CASE("least squares rejects rank-deficient designs with a diagnostic") {
    const Dataset data = make_numeric_dataset(
        {"a", "b"}, {{1.0, 2.0, 3.0, 4.0}, {1.0, 2.0, 3.0, 4.0}}); // duplicate columns
    const std::vector<double> targets = {1.0, 2.0, 3.0, 4.0};
    CHECK_THROWS_WITH_AS(train_linear(data, targets), doctest::Contains("singular"),
                         ValidationError);
}

TEST_CASE("least squares requires numeric features") {
    RawTable raw;
    raw.header = {"color", "x"};
    raw.rows = {{"r", "1"}, {"g", "2"}, {"b", "3"}};
    const Dataset data = validate_dataset(raw);
    CHECK_THROWS_AS(train_linear(data, std::vector<double>{1.0, 2.0, 3.0}), ValidationError);
}

TEST_CASE("depth-1 boosting yields an exactly additive model") {
    const SynthData task = synth("product-noise", 300, 17);
    GbmParams params;
    params.max_depth = 1;
    params.n_trees = 80;
    const ModelPtr model = train_gbm(task.dataset, task.targets, params);

    const Observation obs{task.dataset.row(5)};
    ContributionKernel kernel(model, task.dataset, obs);
    const InteractionMatrix m = kernel.interaction_matrix();
    const double tol = 1e-10 * std::max(1.0, std::abs(kernel.baseline()));
    CHECK(std::abs(m.interactions.at(0, 1)) <= tol);
}

TEST_CASE("depth-2 boosting learns parity well") {
    const SynthData task = synth("xor", 500, 23);
    const ModelPtr model = train_gbm(task.dataset, task.targets, GbmParams{2, 200, 0.1, 0});
    CHECK(mse(model, task.dataset, task.targets) <= 0.05);
}

TEST_CASE("one tree at full rate on constant targets predicts the constant") {
    const SynthData task = synth("xor", 50, 1);
    const std::vector<double> targets(50, 2.5);
    const ModelPtr model = train_gbm(task.dataset, targets, GbmParams{2, 1, 1.0, 0});
    for (double v : model->score(task.dataset.table())) CHECK(v == 2.5);
}

TEST_CASE("boosted prediction decomposes into init plus per-tree contributions") {
    const SynthData task = synth("additive", 120, 3);
    const ModelPtr model = train_gbm(task.dataset, task.targets, GbmParams{2, 25, 0.2, 0});
    const auto* ensemble = dynamic_cast<const TreeEnsemble*>(model.get());
    REQUIRE(ensemble != nullptr);

    const Table table = task.dataset.table();
    for (std::size_t r = 0; r < 5; ++r) {
        double acc = ensemble->init_score();
        for (const Tree& tree : ensemble->trees()) {
            acc += ensemble->learning_rate() * TreeEnsemble::eval_tree(tree, table, r);
        }
        CHECK(acc == model->score(table)[r]);
    }
}

TEST_CASE("gbm enforces its parameter domain") {
    const SynthData task = synth("xor", 60, 2);
    CHECK_THROWS_AS(train_gbm(task.dataset, task.targets, GbmParams{4, 10, 0.1, 0}),
                    ValidationError);
    CHECK_THROWS_AS(train_gbm(task.dataset, std::vector<double>{}, GbmParams{}), ValidationError);
    std::vector<double> bad(task.targets.begin(), task.targets.end());
    bad[3] = std::nan("");
    CHECK_THROWS_AS(train_gbm(task.dataset, bad, GbmParams{}), ValidationError);
}

TEST_CASE("random forest fits parity and is seed-reproducible") {
    const SynthData task = synth("xor", 500, 29);
    const ForestParams params{100, 4, 77};
    const ModelPtr a = train_random_forest(task.dataset, task.targets, params);
    CHECK(mse(a, task.dataset, task.targets) <= 0.1);

    const ModelPtr b = train_random_forest(task.dataset, task.targets, params);
    CHECK(a->score(task.dataset.table()) == b->score(task.dataset.table()));
    CHECK(model_to_json(a) == model_to_json(b));
}

TEST_CASE("random forest on constant targets predicts the constant") {
    const SynthData task = synth("additive", 80, 4);
    const std::vector<double> targets(80, -1.25);
    const ModelPtr model = train_random_forest(task.dataset, targets, ForestParams{20, 3, 5});
    for (double v : model->score(task.dataset.table())) CHECK(v == -1.25);
}

TEST_CASE("trees split categorical features by level membership") {
    RawTable raw;
    raw.header = {"color", "x"};
    for (int r = 0; r < 40; ++r) {
        const bool red = r % 2 == 0;
        raw.rows.push_back({red ? "red" : "blue", std::to_string(r % 4)});
    }
    const Dataset data = validate_dataset(raw);
    std::vector<double> targets(40);
    for (int r = 0; r < 40; ++r) targets[r] = r % 2 == 0 ? 1.0 : 0.0; // red -> 1

    const ModelPtr model = train_gbm(data, targets, GbmParams{1, 30, 0.3, 0});
    const Observation red = bind_observation(data, std::vector<std::string>{"red", "2"});
    const Observation blue = bind_observation(data, std::vector<std::string>{"blue", "2"});
    CHECK(std::abs(model->score_one(red.values) - 1.0) < 0.01);
    CHECK(std::abs(model->score_one(blue.values) - 0.0) < 0.01);
}

TEST_CASE("model files round-trip bitwise") {
    const SynthData task = synth("additive", 150, 9);
    const ModelPtr model = train_gbm(task.dataset, task.targets, GbmParams{3, 40, 0.1, 0});
    const std::string path = temp_path("ibd_roundtrip_model.json");
    save_model(model, path);
    const ModelPtr loaded = load_model(path);

    rng::Engine gen(15);
    Table batch;
    batch.n_rows = 100;
    batch.columns.assign(4, std::vector<double>(100));
    for (auto& col : batch.columns) {
        for (double& v : col) v = rng::unit(gen);
    }
    CHECK(model->score(batch) == loaded->score(batch));
    CHECK(loaded->name() == model->name());
    std::filesystem::remove(path);
}

TEST_CASE("linear model files round-trip bitwise") {
    const Dataset data = fixtures::grid4();
    const ModelPtr model = train_linear(data, std::vector<double>{0.1, 0.9, 1.2, 2.3});
    const std::string path = temp_path("ibd_roundtrip_linear.json");
    save_model(model, path);
    const ModelPtr loaded = load_model(path);
    CHECK(model->score(data.table()) == loaded->score(data.table()));
    std::filesystem::remove(path);
}

TEST_CASE("corrupted and unknown model files are rejected") {
    const std::string path = temp_path("ibd_corrupt_model.json");
    {
        std::FILE* f = std::fopen(path.c_str(), "w");
        std::fputs("{\"format\": \"ibd-model/1\", \"family\": \"gbm\"", f); // truncated
        std::fclose(f);
    }
    CHECK_THROWS_AS(load_model(path), FormatError);
    {
        std::FILE* f = std::fopen(path.c_str(), "w");
        std::fputs("{\"format\": \"ibd-model/99\", \"family\": \"gbm\"}", f);
        std::fclose(f);
    }
    CHECK_THROWS_WITH_AS(load_model(path), doctest::Contains("format version"), FormatError);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(load_model(path), ValidationError); // missing file
}

TEST_CASE("external and function models refuse to serialize") {
    const Dataset data = fixtures::grid4();
    const ModelPtr ext = external_model(ExternalModelConfig{"cat", 100, {}, {}}, data.schema());
    CHECK_THROWS_WITH_AS(model_to_json(ext), doctest::Contains("unsupported"), ModelError);
    CHECK_THROWS_AS(model_to_json(fixtures::prod_model()), ModelError);
}

TEST_CASE("external models exchange CSV for one score per row") {
    const Dataset data = fixtures::grid4();
    ExternalModelConfig config;
    config.command = "awk -F, 'NR>1{s=0; for(i=1;i<=NF;i++) s+=$i; print s}'";
    const ModelPtr model = external_model(config, data.schema());
    CHECK(model->score(data.table()) == std::vector<double>{0.0, 1.0, 1.0, 2.0});
}

TEST_CASE("external models pass categorical levels as their labels") {
    RawTable raw;
    raw.header = {"color", "x"};
    raw.rows = {{"red", "1"}, {"blue", "2"}};
    const Dataset data = validate_dataset(raw);
    ExternalModelConfig config;
    config.command = "awk -F, 'NR>1{print ($1 == \"red\") ? 10 : 20}'";
    const ModelPtr model = external_model(config, data.schema());
    CHECK(model->score(data.table()) == std::vector<double>{10.0, 20.0});
}

TEST_CASE("external model batches split at the configured size") {
    const Dataset data = fixtures::grid4();
    ExternalModelConfig config;
    // Echoes x1 + 2*x2; one child per 2-row chunk.
    config.command = "awk -F, 'NR>1{print $1 + 2*$2}'";
    config.batch_size = 2;
    const ModelPtr model = external_model(config, data.schema());
    CHECK(model->score(data.table()) == std::vector<double>{0.0, 2.0, 1.0, 3.0});
}

TEST_CASE("external model failures are distinguishable") {
    const Dataset data = fixtures::grid4();

    ExternalModelConfig shorty;
    shorty.command = "head -0";
    try {
        external_model(shorty, data.schema())->score(data.table());
        FAIL("expected short response error");
    } catch (const ExternalModelError& e) {
        CHECK(e.kind() == ExternalModelError::Kind::ShortResponse);
        CHECK(std::string(e.what()).find("short response") != std::string::npos);
    }

    ExternalModelConfig crash;
    crash.command = "sh -c 'echo doom >&2; exit 3'";
    try {
        external_model(crash, data.schema())->score(data.table());
        FAIL("expected process failure error");
    } catch (const ExternalModelError& e) {
        CHECK(e.kind() == ExternalModelError::Kind::ProcessFailure);
        CHECK(std::string(e.what()).find("doom") != std::string::npos);
    }

    ExternalModelConfig garbled;
    garbled.command = "awk -F, 'NR>1{print \"spam\"}'";
    try {
        external_model(garbled, data.schema())->score(data.table());
        FAIL("expected malformed response error");
    } catch (const ExternalModelError& e) {
        CHECK(e.kind() == ExternalModelError::Kind::MalformedResponse);
    }

    ExternalModelConfig slow;
    slow.command = "sleep 30";
    slow.startup_timeout = std::chrono::milliseconds(200);
    slow.response_timeout = std::chrono::milliseconds(200);
    try {
        external_model(slow, data.schema())->score(data.table());
        FAIL("expected timeout error");
    } catch (const ExternalModelError& e) {
        CHECK(e.kind() == ExternalModelError::Kind::Timeout);
    }
}
