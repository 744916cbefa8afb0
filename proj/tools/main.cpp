// Command-line front end: train models, explain observations, quantify
// explanation uncertainty, run the benchmark harness.

#include "ibd/bench.hpp"
#include "ibd/data_io.hpp"
#include "ibd/errors.hpp"
#include "ibd/explainer.hpp"
#include "ibd/models/external.hpp"
#include "ibd/models/linear.hpp"
#include "ibd/models/store.hpp"
#include "ibd/models/tree.hpp"
#include "ibd/parallel.hpp"
#include "ibd/render.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace ibd;

struct DataFlags {
    std::string data_path;
    std::string target;
    std::string positive_label;
};

struct ExplainFlags {
    DataFlags data;
    std::string model_spec;
    std::string observation;
    std::string order;
    std::uint64_t seed = 0;
    std::size_t max_rows = 1000;
    double interaction_preference = 1.0;
    std::string out;
    std::string format = "json";
    std::size_t permutations = 100;
};

void add_data_flags(CLI::App* cmd, DataFlags& flags, bool target_required) {
    cmd->add_option("--data", flags.data_path, "CSV file with a header row")->required();
    auto* target = cmd->add_option("--target", flags.target,
                                   "target column (removed from the features)");
    if (target_required) target->required();
    cmd->add_option("--positive", flags.positive_label,
                    "positive class label (default: lexicographically larger)");
}

// The features-only dataset plus targets when a target column was named.
struct LoadedData {
    Dataset dataset;
    std::vector<double> targets;
};

LoadedData load_data(const DataFlags& flags) {
    if (!flags.target.empty()) {
        LoadedTask task = load_csv(flags.data_path, flags.target, flags.positive_label);
        return LoadedData{std::move(task.dataset), std::move(task.targets)};
    }
    std::ifstream in(flags.data_path, std::ios::binary);
    if (!in) throw ValidationError("--data: cannot open '" + flags.data_path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return LoadedData{dataset_from_csv(buffer.str()), {}};
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream ss(text);
    while (std::getline(ss, item, ',')) out.push_back(item);
    return out;
}

bool plain_integer(const std::string& text) {
    if (text.empty()) return false;
    for (char c : text) {
        if (c < '0' || c > '9') return false;
    }
    return true;
}

// Family specs look like "gbm", "rf:trees=50,depth=3", "linear".
struct FamilySpec {
    std::string family;
    std::size_t trees = 0;
    int depth = 0;
    double rate = 0.1;
};

std::optional<FamilySpec> parse_family_spec(const std::string& text) {
    const std::size_t colon = text.find(':');
    const std::string family = text.substr(0, colon);
    if (family != "gbm" && family != "rf" && family != "linear") return std::nullopt;

    FamilySpec spec;
    spec.family = family;
    spec.trees = family == "rf" ? 100 : 200;
    spec.depth = family == "rf" ? 4 : 2;
    if (colon == std::string::npos) return spec;
    for (const std::string& item : split_list(text.substr(colon + 1))) {
        const std::size_t eq = item.find('=');
        if (eq == std::string::npos) {
            throw ValidationError("--model: bad family option '" + item + "', expected key=value");
        }
        const std::string key = item.substr(0, eq);
        const std::string value = item.substr(eq + 1);
        const auto number = parse_decimal(value);
        if (!number) throw ValidationError("--model: option '" + key + "' needs a number");
        if (key == "trees") {
            spec.trees = static_cast<std::size_t>(*number);
        } else if (key == "depth") {
            spec.depth = static_cast<int>(*number);
        } else if (key == "rate") {
            spec.rate = *number;
        } else {
            throw ValidationError("--model: unknown family option '" + key + "'");
        }
    }
    return spec;
}

ModelPtr train_family(const FamilySpec& spec, const Dataset& data,
                      const std::vector<double>& targets, std::uint64_t seed) {
    if (targets.empty()) {
        throw ValidationError("--model: training a " + spec.family +
                              " model on the fly requires --target");
    }
    if (spec.family == "linear") return train_linear(data, targets);
    if (spec.family == "gbm") {
        return train_gbm(data, targets, GbmParams{spec.depth, spec.trees, spec.rate, seed});
    }
    return train_random_forest(data, targets, ForestParams{spec.trees, spec.depth, seed});
}

void check_schema_match(const Model& model, const Dataset& data) {
    const Schema* expected = model.schema();
    if (!expected) return;
    if (*expected == data.schema()) return;
    if (expected->names != data.schema().names) {
        throw ValidationError("--model: model was trained on different features than --data");
    }
    throw ValidationError(
        "--model: feature kinds or categorical levels differ between the model and --data");
}

ModelPtr resolve_model(const std::string& spec, const Dataset& data,
                       const std::vector<double>& targets, std::uint64_t seed) {
    if (spec.empty()) throw ValidationError("--model is required");
    if (spec.rfind("external:", 0) == 0) {
        ExternalModelConfig config;
        config.command = spec.substr(9);
        return external_model(config, data.schema());
    }
    if (const auto family = parse_family_spec(spec)) {
        return train_family(*family, data, targets, seed);
    }
    const ModelPtr model = load_model(spec);
    check_schema_match(*model, data);
    return model;
}

Observation resolve_observation(const std::string& text, const Dataset& data) {
    if (text.empty()) throw ValidationError("--observation is required");
    if (plain_integer(text)) {
        const std::size_t row = std::stoull(text);
        if (row >= data.n_rows()) {
            throw ValidationError("--observation: row " + text + " out of range, data has " +
                                  std::to_string(data.n_rows()) + " rows");
        }
        return Observation{data.row(row)};
    }
    return bind_observation(data, split_list(text));
}

FeatureOrder resolve_order(const std::string& text, const Dataset& data) {
    FeatureOrder order;
    for (const std::string& token : split_list(text)) {
        if (const auto index = data.schema().find(token)) {
            order.push_back(*index);
        } else if (plain_integer(token)) {
            order.push_back(std::stoull(token));
        } else {
            throw ValidationError("--order: unknown feature '" + token + "'");
        }
    }
    return order;
}

void write_output(const std::string& path, const std::string& content) {
    if (path.empty() || path == "-") {
        std::cout << content;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("--out: cannot open '" + path + "' for writing");
    out << content;
}

ExplainConfig make_config(const ExplainFlags& flags) {
    ExplainConfig config;
    config.interaction_preference = flags.interaction_preference;
    config.row_cap = flags.max_rows;
    config.seed = flags.seed;
    config.workers = default_workers();
    return config;
}

int cmd_explain(const ExplainFlags& flags) {
    const LoadedData loaded = load_data(flags.data);
    const ModelPtr model =
        resolve_model(flags.model_spec, loaded.dataset, loaded.targets, flags.seed);
    const Observation obs = resolve_observation(flags.observation, loaded.dataset);
    const ExplainConfig config = make_config(flags);

    const Explanation explanation =
        flags.order.empty()
            ? sequential_explain(model, loaded.dataset, obs, config)
            : explain_with_order(model, loaded.dataset, obs,
                                 resolve_order(flags.order, loaded.dataset), config);

    switch (parse_output_kind(flags.format)) {
        case OutputKind::Json: write_output(flags.out, explanation.to_json()); break;
        case OutputKind::Text: write_output(flags.out, explanation.to_text()); break;
        case OutputKind::Svg: write_output(flags.out, render_waterfall(explanation)); break;
    }
    return 0;
}

int cmd_uncertainty(const ExplainFlags& flags) {
    if (flags.permutations == 0) throw ValidationError("--permutations must be >= 1");
    const LoadedData loaded = load_data(flags.data);
    const ModelPtr model =
        resolve_model(flags.model_spec, loaded.dataset, loaded.targets, flags.seed);
    const Observation obs = resolve_observation(flags.observation, loaded.dataset);
    const ExplainConfig config = make_config(flags);

    const UncertaintyReport report = uncertainty_profile(model, loaded.dataset, obs,
                                                         flags.permutations, flags.seed, config);
    switch (parse_output_kind(flags.format)) {
        case OutputKind::Json: write_output(flags.out, report.to_json()); break;
        case OutputKind::Text: write_output(flags.out, report.to_text()); break;
        case OutputKind::Svg: write_output(flags.out, render_uncertainty(report)); break;
    }
    return 0;
}

struct TrainFlags {
    DataFlags data;
    std::string family = "gbm";
    int depth = 0;
    std::size_t trees = 0;
    double rate = 0.1;
    std::uint64_t seed = 0;
    std::string out;
};

int cmd_train(const TrainFlags& flags) {
    const LoadedData loaded = load_data(flags.data);
    FamilySpec spec;
    spec.family = flags.family;
    spec.depth = flags.depth > 0 ? flags.depth : (flags.family == "rf" ? 4 : 2);
    spec.rate = flags.rate;
    spec.trees = flags.trees > 0 ? flags.trees : (flags.family == "rf" ? 100 : 200);
    if (spec.family != "gbm" && spec.family != "rf" && spec.family != "linear") {
        throw ValidationError("--family: expected gbm, rf or linear");
    }
    const ModelPtr model = train_family(spec, loaded.dataset, loaded.targets, flags.seed);
    save_model(model, flags.out);
    std::cerr << "wrote " << model->name() << " to " << flags.out << "\n";
    return 0;
}

struct BenchFlags {
    std::string manifest;
    std::string out_dir = ".";
    BenchConfig config;
};

int cmd_benchmark(const BenchFlags& flags) {
    const std::vector<BenchTask> tasks =
        flags.manifest.empty() ? builtin_suite() : load_manifest(flags.manifest);

    BenchConfig config = flags.config;
    config.workers = default_workers();
    const BenchResult result = run_benchmark(tasks, config);

    std::filesystem::create_directories(flags.out_dir);
    const std::string table = render_bucket_table(result);
    write_output((std::filesystem::path(flags.out_dir) / "bench.txt").string(), table);
    write_output((std::filesystem::path(flags.out_dir) / "bench.csv").string(),
                 bench_csv(result));
    std::cout << table;
    for (const auto& task : result.tasks) {
        for (const auto& fr : task.families) {
            if (fr.failed) {
                std::cerr << "warning: task " << task.task << " family " << fr.family
                          << " failed: " << fr.error << "\n";
            }
        }
        if (task.failed) {
            std::cerr << "warning: task " << task.task << " failed: " << task.error << "\n";
        }
    }
    return 0;
}

void add_explain_flags(CLI::App* cmd, ExplainFlags& flags, bool with_order) {
    add_data_flags(cmd, flags.data, false);
    cmd->add_option("--model", flags.model_spec,
                    "model file, family spec (gbm[:k=v,...], rf[:k=v,...], linear) "
                    "or external:COMMAND")
        ->required();
    cmd->add_option("--observation", flags.observation,
                    "row index into --data, or an inline comma-separated row")
        ->required();
    if (with_order) {
        cmd->add_option("--order", flags.order,
                        "comma-separated feature order; switches to order-specified mode");
    }
    cmd->add_option("--seed", flags.seed, "seed for sampling (default 0)");
    cmd->add_option("--max-rows", flags.max_rows,
                    "background row cap, 0 = unlimited (default 1000)");
    cmd->add_option("--interaction-preference", flags.interaction_preference,
                    "divide pair scores by this before ranking (default 1)");
    cmd->add_option("--out", flags.out, "output file (default stdout)");
    cmd->add_option("--format", flags.format, "json, text or svg (default json)");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"instance-level attributions with local interactions for tabular black boxes"};
    app.require_subcommand(1);

    ExplainFlags explain_flags;
    CLI::App* explain_cmd =
        app.add_subcommand("explain", "explain one prediction (greedy path with interactions, "
                                      "or a fixed order via --order)");
    add_explain_flags(explain_cmd, explain_flags, true);

    ExplainFlags uncertainty_flags;
    CLI::App* uncertainty_cmd = app.add_subcommand(
        "uncertainty", "contribution distributions across sampled feature orders");
    add_explain_flags(uncertainty_cmd, uncertainty_flags, false);
    uncertainty_cmd->add_option("--permutations", uncertainty_flags.permutations,
                                "number of sampled orders (default 100)");

    TrainFlags train_flags;
    CLI::App* train_cmd = app.add_subcommand("train", "fit a built-in model and save it");
    add_data_flags(train_cmd, train_flags.data, true);
    train_cmd->add_option("--family", train_flags.family, "gbm, rf or linear (default gbm)");
    train_cmd->add_option("--depth", train_flags.depth, "tree depth (default 2 gbm / 4 rf)");
    train_cmd->add_option("--trees", train_flags.trees, "tree count (default 200 gbm / 100 rf)");
    train_cmd->add_option("--rate", train_flags.rate, "gbm learning rate (default 0.1)");
    train_cmd->add_option("--seed", train_flags.seed, "training seed (default 0)");
    train_cmd->add_option("--out", train_flags.out, "model file to write")->required();

    BenchFlags bench_flags;
    CLI::App* bench_cmd = app.add_subcommand(
        "benchmark", "train the model matrix per task and bucket interaction counts");
    bench_cmd->add_option("--manifest", bench_flags.manifest,
                          "JSON task manifest (default: bundled synthetic suite)");
    bench_cmd->add_option("--out-dir", bench_flags.out_dir,
                          "directory for bench.csv and bench.txt (default .)");
    bench_cmd->add_option("--gbm-trees", bench_flags.config.gbm_trees, "default 200");
    bench_cmd->add_option("--gbm-rate", bench_flags.config.gbm_rate, "default 0.1");
    bench_cmd->add_option("--rf-trees", bench_flags.config.rf_trees, "default 100");
    bench_cmd->add_option("--rf-depth", bench_flags.config.rf_depth, "default 4");
    bench_cmd->add_option("--max-rows", bench_flags.config.row_cap,
                          "background row cap per explanation (default 1000)");

    try {
        app.parse(argc, argv);
        if (explain_cmd->parsed()) return cmd_explain(explain_flags);
        if (uncertainty_cmd->parsed()) return cmd_uncertainty(uncertainty_flags);
        if (train_cmd->parsed()) return cmd_train(train_flags);
        if (bench_cmd->parsed()) return cmd_benchmark(bench_flags);
        return 2;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const ibd::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ibd::FormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ibd::ModelError& e) {
        std::cerr << "model error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 1;
    }
}
