#include "ibd/bench.hpp"

#include "ibd/data_io.hpp"
#include "ibd/errors.hpp"
#include "ibd/explainer.hpp"
#include "ibd/models/tree.hpp"
#include "ibd/random.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>
#include <tuple>

namespace ibd {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

// Tasks need 0/1 labels for AUC. Generator targets may be continuous; those
// are binarized at the strict median. Two-valued targets map the larger
// value to 1.
std::vector<double> binarize(const std::vector<double>& targets) {
    std::set<double> distinct(targets.begin(), targets.end());
    if (distinct.size() < 2) {
        throw ValidationError("task target is constant; cannot form a binary task");
    }
    std::vector<double> out;
    out.reserve(targets.size());
    if (distinct.size() == 2) {
        const double hi = *distinct.rbegin();
        for (double t : targets) out.push_back(t == hi ? 1.0 : 0.0);
        return out;
    }
    std::vector<double> sorted(targets);
    std::sort(sorted.begin(), sorted.end());
    const double median = sorted[sorted.size() / 2];
    for (double t : targets) out.push_back(t > median ? 1.0 : 0.0);
    return out;
}

LoadedTask materialize(const BenchTask& task) {
    if (!task.path.empty()) {
        LoadedTask loaded = load_csv(task.path, task.target, task.positive_label);
        loaded.targets = binarize(loaded.targets);
        return loaded;
    }
    if (task.generator.empty()) {
        throw ValidationError("task '" + task.name + "' needs a path or a generator");
    }
    SynthData data = synth(task.generator, task.n, task.seed);
    return LoadedTask{std::move(data.dataset), binarize(data.targets), "1"};
}

struct FamilySpec {
    std::string label;
    bool forest = false;
    int depth = 0;
};

const std::array<FamilySpec, 4> kFamilies = {{
    {"rf", true, 0},
    {"gbm1", false, 1},
    {"gbm2", false, 2},
    {"gbm3", false, 3},
}};

std::string fixed4(double v) {
    if (!std::isfinite(v)) return "n/a";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

std::string pad(const std::string& s, std::size_t width) {
    std::string out = s;
    if (out.size() < width) out.append(width - out.size(), ' ');
    return out;
}

std::string bucket_cell(const std::array<std::size_t, 5>& buckets) {
    std::string out;
    for (std::size_t b = 0; b < buckets.size(); ++b) {
        if (b > 0) out += ' ';
        out += std::to_string(buckets[b]);
    }
    return out;
}

} // namespace

std::size_t count_interactions(const Explanation& explanation) {
    std::size_t count = 0;
    for (const auto& step : explanation.steps()) {
        if (step.group.is_pair()) ++count;
    }
    return count;
}

double rank_auc(std::span<const double> scores, std::span<const double> labels) {
    if (scores.size() != labels.size() || scores.empty()) {
        throw ValidationError("rank_auc needs equally sized, non-empty scores and labels");
    }
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] < scores[b];
        return a < b;
    });

    // Midranks over tied score blocks.
    std::vector<double> rank(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double mid = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) rank[order[k]] = mid;
        i = j + 1;
    }

    double positive_rank_sum = 0.0;
    std::size_t n_pos = 0;
    for (std::size_t k = 0; k < n; ++k) {
        if (labels[k] == 1.0) {
            positive_rank_sum += rank[k];
            ++n_pos;
        }
    }
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) return std::numeric_limits<double>::quiet_NaN();
    return (positive_rank_sum - 0.5 * static_cast<double>(n_pos) * static_cast<double>(n_pos + 1)) /
           (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

std::vector<BenchTask> load_manifest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open manifest '" + path + "'");
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw FormatError(std::string("manifest is not valid JSON: ") + e.what());
    }
    if (!doc.is_array()) throw FormatError("manifest must be a JSON array of tasks");

    std::vector<BenchTask> tasks;
    for (const auto& item : doc) {
        BenchTask task;
        task.name = item.value("name", "");
        task.path = item.value("path", "");
        task.target = item.value("target", "");
        task.positive_label = item.value("positive_label", "");
        task.generator = item.value("generator", "");
        task.n = item.value("n", task.n);
        task.split_fraction = item.value("split_fraction", task.split_fraction);
        task.n_obs = item.value("n_obs", task.n_obs);
        task.seed = item.value("seed", task.seed);
        if (task.name.empty()) {
            task.name = !task.generator.empty() ? task.generator : task.path;
        }
        tasks.push_back(std::move(task));
    }
    if (tasks.empty()) throw ValidationError("manifest lists no tasks");
    return tasks;
}

std::vector<BenchTask> builtin_suite() {
    std::vector<BenchTask> tasks;
    for (const auto& [name, n, seed] :
         {std::tuple<const char*, std::size_t, std::uint64_t>{"xor", 600, 11},
          {"additive", 600, 12},
          {"product-noise", 600, 13}}) {
        BenchTask task;
        task.name = name;
        task.generator = name;
        task.n = n;
        task.seed = seed;
        tasks.push_back(std::move(task));
    }
    return tasks;
}

BenchResult run_benchmark(const std::vector<BenchTask>& tasks, const BenchConfig& config) {
    if (tasks.empty()) throw ValidationError("benchmark requires at least one task");

    BenchResult result;
    for (const BenchTask& task : tasks) {
        TaskResult task_result;
        task_result.task = task.name;
        try {
            const LoadedTask loaded = materialize(task);
            const TrainTestSplit parts =
                split(loaded.dataset, loaded.targets, task.split_fraction, task.seed);
            if (parts.test_rows.empty()) {
                throw ValidationError("task '" + task.name + "' has an empty test split");
            }
            const ObservationSample sample =
                sample_observations(parts.test, task.n_obs, rng::derive_seed(task.seed, 90));

            for (std::size_t fam = 0; fam < kFamilies.size(); ++fam) {
                const FamilySpec& spec = kFamilies[fam];
                FamilyResult fr;
                fr.family = spec.label;
                try {
                    const std::uint64_t model_seed = rng::derive_seed(task.seed, fam);
                    const auto train_start = Clock::now();
                    ModelPtr model;
                    if (spec.forest) {
                        model = train_random_forest(
                            parts.train, parts.train_targets,
                            ForestParams{config.rf_trees, config.rf_depth, model_seed});
                    } else {
                        model = train_gbm(
                            parts.train, parts.train_targets,
                            GbmParams{spec.depth, config.gbm_trees, config.gbm_rate, model_seed});
                    }
                    fr.train_seconds = seconds_since(train_start);

                    const std::vector<double> test_scores = model->score(parts.test.table());
                    fr.auc = rank_auc(test_scores, parts.test_targets);

                    ExplainConfig explain_config;
                    explain_config.row_cap = config.row_cap;
                    explain_config.seed = task.seed;
                    explain_config.workers = config.workers;

                    const auto explain_start = Clock::now();
                    for (const Observation& obs : sample.observations) {
                        const Explanation explanation =
                            sequential_explain(model, parts.train, obs, explain_config);
                        const std::size_t pairs = count_interactions(explanation);
                        fr.buckets[std::min<std::size_t>(pairs, 4)] += 1;
                        fr.n_explained += 1;
                    }
                    fr.explain_seconds = seconds_since(explain_start);
                } catch (const std::exception& e) {
                    fr.failed = true;
                    fr.error = e.what();
                }
                task_result.families.push_back(std::move(fr));
            }
        } catch (const std::exception& e) {
            task_result.failed = true;
            task_result.error = e.what();
        }
        result.tasks.push_back(std::move(task_result));
    }
    return result;
}

std::string render_bucket_table(const BenchResult& result) {
    if (result.tasks.empty()) throw ValidationError("no benchmark results to render");

    std::size_t task_width = 4;
    for (const auto& task : result.tasks) task_width = std::max(task_width, task.task.size());

    std::ostringstream os;
    os << pad("task", task_width) << "  " << pad("family", 6) << "  " << pad("auc", 6) << "  "
       << "0 1 2 3 4+\n";
    for (const auto& task : result.tasks) {
        if (task.failed) {
            os << pad(task.task, task_width) << "  FAILED: " << task.error << "\n";
            continue;
        }
        for (const auto& fr : task.families) {
            os << pad(task.task, task_width) << "  " << pad(fr.family, 6) << "  ";
            if (fr.failed) {
                os << "FAILED: " << fr.error << "\n";
                continue;
            }
            os << pad(fixed4(fr.auc), 6) << "  " << bucket_cell(fr.buckets) << "\n";
        }
    }
    return os.str();
}

std::string bench_csv(const BenchResult& result) {
    if (result.tasks.empty()) throw ValidationError("no benchmark results to render");
    std::ostringstream os;
    os << "task,family,auc,bucket0,bucket1,bucket2,bucket3,bucket4plus,n_explained,status\n";
    for (const auto& task : result.tasks) {
        if (task.failed) {
            os << task.task << ",,,,,,,,," << "failed\n";
            continue;
        }
        for (const auto& fr : task.families) {
            os << task.task << ',' << fr.family << ',';
            if (fr.failed) {
                os << ",,,,,," << fr.n_explained << ",failed\n";
                continue;
            }
            os << fixed4(fr.auc);
            for (std::size_t b = 0; b < fr.buckets.size(); ++b) os << ',' << fr.buckets[b];
            os << ',' << fr.n_explained << ",ok\n";
        }
    }
    return os.str();
}

} // namespace ibd
