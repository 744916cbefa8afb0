#pragma once

#include "ibd/explanation.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace ibd {

// One benchmark task: a CSV file (path + target) or a bundled generator.
struct BenchTask {
    std::string name;
    std::string path;           // CSV tasks
    std::string target;
    std::string positive_label;
    std::string generator;      // generator tasks
    std::size_t n = 600;        // generator rows
    double split_fraction = 0.7;
    std::size_t n_obs = 50;
    std::uint64_t seed = 0;
};

// Manifest file: JSON array of task objects with the fields above
// ("path"/"target"/"positive_label" or "generator"/"n", plus "name",
// "n_obs", "seed", optional "split_fraction").
std::vector<BenchTask> load_manifest(const std::string& path);

// The bundled synthetic suite run when no manifest is given.
std::vector<BenchTask> builtin_suite();

struct FamilyResult {
    std::string family;                   // rf, gbm1, gbm2, gbm3
    std::array<std::size_t, 5> buckets{}; // explanations with 0,1,2,3,4+ pair steps
    std::size_t n_explained = 0;
    double auc = 0.0;
    double train_seconds = 0.0;
    double explain_seconds = 0.0;
    bool failed = false;
    std::string error;
};

struct TaskResult {
    std::string task;
    std::vector<FamilyResult> families;
    bool failed = false;
    std::string error;
};

struct BenchResult {
    std::vector<TaskResult> tasks;
};

struct BenchConfig {
    std::size_t gbm_trees = 200;
    double gbm_rate = 0.1;
    std::size_t rf_trees = 100;
    int rf_depth = 4;
    std::size_t row_cap = 1000;
    std::size_t workers = 1;
};

// Number of pair steps in the explanation path.
std::size_t count_interactions(const Explanation& explanation);

// Midrank AUC of raw scores against 0/1 labels. Rank based, so the
// uncalibrated squared-loss scores are fine. NaN when one class is absent.
double rank_auc(std::span<const double> scores, std::span<const double> labels);

// For each task: split, train the model matrix (random forest and boosted
// trees of depth 1..3), score AUC on the test rows, then explain n_obs test
// observations against the train-split background and bucket the
// interaction counts. Task or family failures are recorded, not fatal.
BenchResult run_benchmark(const std::vector<BenchTask>& tasks, const BenchConfig& config = {});

// Fixed-width text table; bucket counts are space-joined within one cell.
std::string render_bucket_table(const BenchResult& result);

// Machine-readable form of the same table.
std::string bench_csv(const BenchResult& result);

} // namespace ibd
