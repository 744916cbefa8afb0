#pragma once

#include "ibd/types.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace ibd {

struct LoadedTask {
    Dataset dataset;
    std::vector<double> targets; // 0/1
    std::string positive_label;
};

// Reads a comma-separated UTF-8 file with a header row. Columns that parse
// fully as decimals become numeric, everything else categorical. The target
// column is removed from the features and mapped to {0,1} via the positive
// label (default: the lexicographically larger of the two observed labels).
// Missing tokens ("" or "NA"), unknown targets and non-binary targets are
// rejected. Quoted fields are not supported.
LoadedTask load_csv(const std::string& path, const std::string& target,
                    const std::string& positive_label = "");

// Parses CSV text that is already in memory (same dialect, no target).
Dataset dataset_from_csv(const std::string& text);

struct TrainTestSplit {
    Dataset train;
    std::vector<double> train_targets;
    Dataset test;
    std::vector<double> test_targets;
    std::vector<std::size_t> train_rows; // original row ids, ascending
    std::vector<std::size_t> test_rows;
};

// Seeded uniform row partition. Train size = max(1, floor(fraction * n));
// the remainder is test. Row order within each part follows the original
// dataset.
TrainTestSplit split(const Dataset& data, std::span<const double> targets, double fraction,
                     std::uint64_t seed);

struct ObservationSample {
    std::vector<Observation> observations;
    std::vector<std::size_t> rows;
    bool with_replacement = false; // set when count exceeds the row count
};

// Seeded sample of rows as observations, without replacement while
// count <= n, with replacement (and flagged) otherwise.
ObservationSample sample_observations(const Dataset& data, std::size_t count, std::uint64_t seed);

struct SynthData {
    Dataset dataset;
    std::vector<double> targets;
};

// Built-in generators for property tests and the desk-scale benchmark:
//   grid4         the fixed 4-row fixture {(0,0),(0,1),(1,0),(1,1)},
//                 parity targets (n and seed ignored)
//   xor           two uniform binary features, target x1 XOR x2
//   additive      four uniform features, target 2*x1 - 3*x2 + x3^2 + sin(pi*x4)
//   product-noise two uniform features, target x1*x2 + N(0, 0.1) noise
SynthData synth(const std::string& name, std::size_t n, std::uint64_t seed);

} // namespace ibd
