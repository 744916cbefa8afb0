#include "ibd/data_io.hpp"

#include "ibd/errors.hpp"
#include "ibd/random.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace ibd {

namespace {

constexpr std::uint64_t kSplitStream = 0x53504c54;
constexpr std::uint64_t kSampleStream = 0x534d504c;

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

RawTable parse_csv(std::istream& in) {
    RawTable raw;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() && in.peek() == std::char_traits<char>::eof()) break;
        if (first) {
            raw.header = split_line(line);
            first = false;
        } else {
            raw.rows.push_back(split_line(line));
        }
    }
    if (first) throw ValidationError("file is empty, expected a header row");
    return raw;
}

} // namespace

Dataset dataset_from_csv(const std::string& text) {
    std::istringstream in(text);
    return validate_dataset(parse_csv(in));
}

LoadedTask load_csv(const std::string& path, const std::string& target,
                    const std::string& positive_label) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open data file '" + path + "'");
    RawTable raw = parse_csv(in);

    std::size_t target_col = raw.header.size();
    for (std::size_t f = 0; f < raw.header.size(); ++f) {
        if (raw.header[f] == target) target_col = f;
    }
    if (target_col == raw.header.size()) {
        throw ValidationError("target column '" + target + "' not found");
    }

    std::set<std::string> labels;
    std::vector<std::string> target_cells;
    target_cells.reserve(raw.rows.size());
    for (std::size_t r = 0; r < raw.rows.size(); ++r) {
        if (raw.rows[r].size() != raw.header.size()) {
            throw ValidationError("row " + std::to_string(r) + " has " +
                                  std::to_string(raw.rows[r].size()) + " cells, expected " +
                                  std::to_string(raw.header.size()));
        }
        const std::string& cell = raw.rows[r][target_col];
        if (cell.empty() || cell == "NA") {
            throw ValidationError("missing value in target column at row " + std::to_string(r));
        }
        labels.insert(cell);
        target_cells.push_back(cell);
    }
    if (labels.size() != 2) {
        throw ValidationError("non-binary target: found " + std::to_string(labels.size()) +
                              " distinct labels, expected 2");
    }
    std::string positive = positive_label;
    if (positive.empty()) {
        positive = *labels.rbegin();
    } else if (!labels.count(positive)) {
        throw ValidationError("positive label '" + positive + "' does not occur in the target");
    }

    RawTable features;
    for (std::size_t f = 0; f < raw.header.size(); ++f) {
        if (f != target_col) features.header.push_back(raw.header[f]);
    }
    features.rows.reserve(raw.rows.size());
    for (auto& row : raw.rows) {
        std::vector<std::string> cells;
        cells.reserve(row.size() - 1);
        for (std::size_t f = 0; f < row.size(); ++f) {
            if (f != target_col) cells.push_back(std::move(row[f]));
        }
        features.rows.push_back(std::move(cells));
    }

    std::vector<double> targets;
    targets.reserve(target_cells.size());
    for (const std::string& cell : target_cells) {
        targets.push_back(cell == positive ? 1.0 : 0.0);
    }
    return LoadedTask{validate_dataset(features), std::move(targets), std::move(positive)};
}

TrainTestSplit split(const Dataset& data, std::span<const double> targets, double fraction,
                     std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction < 1.0)) {
        throw ValidationError("split fraction must lie in (0, 1)");
    }
    if (targets.size() != data.n_rows()) {
        throw ValidationError("targets length does not match the number of rows");
    }
    const std::size_t n = data.n_rows();
    const auto train_size = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n))));

    rng::Engine gen(rng::derive_seed(seed, kSplitStream));
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    rng::shuffle(order, gen);

    std::vector<std::size_t> train_rows(order.begin(), order.begin() + train_size);
    std::vector<std::size_t> test_rows(order.begin() + train_size, order.end());
    std::sort(train_rows.begin(), train_rows.end());
    std::sort(test_rows.begin(), test_rows.end());

    auto gather = [&](const std::vector<std::size_t>& rows) {
        std::vector<double> out;
        out.reserve(rows.size());
        for (std::size_t r : rows) out.push_back(targets[r]);
        return out;
    };

    // An empty test part (tiny n with a large fraction) keeps a placeholder
    // row so Dataset invariants hold; its row list stays empty.
    Dataset test_data = test_rows.empty() ? data.take_rows(std::vector<std::size_t>{0})
                                          : data.take_rows(test_rows);
    std::vector<double> test_targets = test_rows.empty() ? std::vector<double>{} : gather(test_rows);
    return TrainTestSplit{data.take_rows(train_rows), gather(train_rows), std::move(test_data),
                          std::move(test_targets), std::move(train_rows), std::move(test_rows)};
}

ObservationSample sample_observations(const Dataset& data, std::size_t count, std::uint64_t seed) {
    if (count == 0) throw ValidationError("observation sample count must be >= 1");
    rng::Engine gen(rng::derive_seed(seed, kSampleStream));

    ObservationSample out;
    const std::size_t n = data.n_rows();
    if (count <= n) {
        out.rows = rng::sample_without_replacement(n, count, gen);
    } else {
        out.with_replacement = true;
        out.rows.reserve(count);
        for (std::size_t i = 0; i < count; ++i) {
            out.rows.push_back(static_cast<std::size_t>(rng::below(gen, n)));
        }
    }
    out.observations.reserve(out.rows.size());
    for (std::size_t r : out.rows) out.observations.push_back(Observation{data.row(r)});
    return out;
}

SynthData synth(const std::string& name, std::size_t n, std::uint64_t seed) {
    if (name == "grid4") {
        Dataset data = make_numeric_dataset({"x1", "x2"}, {{0, 0, 1, 1}, {0, 1, 0, 1}});
        return SynthData{std::move(data), {0, 1, 1, 0}};
    }
    if (n == 0) throw ValidationError("generator '" + name + "' requires n >= 1");
    rng::Engine gen(rng::derive_seed(seed, 0));

    if (name == "xor") {
        std::vector<std::vector<double>> cols(2, std::vector<double>(n));
        std::vector<double> targets(n);
        for (std::size_t r = 0; r < n; ++r) {
            const double a = static_cast<double>(rng::below(gen, 2));
            const double b = static_cast<double>(rng::below(gen, 2));
            cols[0][r] = a;
            cols[1][r] = b;
            targets[r] = a != b ? 1.0 : 0.0;
        }
        return SynthData{make_numeric_dataset({"x1", "x2"}, std::move(cols)), std::move(targets)};
    }
    if (name == "additive") {
        std::vector<std::vector<double>> cols(4, std::vector<double>(n));
        std::vector<double> targets(n);
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t f = 0; f < 4; ++f) cols[f][r] = rng::unit(gen);
            targets[r] = 2.0 * cols[0][r] - 3.0 * cols[1][r] + cols[2][r] * cols[2][r] +
                         std::sin(std::numbers::pi * cols[3][r]);
        }
        return SynthData{make_numeric_dataset({"x1", "x2", "x3", "x4"}, std::move(cols)),
                         std::move(targets)};
    }
    if (name == "product-noise") {
        std::vector<std::vector<double>> cols(2, std::vector<double>(n));
        std::vector<double> targets(n);
        for (std::size_t r = 0; r < n; ++r) {
            cols[0][r] = rng::unit(gen);
            cols[1][r] = rng::unit(gen);
            targets[r] = cols[0][r] * cols[1][r] + rng::normal(gen, 0.0, 0.1);
        }
        return SynthData{make_numeric_dataset({"x1", "x2"}, std::move(cols)), std::move(targets)};
    }
    throw ValidationError("unknown generator '" + name +
                          "'; expected grid4, xor, additive or product-noise");
}

} // namespace ibd
