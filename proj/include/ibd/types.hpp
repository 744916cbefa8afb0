#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ibd {

enum class FeatureKind : std::uint8_t { Numeric, Categorical };

// Column-typed schema of a tabular dataset. Categorical cells are interned
// to level ids (index into `levels[feature]`, sorted lexicographically so
// the interning is stable across reloads of the same data).
struct Schema {
    std::vector<std::string> names;
    std::vector<FeatureKind> kinds;
    std::vector<std::vector<std::string>> levels; // empty vector for numeric features

    std::size_t n_features() const { return names.size(); }
    bool operator==(const Schema&) const = default;

    // Index of a feature by name, or nullopt.
    std::optional<std::size_t> find(const std::string& name) const;
    // Level id of `label` within categorical feature `f`, or nullopt.
    std::optional<std::size_t> find_level(std::size_t f, const std::string& label) const;
};

// Untyped cell grid straight out of the ingestion layer (CSV, generators).
struct RawTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

// Plain column-major numeric matrix handed to model scorers. Categorical
// cells hold interned level ids stored as doubles.
struct Table {
    std::vector<std::vector<double>> columns;
    std::size_t n_rows = 0;

    std::size_t n_cols() const { return columns.size(); }
    double at(std::size_t row, std::size_t col) const { return columns[col][row]; }
};

// Immutable validated dataset: the background data over which conditional
// expectations are estimated. No missing values anywhere by construction.
class Dataset {
public:
    Dataset(Schema schema, std::vector<std::vector<double>> columns);

    const Schema& schema() const { return schema_; }
    std::size_t n_rows() const { return n_rows_; }
    std::size_t n_features() const { return schema_.n_features(); }
    const std::vector<std::vector<double>>& columns() const { return columns_; }
    const std::vector<double>& column(std::size_t f) const { return columns_[f]; }
    double cell(std::size_t row, std::size_t f) const { return columns_[f][row]; }

    // Copy of the underlying matrix (used as scoring scratch).
    Table table() const;
    // Single row extracted as observation values.
    std::vector<double> row(std::size_t r) const;
    // New dataset restricted to the given row indices, in the given order.
    Dataset take_rows(std::span<const std::size_t> indices) const;

private:
    Schema schema_;
    std::vector<std::vector<double>> columns_;
    std::size_t n_rows_ = 0;
};

// The instance being explained. Values conform to the dataset schema:
// numeric slots hold finite reals, categorical slots hold valid level ids.
struct Observation {
    std::vector<double> values;

    std::size_t n_features() const { return values.size(); }
};

// Checks invariants (unique non-empty names, equal column lengths, no
// missing cells), infers per-column kinds (a column is numeric iff every
// cell parses as a decimal) and interns categorical levels.
// Throws ValidationError with a message naming the offending column/cell.
Dataset validate_dataset(const RawTable& raw);

// Builds a Dataset directly from numeric columns (test fixtures, generators).
Dataset make_numeric_dataset(std::vector<std::string> names,
                             std::vector<std::vector<double>> columns);

// Kind-checks raw string tokens against the schema and interns them.
// Errors: arity mismatch, unseen categorical level, non-numeric token in a
// numeric slot.
Observation bind_observation(const Dataset& dataset, const std::vector<std::string>& tokens);

// Same check for already-numeric values (level ids for categorical slots).
Observation bind_observation(const Dataset& dataset, std::vector<double> values);

// Strict full-string decimal parse; rejects empty strings and trailing junk.
std::optional<double> parse_decimal(const std::string& token);

} // namespace ibd
