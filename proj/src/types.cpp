#include "ibd/types.hpp"

#include "ibd/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <set>
#include <unordered_set>

namespace ibd {

std::optional<std::size_t> Schema::find(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == name) return i;
    }
    return std::nullopt;
}

std::optional<std::size_t> Schema::find_level(std::size_t f, const std::string& label) const {
    const auto& lv = levels[f];
    const auto it = std::lower_bound(lv.begin(), lv.end(), label);
    if (it != lv.end() && *it == label) return static_cast<std::size_t>(it - lv.begin());
    return std::nullopt;
}

Dataset::Dataset(Schema schema, std::vector<std::vector<double>> columns)
    : schema_(std::move(schema)), columns_(std::move(columns)) {
    if (columns_.empty() || columns_.size() != schema_.n_features()) {
        throw ValidationError("dataset must have at least one feature column matching the schema");
    }
    n_rows_ = columns_.front().size();
    if (n_rows_ == 0) throw ValidationError("dataset must have at least one row");
    for (std::size_t f = 0; f < columns_.size(); ++f) {
        if (columns_[f].size() != n_rows_) {
            throw ValidationError("column '" + schema_.names[f] + "' has " +
                                  std::to_string(columns_[f].size()) + " rows, expected " +
                                  std::to_string(n_rows_));
        }
        for (double v : columns_[f]) {
            if (!std::isfinite(v)) {
                throw ValidationError("missing value in column '" + schema_.names[f] + "'");
            }
        }
    }
}

Table Dataset::table() const {
    return Table{columns_, n_rows_};
}

std::vector<double> Dataset::row(std::size_t r) const {
    std::vector<double> out(n_features());
    for (std::size_t f = 0; f < n_features(); ++f) out[f] = columns_[f][r];
    return out;
}

Dataset Dataset::take_rows(std::span<const std::size_t> indices) const {
    std::vector<std::vector<double>> cols(n_features());
    for (std::size_t f = 0; f < n_features(); ++f) {
        cols[f].reserve(indices.size());
        for (std::size_t r : indices) cols[f].push_back(columns_[f][r]);
    }
    return Dataset(schema_, std::move(cols));
}

std::optional<double> parse_decimal(const std::string& token) {
    if (token.empty()) return std::nullopt;
    const char* begin = token.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end != begin + token.size()) return std::nullopt;
    if (!std::isfinite(v)) return std::nullopt;
    return v;
}

namespace {

bool is_missing_token(const std::string& token) {
    return token.empty() || token == "NA";
}

} // namespace

Dataset validate_dataset(const RawTable& raw) {
    const std::size_t p = raw.header.size();
    if (p == 0) throw ValidationError("table has no columns");
    if (raw.rows.empty()) throw ValidationError("table has no rows");

    std::unordered_set<std::string> seen;
    for (const auto& name : raw.header) {
        if (name.empty()) throw ValidationError("empty feature name in header");
        if (!seen.insert(name).second) {
            throw ValidationError("duplicate name '" + name + "' in header");
        }
    }

    const std::size_t n = raw.rows.size();
    for (std::size_t r = 0; r < n; ++r) {
        if (raw.rows[r].size() != p) {
            throw ValidationError("row " + std::to_string(r) + " has " +
                                  std::to_string(raw.rows[r].size()) + " cells, expected " +
                                  std::to_string(p));
        }
        for (std::size_t f = 0; f < p; ++f) {
            if (is_missing_token(raw.rows[r][f])) {
                throw ValidationError("missing value at row " + std::to_string(r) +
                                      ", column '" + raw.header[f] + "'");
            }
        }
    }

    Schema schema;
    schema.names = raw.header;
    schema.kinds.resize(p);
    schema.levels.resize(p);
    std::vector<std::vector<double>> columns(p, std::vector<double>(n));

    for (std::size_t f = 0; f < p; ++f) {
        // All-or-nothing numeric detection: one non-decimal token makes the
        // whole column categorical.
        bool numeric = true;
        for (std::size_t r = 0; r < n; ++r) {
            const auto v = parse_decimal(raw.rows[r][f]);
            if (!v) {
                numeric = false;
                break;
            }
            columns[f][r] = *v;
        }
        if (numeric) {
            schema.kinds[f] = FeatureKind::Numeric;
            continue;
        }
        schema.kinds[f] = FeatureKind::Categorical;
        std::set<std::string> level_set;
        for (std::size_t r = 0; r < n; ++r) level_set.insert(raw.rows[r][f]);
        schema.levels[f].assign(level_set.begin(), level_set.end());
        for (std::size_t r = 0; r < n; ++r) {
            columns[f][r] = static_cast<double>(*schema.find_level(f, raw.rows[r][f]));
        }
    }

    return Dataset(std::move(schema), std::move(columns));
}

Dataset make_numeric_dataset(std::vector<std::string> names,
                             std::vector<std::vector<double>> columns) {
    Schema schema;
    schema.kinds.assign(names.size(), FeatureKind::Numeric);
    schema.levels.resize(names.size());
    schema.names = std::move(names);
    return Dataset(std::move(schema), std::move(columns));
}

Observation bind_observation(const Dataset& dataset, const std::vector<std::string>& tokens) {
    const Schema& schema = dataset.schema();
    if (tokens.size() != schema.n_features()) {
        throw ValidationError("observation has " + std::to_string(tokens.size()) +
                              " values, schema expects " + std::to_string(schema.n_features()));
    }
    Observation obs;
    obs.values.resize(tokens.size());
    for (std::size_t f = 0; f < tokens.size(); ++f) {
        if (schema.kinds[f] == FeatureKind::Numeric) {
            const auto v = parse_decimal(tokens[f]);
            if (!v) {
                throw ValidationError("non-numeric token '" + tokens[f] +
                                      "' in numeric slot '" + schema.names[f] + "'");
            }
            obs.values[f] = *v;
        } else {
            const auto id = schema.find_level(f, tokens[f]);
            if (!id) {
                throw ValidationError("level '" + tokens[f] + "' of feature '" +
                                      schema.names[f] + "' does not occur in the data");
            }
            obs.values[f] = static_cast<double>(*id);
        }
    }
    return obs;
}

Observation bind_observation(const Dataset& dataset, std::vector<double> values) {
    const Schema& schema = dataset.schema();
    if (values.size() != schema.n_features()) {
        throw ValidationError("observation has " + std::to_string(values.size()) +
                              " values, schema expects " + std::to_string(schema.n_features()));
    }
    for (std::size_t f = 0; f < values.size(); ++f) {
        if (!std::isfinite(values[f])) {
            throw ValidationError("non-finite value in slot '" + schema.names[f] + "'");
        }
        if (schema.kinds[f] == FeatureKind::Categorical) {
            const double id = values[f];
            if (id != std::floor(id) || id < 0.0 ||
                id >= static_cast<double>(schema.levels[f].size())) {
                throw ValidationError("invalid level id for feature '" + schema.names[f] + "'");
            }
        }
    }
    return Observation{std::move(values)};
}

} // namespace ibd
