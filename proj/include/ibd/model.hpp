#pragma once

#include "ibd/types.hpp"

#include <functional>
#include <memory>
#include <span>
#include <string>

namespace ibd {

// A black-box scorer. Scoring must be deterministic (same batch, same
// scores, bitwise) and safe to call concurrently; the engine never mutates
// a model after construction.
class Model {
public:
    virtual ~Model() = default;

    // Scores `rows.n_rows` rows into `out` (same length). Categorical cells
    // arrive as interned level ids.
    virtual void score(const Table& rows, std::span<double> out) const = 0;

    virtual std::string family() const = 0;
    // Human-readable identity recorded in explanation metadata.
    virtual std::string name() const { return family(); }
    // Training-time schema when the model is bound to one, else nullptr.
    virtual const Schema* schema() const { return nullptr; }

    std::vector<double> score(const Table& rows) const {
        std::vector<double> out(rows.n_rows);
        score(rows, out);
        return out;
    }
    double score_one(const std::vector<double>& values) const;
};

using ModelPtr = std::shared_ptr<const Model>;

// Wraps an arbitrary row function as a model; the workhorse for analytic
// fixtures and for embedding user code through the C++ API.
class FunctionModel final : public Model {
public:
    using RowFn = std::function<double(std::span<const double>)>;

    FunctionModel(std::string name, RowFn fn)
        : name_(std::move(name)), fn_(std::move(fn)) {}

    void score(const Table& rows, std::span<double> out) const override;
    std::string family() const override { return "function"; }
    std::string name() const override { return name_; }

private:
    std::string name_;
    RowFn fn_;
};

} // namespace ibd
