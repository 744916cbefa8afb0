#pragma once

#include "ibd/model.hpp"
#include "ibd/types.hpp"

#include <span>
#include <vector>

namespace ibd {

class LinearModel final : public Model {
public:
    LinearModel(double intercept, std::vector<double> weights, Schema schema);

    void score(const Table& rows, std::span<double> out) const override;
    std::string family() const override { return "linear"; }
    std::string name() const override;
    const Schema* schema() const override { return &schema_; }

    double intercept() const { return intercept_; }
    const std::vector<double>& weights() const { return weights_; }

private:
    double intercept_ = 0.0;
    std::vector<double> weights_;
    Schema schema_;
};

// Ordinary least squares with intercept. Numeric features only; a
// rank-deficient design matrix is rejected with a condition diagnostic.
ModelPtr train_linear(const Dataset& data, std::span<const double> targets);

} // namespace ibd
