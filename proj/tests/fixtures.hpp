#pragma once

// Shared analytic fixtures: the 4-row binary grid and the four toy scoring
// functions everything hand-derivable is checked against.

#include "ibd/data_io.hpp"
#include "ibd/model.hpp"
#include "ibd/types.hpp"

#include <memory>
#include <span>

namespace fixtures {

inline ibd::Dataset grid4() {
    return ibd::synth("grid4", 4, 0).dataset;
}

inline ibd::ModelPtr const_model(double c) {
    return std::make_shared<ibd::FunctionModel>("const",
                                                [c](std::span<const double>) { return c; });
}

// f = x1 * x2
inline ibd::ModelPtr prod_model() {
    return std::make_shared<ibd::FunctionModel>(
        "prod", [](std::span<const double> x) { return x[0] * x[1]; });
}

// f = x1 + x2
inline ibd::ModelPtr add_model() {
    return std::make_shared<ibd::FunctionModel>(
        "add", [](std::span<const double> x) { return x[0] + x[1]; });
}

// f = x1 + x2 - 2*x1*x2 (parity on binary inputs)
inline ibd::ModelPtr xor_model() {
    return std::make_shared<ibd::FunctionModel>(
        "xor", [](std::span<const double> x) { return x[0] + x[1] - 2.0 * x[0] * x[1]; });
}

inline ibd::Observation ones(const ibd::Dataset& data) {
    return ibd::bind_observation(data, std::vector<double>(data.n_features(), 1.0));
}

} // namespace fixtures
