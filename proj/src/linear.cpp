#include "ibd/models/linear.hpp"

#include "ibd/errors.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>

namespace ibd {

LinearModel::LinearModel(double intercept, std::vector<double> weights, Schema schema)
    : intercept_(intercept), weights_(std::move(weights)), schema_(std::move(schema)) {}

void LinearModel::score(const Table& rows, std::span<double> out) const {
    for (std::size_t r = 0; r < rows.n_rows; ++r) {
        double acc = intercept_;
        for (std::size_t f = 0; f < weights_.size(); ++f) {
            acc += weights_[f] * rows.columns[f][r];
        }
        out[r] = acc;
    }
}

std::string LinearModel::name() const {
    return "linear(p=" + std::to_string(weights_.size()) + ")";
}

ModelPtr train_linear(const Dataset& data, std::span<const double> targets) {
    if (targets.size() != data.n_rows()) {
        throw ValidationError("targets length does not match the number of rows");
    }
    for (std::size_t f = 0; f < data.n_features(); ++f) {
        if (data.schema().kinds[f] == FeatureKind::Categorical) {
            throw ValidationError("linear training requires numeric features; '" +
                                  data.schema().names[f] + "' is categorical");
        }
    }
    for (double t : targets) {
        if (!std::isfinite(t)) throw ValidationError("non-finite target value");
    }

    const auto n = static_cast<Eigen::Index>(data.n_rows());
    const auto p = static_cast<Eigen::Index>(data.n_features());
    Eigen::MatrixXd design(n, p + 1);
    design.col(0).setOnes();
    for (Eigen::Index f = 0; f < p; ++f) {
        const auto& column = data.column(static_cast<std::size_t>(f));
        for (Eigen::Index r = 0; r < n; ++r) design(r, f + 1) = column[r];
    }
    Eigen::VectorXd y(n);
    for (Eigen::Index r = 0; r < n; ++r) y(r) = targets[static_cast<std::size_t>(r)];

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    if (qr.rank() < p + 1) {
        const auto& diag = qr.matrixR().diagonal();
        const double largest = std::abs(diag(0));
        const double smallest = std::abs(diag(std::min<Eigen::Index>(p, diag.size() - 1)));
        throw ValidationError(
            "singular design matrix: rank " + std::to_string(qr.rank()) + " of " +
            std::to_string(p + 1) + ", condition ~ " +
            std::to_string(smallest > 0.0 ? largest / smallest : std::numeric_limits<double>::infinity()));
    }
    const Eigen::VectorXd beta = qr.solve(y);

    std::vector<double> weights(static_cast<std::size_t>(p));
    for (Eigen::Index f = 0; f < p; ++f) weights[static_cast<std::size_t>(f)] = beta(f + 1);
    return std::make_shared<LinearModel>(beta(0), std::move(weights), data.schema());
}

} // namespace ibd
