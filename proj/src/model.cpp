#include "ibd/model.hpp"

namespace ibd {

double Model::score_one(const std::vector<double>& values) const {
    Table t;
    t.n_rows = 1;
    t.columns.reserve(values.size());
    for (double v : values) t.columns.push_back({v});
    double out = 0.0;
    score(t, std::span<double>(&out, 1));
    return out;
}

void FunctionModel::score(const Table& rows, std::span<double> out) const {
    std::vector<double> buf(rows.n_cols());
    for (std::size_t r = 0; r < rows.n_rows; ++r) {
        for (std::size_t c = 0; c < rows.n_cols(); ++c) buf[c] = rows.columns[c][r];
        out[r] = fn_(buf);
    }
}

} // namespace ibd
