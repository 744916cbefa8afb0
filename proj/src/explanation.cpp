#include "ibd/explanation.hpp"

#include "ibd/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <nlohmann/json.hpp>
#include <sstream>
#include <vector>

namespace ibd {

using nlohmann::json;

FeatureGroup FeatureGroup::pair(std::size_t i, std::size_t j) {
    if (i == j) throw ValidationError("pair requires distinct features");
    return {std::min(i, j), std::max(i, j)};
}

std::size_t PairTable::index(std::size_t i, std::size_t j) const {
    if (i > j) std::swap(i, j);
    if (i == j || j >= p_) throw ValidationError("pair index out of range");
    return i * (2 * p_ - i - 1) / 2 + (j - i - 1);
}

Explanation::Explanation(double baseline, double prediction, std::vector<ExplanationStep> steps,
                         std::vector<std::string> feature_names, ExplanationMeta meta)
    : baseline_(baseline),
      prediction_(prediction),
      steps_(std::move(steps)),
      feature_names_(std::move(feature_names)),
      meta_(std::move(meta)) {
    const std::size_t p = feature_names_.size();
    std::vector<int> coverage(p, 0);
    double sum = baseline_;
    for (const auto& step : steps_) {
        if (step.group.first >= p || (step.group.second && *step.group.second >= p)) {
            throw ValidationError("explanation step references a feature out of range");
        }
        coverage[step.group.first] += 1;
        if (step.group.second) coverage[*step.group.second] += 1;
        sum += step.attribution;
    }
    for (std::size_t f = 0; f < p; ++f) {
        if (coverage[f] != 1) {
            throw ValidationError("feature '" + feature_names_[f] +
                                  "' appears in " + std::to_string(coverage[f]) +
                                  " explanation steps, expected exactly 1");
        }
    }
    const double tol = 1e-8 * std::max(1.0, std::abs(prediction_));
    if (std::abs(sum - prediction_) > tol) {
        throw ValidationError("explanation does not sum to the prediction: baseline + steps = " +
                              std::to_string(sum) + ", prediction = " + std::to_string(prediction_));
    }
}

std::string Explanation::step_label(std::size_t k) const {
    const auto& g = steps_[k].group;
    std::string label = feature_names_[g.first];
    if (g.second) label += ":" + feature_names_[*g.second];
    return label;
}

std::string Explanation::to_json() const {
    json steps = json::array();
    for (const auto& step : steps_) {
        json features = json::array();
        features.push_back(feature_names_[step.group.first]);
        if (step.group.second) features.push_back(feature_names_[*step.group.second]);
        steps.push_back({{"features", features},
                         {"order_score", step.order_score},
                         {"attribution", step.attribution}});
    }
    const json doc = {
        {"baseline", baseline_},
        {"prediction", prediction_},
        {"steps", steps},
        {"meta",
         {{"seed", meta_.seed},
          {"background_rows", meta_.background_rows},
          {"model", meta_.model}}},
    };
    return doc.dump(2) + "\n";
}

namespace {

std::string fixed(double v, int precision) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", precision, v);
    return buf;
}

std::string pad(const std::string& s, std::size_t width) {
    std::string out = s;
    if (out.size() < width) out.append(width - out.size(), ' ');
    return out;
}

} // namespace

std::string Explanation::to_text(int precision) const {
    std::size_t width = 10;
    for (std::size_t k = 0; k < steps_.size(); ++k) {
        width = std::max(width, step_label(k).size());
    }
    std::ostringstream os;
    os << "model: " << meta_.model << "  (background rows: " << meta_.background_rows
       << ", seed: " << meta_.seed << ")\n";
    double running = baseline_;
    os << pad("baseline", width) << "  " << fixed(baseline_, precision) << "\n";
    for (std::size_t k = 0; k < steps_.size(); ++k) {
        running += steps_[k].attribution;
        os << pad(step_label(k), width) << "  " << fixed(steps_[k].attribution, precision)
           << "  -> " << fixed(running, precision) << "\n";
    }
    os << pad("prediction", width) << "  " << fixed(prediction_, precision) << "\n";
    return os.str();
}

double quantile(std::vector<double> values, double q) {
    if (values.empty()) throw ValidationError("quantile of empty sample");
    std::sort(values.begin(), values.end());
    const double h = q * static_cast<double>(values.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = h - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

std::string UncertaintyReport::to_json() const {
    json features = json::array();
    for (std::size_t f = 0; f < feature_names.size(); ++f) {
        features.push_back({{"name", feature_names[f]},
                            {"mean", means[f]},
                            {"q1", q1[f]},
                            {"q3", q3[f]},
                            {"samples", samples[f]}});
    }
    const json doc = {{"K", K}, {"seed", seed}, {"features", features}};
    return doc.dump(2) + "\n";
}

std::string UncertaintyReport::to_text(int precision) const {
    std::size_t width = 7;
    for (const auto& name : feature_names) width = std::max(width, name.size());
    std::ostringstream os;
    os << "K: " << K << ", seed: " << seed << "\n";
    os << pad("feature", width) << "  " << "mean" << "  q1  q3  iqr\n";
    for (std::size_t f = 0; f < feature_names.size(); ++f) {
        os << pad(feature_names[f], width) << "  " << fixed(means[f], precision) << "  "
           << fixed(q1[f], precision) << "  " << fixed(q3[f], precision) << "  "
           << fixed(iqr[f], precision) << "\n";
    }
    return os.str();
}

} // namespace ibd
