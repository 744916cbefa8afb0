#include "ibd/render.hpp"

#include "ibd/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace ibd {

namespace {

constexpr int kRowHeight = 34;
constexpr int kMarginTop = 24;
constexpr int kMarginBottom = 34;
constexpr int kLabelGutter = 180;
constexpr int kMarginRight = 24;

void check_spec(const RenderSpec& spec) {
    if (spec.width <= 0 || spec.height < 0) {
        throw ValidationError("render dimensions must be positive");
    }
    if (spec.precision < 0 || spec.precision > 10) {
        throw ValidationError("render precision must lie in [0, 10]");
    }
}

std::string fixed(double v, int precision) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", precision, v);
    return buf;
}

// Pixel coordinates with one decimal keep the output byte-stable.
std::string px(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", v);
    return buf;
}

std::string escape(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

struct Scale {
    double lo = 0.0;
    double hi = 1.0;
    double x0 = 0.0;
    double x1 = 1.0;

    double operator()(double v) const { return x0 + (v - lo) / (hi - lo) * (x1 - x0); }
};

Scale make_scale(double lo, double hi, int width) {
    if (hi - lo < 1e-12) {
        lo -= 0.5;
        hi += 0.5;
    }
    const double pad = 0.05 * (hi - lo);
    return Scale{lo - pad, hi + pad, static_cast<double>(kLabelGutter),
                 static_cast<double>(width - kMarginRight)};
}

void open_svg(std::ostringstream& os, int width, int height) {
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
       << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
       << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n"
       << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"#ffffff\"/>\n";
}

void bar(std::ostringstream& os, const std::string& cls, const std::string& color, double x_from,
         double x_to, double y, double h) {
    const double x = std::min(x_from, x_to);
    const double w = std::max(std::abs(x_to - x_from), 0.5);
    os << "<rect class=\"bar " << cls << "\" x=\"" << px(x) << "\" y=\"" << px(y) << "\" width=\""
       << px(w) << "\" height=\"" << px(h) << "\" fill=\"" << color << "\"/>\n";
}

void label(std::ostringstream& os, double y, const std::string& text) {
    os << "<text x=\"8\" y=\"" << px(y) << "\" font-family=\"monospace\" font-size=\"12\">"
       << escape(text) << "</text>\n";
}

} // namespace

OutputKind parse_output_kind(const std::string& name) {
    if (name == "json") return OutputKind::Json;
    if (name == "text") return OutputKind::Text;
    if (name == "svg") return OutputKind::Svg;
    throw ValidationError("unknown format '" + name + "', expected json, text or svg");
}

std::string render_waterfall(const Explanation& explanation, const RenderSpec& spec) {
    check_spec(spec);
    const auto& steps = explanation.steps();
    if (steps.empty()) throw ValidationError("cannot render an explanation with no steps");

    const std::size_t rows = steps.size() + 1; // intercept row + step rows
    const int height =
        spec.height > 0 ? spec.height
                        : kMarginTop + static_cast<int>(rows) * kRowHeight + kMarginBottom;

    double lo = std::min(explanation.baseline(), explanation.prediction());
    double hi = std::max(explanation.baseline(), explanation.prediction());
    double running = explanation.baseline();
    for (const auto& step : steps) {
        running += step.attribution;
        lo = std::min(lo, running);
        hi = std::max(hi, running);
    }
    const Scale x = make_scale(lo, hi, spec.width);

    std::ostringstream os;
    open_svg(os, spec.width, height);

    double y = kMarginTop;
    bar(os, "intercept", spec.intercept_color, x(x.lo), x(explanation.baseline()), y + 5,
        kRowHeight - 10);
    label(os, y + kRowHeight / 2.0 + 4,
          "baseline = " + fixed(explanation.baseline(), spec.precision));
    y += kRowHeight;

    running = explanation.baseline();
    for (std::size_t k = 0; k < steps.size(); ++k) {
        const double previous = running;
        running += steps[k].attribution;
        const bool positive = steps[k].attribution >= 0.0;
        bar(os, positive ? "positive" : "negative",
            positive ? spec.positive_color : spec.negative_color, x(previous), x(running), y + 5,
            kRowHeight - 10);
        const std::string sign = positive ? "+" : "";
        label(os, y + kRowHeight / 2.0 + 4,
              explanation.step_label(k) + " " + sign + fixed(steps[k].attribution, spec.precision));
        y += kRowHeight;
    }

    const double marker_x = x(explanation.prediction());
    os << "<line class=\"prediction\" x1=\"" << px(marker_x) << "\" y1=\"" << px(kMarginTop - 6)
       << "\" x2=\"" << px(marker_x) << "\" y2=\"" << px(y + 4)
       << "\" stroke=\"#444444\" stroke-width=\"1.5\" stroke-dasharray=\"4 3\"/>\n";
    label(os, y + 18, "prediction = " + fixed(explanation.prediction(), spec.precision));

    os << "</svg>\n";
    return os.str();
}

std::string render_uncertainty(const UncertaintyReport& report, const RenderSpec& spec) {
    check_spec(spec);
    const std::size_t p = report.feature_names.size();
    if (p == 0) throw ValidationError("cannot render an empty uncertainty report");

    // Bars show the baseline explanation the report annotates; whiskers show
    // the sampled contribution spread.
    std::vector<double> bars(p, 0.0);
    if (report.baseline_explanation) {
        for (const auto& step : report.baseline_explanation->steps()) {
            bars[step.group.first] = step.attribution;
        }
    } else {
        bars = report.means;
    }

    double lo = 0.0;
    double hi = 0.0;
    for (std::size_t f = 0; f < p; ++f) {
        lo = std::min(lo, bars[f]);
        hi = std::max(hi, bars[f]);
        for (double v : report.samples[f]) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    const Scale x = make_scale(lo, hi, spec.width);
    const int height =
        spec.height > 0 ? spec.height
                        : kMarginTop + static_cast<int>(p) * kRowHeight + kMarginBottom;

    std::ostringstream os;
    open_svg(os, spec.width, height);

    double y = kMarginTop;
    for (std::size_t f = 0; f < p; ++f) {
        const bool positive = bars[f] >= 0.0;
        bar(os, positive ? "positive" : "negative",
            positive ? spec.positive_color : spec.negative_color, x(0.0), x(bars[f]), y + 5,
            kRowHeight - 10);

        const auto [min_it, max_it] =
            std::minmax_element(report.samples[f].begin(), report.samples[f].end());
        const double mid = y + kRowHeight / 2.0;
        os << "<line class=\"whisker-range\" x1=\"" << px(x(*min_it)) << "\" y1=\"" << px(mid)
           << "\" x2=\"" << px(x(*max_it)) << "\" y2=\"" << px(mid) << "\" stroke=\""
           << spec.whisker_color << "\" stroke-width=\"1.5\"/>\n";
        os << "<line class=\"whisker-iqr\" x1=\"" << px(x(report.q1[f])) << "\" y1=\"" << px(mid)
           << "\" x2=\"" << px(x(report.q3[f])) << "\" y2=\"" << px(mid) << "\" stroke=\""
           << spec.whisker_color << "\" stroke-width=\"6\"/>\n";
        label(os, mid + 4,
              report.feature_names[f] + " " + fixed(report.means[f], spec.precision));
        y += kRowHeight;
    }

    os << "<line class=\"axis\" x1=\"" << px(x(0.0)) << "\" y1=\"" << px(kMarginTop - 6)
       << "\" x2=\"" << px(x(0.0)) << "\" y2=\"" << px(y + 4)
       << "\" stroke=\"#444444\" stroke-width=\"1\"/>\n";
    label(os, y + 18, "K = " + std::to_string(report.K) + ", seed = " + std::to_string(report.seed));

    os << "</svg>\n";
    return os.str();
}

} // namespace ibd
