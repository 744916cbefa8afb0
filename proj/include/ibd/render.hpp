#pragma once

#include "ibd/explanation.hpp"

#include <string>

namespace ibd {

enum class OutputKind { Json, Text, Svg };

struct RenderSpec {
    OutputKind kind = OutputKind::Json;
    std::string positive_color = "#2e7d32";
    std::string negative_color = "#c0392b";
    std::string intercept_color = "#1f77b4";
    std::string whisker_color = "#1f77b4";
    int width = 720;
    int height = 0; // 0 = derived from the number of rows
    int precision = 4;
};

OutputKind parse_output_kind(const std::string& name);

// Waterfall chart: one intercept bar, one cumulatively positioned bar per
// step (sign-colored, pair steps labeled with both feature names joined by
// ':'), and a final prediction marker. Pure string assembly; identical
// inputs yield identical bytes.
std::string render_waterfall(const Explanation& explanation, const RenderSpec& spec = {});

// Contribution bars of the report's baseline explanation annotated with
// whiskers per feature: thin from min to max sampled contribution, thick
// from the first to the third quartile.
std::string render_uncertainty(const UncertaintyReport& report, const RenderSpec& spec = {});

} // namespace ibd
