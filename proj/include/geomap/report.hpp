#pragma once

#include "geomap/geometry.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace geomap {

using nlohmann::json;

enum class EquationTag { lc2, sin3, sin6, pregeodesic };

inline const char* equation_tag_name(EquationTag t) {
    switch (t) {
        case EquationTag::lc2: return "LC2";
        case EquationTag::sin3: return "SIN3";
        case EquationTag::sin6: return "SIN6";
        case EquationTag::pregeodesic: return "PREGEODESIC";
    }
    return "?";
}

inline json grid_to_json(const GridSpec& g) {
    json bounds = json::array();
    for (int k = 0; k < g.dimension(); ++k) bounds.push_back({g.lo[k], g.hi[k]});
    return json{{"bounds", bounds}, {"resolution", g.res}};
}

// Per-point and aggregate norms of a criterion-equation residual. `max` and
// `mean` are over the evaluated points; the mean uses pairwise summation so
// the value is independent of evaluation order.
struct ResidualReport {
    EquationTag equation = EquationTag::lc2;
    std::optional<GridSpec> grid;
    std::vector<double> per_point;
    std::vector<Vec> points;  // matching per_point; kept for CSV export
    double max = 0;
    double mean = 0;
    Vec worst_point;
    std::string normalization;
    int flagged_points = 0;       // abs-kink evaluations encountered
    bool signature_mismatch = false;

    void finalize() {
        max = 0;
        size_t worst = 0;
        for (size_t i = 0; i < per_point.size(); ++i)
            if (per_point[i] >= max) {
                max = per_point[i];
                worst = i;
            }
        mean = pairwise_mean(per_point);
        if (!points.empty()) worst_point = points[worst];
    }

    json to_json(bool include_per_point = false) const {
        json j;
        j["equation"] = equation_tag_name(equation);
        if (grid) j["grid"] = grid_to_json(*grid);
        j["max"] = max;
        j["mean"] = mean;
        json wp = json::array();
        for (int k = 0; k < worst_point.size(); ++k) wp.push_back(worst_point[k]);
        j["worst_point"] = wp;
        j["normalization"] = normalization;
        if (flagged_points > 0) j["flagged_points"] = flagged_points;
        if (signature_mismatch) j["signature_mismatch"] = true;
        if (include_per_point) j["per_point"] = per_point;
        return j;
    }
};

}  // namespace geomap
