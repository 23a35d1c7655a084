#pragma once

#include "fairshift/distribution.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fairshift {

/// One cell of a two-axis grid. Values that cannot be computed are left empty.
struct GridCell {
    double axis_g = 0.0;
    double axis_h = 0.0;
    MaybeRate delta_source;
    MaybeRate delta_target;
    MaybeRate bound;
    MaybeRate oracle;
    /// Values for SweepGrid::extra_columns, in the same order.
    std::vector<MaybeRate> extra;
};

struct GridMeta {
    std::optional<std::uint64_t> seed;
    std::string schema;
    std::string bound_kind;
    std::string metric;
    std::string convention = "unordered";
    std::vector<std::vector<double>> bin_edges;
    std::vector<std::string> groups;
    std::map<std::string, double> parameters;
};

/**
 * Row-major grid over axis_g x axis_h: cells[i * axis_h.size() + j] holds
 * (axis_g[i], axis_h[j]).
 */
struct SweepGrid {
    std::string axis_g_name = "tau_g";
    std::string axis_h_name = "tau_h";
    std::vector<double> axis_g;
    std::vector<double> axis_h;
    std::vector<std::string> extra_columns;
    bool has_oracle = false;
    std::vector<GridCell> cells;
    GridMeta meta;

    const GridCell& at(size_t i, size_t j) const { return cells[i * axis_h.size() + j]; }
};

/// `n` evenly spaced values from lo to hi inclusive (n == 1 gives {lo}).
std::vector<double> linspace(double lo, double hi, size_t n);

/// Parse "lo:hi:n" into linspace(lo, hi, n).
std::vector<double> parse_axis(const std::string& text);

} // namespace fairshift
