#pragma once

#include "fairshift/grid.hpp"

#include <string>

namespace fairshift {

enum class GridFormat { json, csv };

GridFormat parse_grid_format(const std::string& name);

/// Shortest-exact 17-significant-digit rendering used for CSV cells.
std::string format_double(double v);

/// JSON document {meta: {...}, cells: [...]}; undefined values are null.
std::string render_json(const SweepGrid& grid);
/// RFC-4180 CSV with LF line endings; undefined values are the string "undefined".
std::string render_csv(const SweepGrid& grid);
std::string render(const SweepGrid& grid, GridFormat format);

/// Write the rendered grid to `path`; throws on an empty grid or an unwritable path.
void emit(const SweepGrid& grid, GridFormat format, const std::string& path);

SweepGrid parse_grid_json(const std::string& text);
/// Cells and axes only; CSV carries no metadata.
SweepGrid parse_grid_csv(const std::string& text);

} // namespace fairshift
