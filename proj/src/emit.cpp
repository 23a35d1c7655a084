#include "fairshift/emit.hpp"

#include "fairshift/errors.hpp"
#include "fairshift/harness.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>

namespace fairshift {

namespace {

using ojson = nlohmann::ordered_json;

constexpr const char* kUndefined = "undefined";

void require_complete(const SweepGrid& grid) {
    if (grid.axis_g.empty() || grid.axis_h.empty() || grid.cells.empty()) throw ValidationError("empty grid");
    if (grid.cells.size() != grid.axis_g.size() * grid.axis_h.size())
        throw ValidationError("grid is not complete over its axes");
}

ojson maybe(const MaybeRate& v) { return v ? ojson(*v) : ojson(nullptr); }

std::string csv_value(const MaybeRate& v) { return v ? format_double(*v) : kUndefined; }

std::vector<std::string> value_columns(const SweepGrid& grid) {
    std::vector<std::string> cols{"delta_source", "delta_target", "bound"};
    if (grid.has_oracle) cols.push_back("oracle");
    cols.insert(cols.end(), grid.extra_columns.begin(), grid.extra_columns.end());
    return cols;
}

std::vector<MaybeRate> cell_values(const SweepGrid& grid, const GridCell& c) {
    std::vector<MaybeRate> v{c.delta_source, c.delta_target, c.bound};
    if (grid.has_oracle) v.push_back(c.oracle);
    v.insert(v.end(), c.extra.begin(), c.extra.end());
    return v;
}

void assign_values(SweepGrid& grid, GridCell& c, const std::vector<MaybeRate>& v) {
    size_t i = 0;
    c.delta_source = v[i++];
    c.delta_target = v[i++];
    c.bound = v[i++];
    if (grid.has_oracle) c.oracle = v[i++];
    c.extra.assign(v.begin() + static_cast<std::ptrdiff_t>(i), v.end());
}

void push_unique(std::vector<double>& axis, double v) {
    if (std::find(axis.begin(), axis.end(), v) == axis.end()) axis.push_back(v);
}

double parse_cell_number(const std::string& s) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) throw ValidationError("unparseable grid value '" + s + "'");
    return v;
}

} // namespace

GridFormat parse_grid_format(const std::string& name) {
    if (name == "json") return GridFormat::json;
    if (name == "csv") return GridFormat::csv;
    throw ValidationError("unknown format: " + name);
}

std::string format_double(double v) {
    if (!std::isfinite(v)) throw ValidationError("non-finite value in grid");
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    if (ec != std::errc()) throw ValidationError("cannot format value");
    return std::string(buf, ptr);
}

std::string render_json(const SweepGrid& grid) {
    require_complete(grid);
    ojson meta;
    meta["seed"] = grid.meta.seed ? ojson(*grid.meta.seed) : ojson(nullptr);
    meta["schema"] = grid.meta.schema;
    meta["bound_kind"] = grid.meta.bound_kind;
    meta["metric"] = grid.meta.metric;
    meta["convention"] = grid.meta.convention;
    meta["bin_edges"] = grid.meta.bin_edges;
    meta["groups"] = grid.meta.groups;
    meta["axes"] = {grid.axis_g_name, grid.axis_h_name};
    meta["axis_g"] = grid.axis_g;
    meta["axis_h"] = grid.axis_h;
    meta["columns"] = value_columns(grid);
    ojson params = ojson::object();
    for (const auto& [k, v] : grid.meta.parameters) params[k] = v;
    meta["parameters"] = params;

    ojson cells = ojson::array();
    const auto cols = value_columns(grid);
    for (const GridCell& c : grid.cells) {
        ojson cell;
        cell[grid.axis_g_name] = c.axis_g;
        cell[grid.axis_h_name] = c.axis_h;
        const auto vals = cell_values(grid, c);
        if (vals.size() != cols.size()) throw ValidationError("cell has the wrong number of values");
        for (size_t i = 0; i < cols.size(); ++i) cell[cols[i]] = maybe(vals[i]);
        cells.push_back(std::move(cell));
    }
    ojson doc;
    doc["meta"] = std::move(meta);
    doc["cells"] = std::move(cells);
    return doc.dump(2) + "\n";
}

std::string render_csv(const SweepGrid& grid) {
    require_complete(grid);
    const auto cols = value_columns(grid);
    std::string out = csv_field(grid.axis_g_name) + "," + csv_field(grid.axis_h_name);
    for (const auto& c : cols) out += "," + csv_field(c);
    out += "\n";
    for (const GridCell& c : grid.cells) {
        out += format_double(c.axis_g) + "," + format_double(c.axis_h);
        const auto vals = cell_values(grid, c);
        if (vals.size() != cols.size()) throw ValidationError("cell has the wrong number of values");
        for (const auto& v : vals) out += "," + csv_value(v);
        out += "\n";
    }
    return out;
}

std::string render(const SweepGrid& grid, GridFormat format) {
    return format == GridFormat::json ? render_json(grid) : render_csv(grid);
}

void emit(const SweepGrid& grid, GridFormat format, const std::string& path) {
    const std::string text = render(grid, format);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write " + path);
    out << text;
    if (!out) throw ValidationError("write failed: " + path);
}

SweepGrid parse_grid_json(const std::string& text) {
    SweepGrid grid;
    try {
        const ojson doc = ojson::parse(text);
        const ojson& meta = doc.at("meta");
        if (!meta.at("seed").is_null()) grid.meta.seed = meta["seed"].get<std::uint64_t>();
        grid.meta.schema = meta.at("schema").get<std::string>();
        grid.meta.bound_kind = meta.at("bound_kind").get<std::string>();
        grid.meta.metric = meta.at("metric").get<std::string>();
        grid.meta.convention = meta.at("convention").get<std::string>();
        grid.meta.bin_edges = meta.at("bin_edges").get<std::vector<std::vector<double>>>();
        grid.meta.groups = meta.at("groups").get<std::vector<std::string>>();
        grid.axis_g_name = meta.at("axes").at(0).get<std::string>();
        grid.axis_h_name = meta.at("axes").at(1).get<std::string>();
        grid.axis_g = meta.at("axis_g").get<std::vector<double>>();
        grid.axis_h = meta.at("axis_h").get<std::vector<double>>();
        for (const auto& [k, v] : meta.at("parameters").items()) grid.meta.parameters[k] = v.get<double>();
        const auto cols = meta.at("columns").get<std::vector<std::string>>();
        if (cols.size() < 3) throw ValidationError("grid columns missing");
        grid.has_oracle = cols.size() > 3 && cols[3] == "oracle";
        grid.extra_columns.assign(cols.begin() + (grid.has_oracle ? 4 : 3), cols.end());
        for (const auto& c : doc.at("cells")) {
            GridCell cell;
            cell.axis_g = c.at(grid.axis_g_name).get<double>();
            cell.axis_h = c.at(grid.axis_h_name).get<double>();
            std::vector<MaybeRate> vals;
            for (const auto& name : cols) {
                const auto& v = c.at(name);
                vals.push_back(v.is_null() ? MaybeRate() : MaybeRate(v.get<double>()));
            }
            assign_values(grid, cell, vals);
            grid.cells.push_back(std::move(cell));
        }
    } catch (const ojson::exception& e) {
        throw ValidationError(std::string("grid json: ") + e.what());
    }
    require_complete(grid);
    return grid;
}

SweepGrid parse_grid_csv(const std::string& text) {
    const CsvTable table = parse_csv(text);
    if (table.header.size() < 5) throw ValidationError("grid csv needs at least five columns");
    SweepGrid grid;
    grid.axis_g_name = table.header[0];
    grid.axis_h_name = table.header[1];
    const std::vector<std::string> cols(table.header.begin() + 2, table.header.end());
    grid.has_oracle = cols.size() > 3 && cols[3] == "oracle";
    grid.extra_columns.assign(cols.begin() + (grid.has_oracle ? 4 : 3), cols.end());
    for (const auto& row : table.rows) {
        GridCell cell;
        cell.axis_g = parse_cell_number(row[0]);
        cell.axis_h = parse_cell_number(row[1]);
        push_unique(grid.axis_g, cell.axis_g);
        push_unique(grid.axis_h, cell.axis_h);
        std::vector<MaybeRate> vals;
        for (size_t i = 2; i < row.size(); ++i)
            vals.push_back(row[i] == kUndefined ? MaybeRate() : MaybeRate(parse_cell_number(row[i])));
        assign_values(grid, cell, vals);
        grid.cells.push_back(std::move(cell));
    }
    require_complete(grid);
    return grid;
}

} // namespace fairshift
