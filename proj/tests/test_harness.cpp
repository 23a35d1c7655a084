#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fairshift/emit.hpp"
#include "fairshift/errors.hpp"
#include "fairshift/harness.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

using namespace fairshift;

namespace {

const char* kToy = "x,y,g,s\n0.1,0,a,0.2\n0.9,1,a,0.8\n0.2,1,b,0.3\n0.8,0,b,0.6\n";

DatasetSchema toy_schema() {
    return parse_schema(R"({"feature_columns": ["x"], "bin_counts": [2], "label_column": "y",
                            "group_column": "g", "score_column": "s"})");
}

SweepGrid small_grid() {
    SweepGrid g;
    g.axis_g = {0.25, 0.5};
    g.axis_h = {0.1, 0.2, 0.3};
    g.extra_columns = {"budget_g"};
    g.has_oracle = true;
    g.meta.seed = 17;
    g.meta.bound_kind = "dp-covariate";
    g.meta.metric = "dp";
    g.meta.groups = {"a", "b"};
    g.meta.bin_edges = {{0.0, 0.5, 1.0}};
    for (double a : g.axis_g)
        for (double b : g.axis_h)
            g.cells.push_back({a, b, a * b, 0.1 + a / 3, std::nullopt, 1.0 / 7.0, {b}});
    return g;
}

} // namespace

TEST_CASE("ingest a four-row toy dataset [DERIVED]") {
    const auto data = ingest_tables(parse_csv(kToy), std::nullopt, toy_schema());
    const auto& d = data.source;
    CHECK(d.bins() == std::vector<std::string>{"0", "1"});
    CHECK(d.groups() == std::vector<std::string>{"a", "b"});
    CHECK(data.edges.at(0) == std::vector<double>{0.1, 0.5, 0.9});
    const auto a = *d.group_index("a"), b = *d.group_index("b");
    CHECK(d.mass(0, 0, a) == 0.25);
    CHECK(d.mass(1, 1, a) == 0.25);
    CHECK(d.mass(0, 1, b) == 0.25);
    CHECK(d.mass(1, 0, b) == 0.25);
    CHECK(data.scores.scores(0, a) == 0.2);
    CHECK(data.scores.scores(1, b) == 0.6);
}

TEST_CASE("missing columns and bad labels are reported by name [TRIVIAL]") {
    CHECK_THROWS_WITH_AS(ingest_tables(parse_csv("x,y,g\n0.1,0,a\n"), std::nullopt, toy_schema()),
                         "missing column: s", ValidationError);
    CHECK_THROWS_AS(ingest_tables(parse_csv("x,y,g,s\n0.1,2,a,0.5\n"), std::nullopt, toy_schema()),
                    ValidationError);
    CHECK_THROWS_AS(ingest_tables(parse_csv("x,y,g,s\nabc,1,a,0.5\n"), std::nullopt, toy_schema()),
                    ValidationError);
}

TEST_CASE("CSV parser handles quotes and CRLF [TRIVIAL]") {
    const auto t = parse_csv("a,b\r\n\"x,1\",\"say \"\"hi\"\"\"\r\n");
    CHECK(t.header == std::vector<std::string>{"a", "b"});
    CHECK(t.rows.at(0) == std::vector<std::string>{"x,1", "say \"hi\""});
    CHECK(csv_field("x,1") == "\"x,1\"");
    CHECK(csv_field("plain") == "plain");
}

TEST_CASE("logistic scores are used without a score column [TRIVIAL]") {
    const auto schema = parse_schema(R"({"feature_columns": ["x"], "bin_counts": [2], "label_column": "y",
                                         "group_column": "g"})");
    const auto data = ingest_tables(parse_csv("x,y,g\n0.1,0,a\n0.9,1,a\n0.2,0,b\n0.8,1,b\n"), std::nullopt, schema);
    CHECK(data.coefficients.size() == 2);
    CHECK(data.scores.scores(1, 0) > data.scores.scores(0, 0));
}

TEST_CASE("axis parsing [TRIVIAL]") {
    CHECK(parse_axis("0:1:3") == std::vector<double>{0.0, 0.5, 1.0});
    CHECK(parse_axis("0.05:0.95:19").size() == 19);
    CHECK_THROWS_AS(parse_axis("0:1"), ValidationError);
    CHECK_THROWS_AS(parse_axis("1:0:3"), ValidationError);
}

TEST_CASE("JSON round trip keeps every cell [TRIVIAL]") {
    const auto g = small_grid();
    const auto back = parse_grid_json(render_json(g));
    REQUIRE(back.cells.size() == g.cells.size());
    CHECK(back.axis_g == g.axis_g);
    CHECK(back.meta.seed == g.meta.seed);
    for (size_t i = 0; i < g.cells.size(); ++i) {
        CHECK(back.cells[i].delta_target == g.cells[i].delta_target);
        CHECK_FALSE(back.cells[i].bound.has_value());
        CHECK(back.cells[i].oracle == g.cells[i].oracle);
        CHECK(back.cells[i].extra == g.cells[i].extra);
    }
    CHECK(render_json(back) == render_json(g));
}

TEST_CASE("CSV round trip is exact and marks undefined values [TRIVIAL]") {
    const auto g = small_grid();
    const std::string csv = render_csv(g);
    CHECK(csv.find("undefined") != std::string::npos);
    CHECK(csv.find('\r') == std::string::npos);
    const auto back = parse_grid_csv(csv);
    REQUIRE(back.cells.size() == g.cells.size());
    for (size_t i = 0; i < g.cells.size(); ++i) {
        CHECK(back.cells[i].delta_source == g.cells[i].delta_source);
        CHECK(back.cells[i].oracle == g.cells[i].oracle);
    }
    CHECK(render_csv(back) == csv);
}

TEST_CASE("a 19 by 19 grid renders 361 rows [TRIVIAL]") {
    SweepGrid g;
    g.axis_g = g.axis_h = linspace(0.05, 0.95, 19);
    for (double a : g.axis_g)
        for (double b : g.axis_h) g.cells.push_back({a, b, 0.0, 0.0, 0.0, std::nullopt, {}});
    const std::string csv = render_csv(g);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 362);
}

TEST_CASE("empty grid is refused [TRIVIAL]") {
    CHECK_THROWS_WITH_AS(emit(SweepGrid{}, GridFormat::json, "/tmp/never.json"), "empty grid", ValidationError);
}

TEST_CASE("sweep validates bound and metric pairing [TRIVIAL]") {
    const auto data = ingest_tables(parse_csv(kToy), parse_csv(kToy), toy_schema());
    SweepOptions o;
    o.metric = MetricKind::eop;
    o.bound = BoundKind::dp_covariate;
    CHECK_THROWS_AS(sweep(data.source, *data.target, data.scores, {0.5}, {0.5}, o), ValidationError);
    o.bound = BoundKind::eop_corners;
    CHECK_THROWS_AS(sweep(data.source, *data.target, data.scores, {0.5}, {0.5}, o), ValidationError);
}

TEST_CASE("sweep with an identical target reproduces the source [TRIVIAL]") {
    const auto data = ingest_tables(parse_csv(kToy), parse_csv(kToy), toy_schema());
    SweepOptions o;
    const auto g = sweep(data.source, *data.target, data.scores, {0.1, 0.5}, {0.25, 0.7}, o);
    REQUIRE(g.cells.size() == 4);
    for (const auto& c : g.cells) {
        CHECK(c.delta_source == c.delta_target);
        CHECK(c.bound == c.delta_source);
    }
}

TEST_CASE("emit writes the rendered file [TRIVIAL]") {
    const auto path = (std::filesystem::temp_directory_path() / "fairshift_emit_test.csv").string();
    emit(small_grid(), GridFormat::csv, path);
    std::ifstream in(path, std::ios::binary);
    const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(text == render_csv(small_grid()));
    std::remove(path.c_str());
}
