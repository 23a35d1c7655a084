#include "fairshift/harness.hpp"

#include "fairshift/disparity.hpp"
#include "fairshift/errors.hpp"
#include "fairshift/geometry.hpp"
#include "fairshift/parallel.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace fairshift {

namespace {

using nlohmann::json;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

double parse_number(const std::string& text, const std::string& column, size_t row) {
    double v = 0.0;
    const char* begin = text.data();
    const char* end = begin + text.size();
    while (begin < end && *begin == ' ') ++begin;
    while (end > begin && end[-1] == ' ') --end;
    if (begin == end) throw ValidationError("missing value in column " + column + ", row " + std::to_string(row));
    if (*begin == '+') ++begin;
    const auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || ptr != end || !std::isfinite(v))
        throw ValidationError("unparseable numeric '" + text + "' in column " + column + ", row " + std::to_string(row));
    return v;
}

} // namespace

void DatasetSchema::validate() const {
    if (feature_columns.empty()) throw ValidationError("schema needs at least one feature column");
    if (bin_counts.size() != feature_columns.size()) throw ValidationError("one bin count per feature column required");
    for (int b : bin_counts)
        if (b < 1) throw ValidationError("bin counts must be >= 1");
    if (label_column.empty() || group_column.empty()) throw ValidationError("schema needs label and group columns");
    if (!feature_ranges.empty()) {
        if (feature_ranges.size() != feature_columns.size())
            throw ValidationError("one feature range per feature column required");
        for (const auto& [lo, hi] : feature_ranges)
            if (!(lo < hi)) throw ValidationError("feature range must have lo < hi");
    }
}

DatasetSchema parse_schema(const std::string& json_text) {
    DatasetSchema s;
    try {
        const json j = json::parse(json_text);
        s.feature_columns = j.at("feature_columns").get<std::vector<std::string>>();
        s.bin_counts = j.at("bin_counts").get<std::vector<int>>();
        s.label_column = j.at("label_column").get<std::string>();
        s.group_column = j.at("group_column").get<std::string>();
        if (j.contains("score_column") && !j["score_column"].is_null())
            s.score_column = j["score_column"].get<std::string>();
        if (j.contains("weight_column") && !j["weight_column"].is_null())
            s.weight_column = j["weight_column"].get<std::string>();
        if (j.contains("feature_ranges"))
            for (const auto& r : j["feature_ranges"]) s.feature_ranges.emplace_back(r.at(0).get<double>(), r.at(1).get<double>());
    } catch (const json::exception& e) {
        throw ValidationError(std::string("schema: ") + e.what());
    }
    s.validate();
    return s;
}

DatasetSchema load_schema(const std::string& path) { return parse_schema(read_file(path)); }

size_t CsvTable::column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ValidationError("missing column: " + name);
    return static_cast<size_t>(it - header.begin());
}

CsvTable parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool quoted = false, field_started = false;
    size_t i = 0;
    auto end_record = [&] {
        record.push_back(std::move(field));
        field.clear();
        if (!(record.size() == 1 && record[0].empty() && !field_started)) records.push_back(std::move(record));
        record.clear();
        field_started = false;
    };
    while (i < text.size()) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
            ++i;
            continue;
        }
        if (c == '"') {
            quoted = true;
            field_started = true;
        } else if (c == ',') {
            record.push_back(std::move(field));
            field.clear();
            field_started = true;
        } else if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
            end_record();
            ++i;
        } else if (c == '\n') {
            end_record();
        } else {
            field += c;
            field_started = true;
        }
        ++i;
    }
    if (quoted) throw ValidationError("unterminated quoted field");
    if (field_started || !field.empty() || !record.empty()) end_record();
    if (records.empty()) throw ValidationError("empty input");
    CsvTable table;
    table.header = std::move(records.front());
    for (size_t r = 1; r < records.size(); ++r) {
        if (records[r].size() != table.header.size())
            throw ValidationError("row " + std::to_string(r) + " has " + std::to_string(records[r].size()) +
                                  " fields, header has " + std::to_string(table.header.size()));
        table.rows.push_back(std::move(records[r]));
    }
    return table;
}

CsvTable read_csv(const std::string& path) { return parse_csv(read_file(path)); }

std::string csv_field(const std::string& value) {
    if (value.find_first_of(",\"\r\n") == std::string::npos) return value;
    std::string out = "\"";
    for (char c : value) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

namespace {

struct ParsedRow {
    std::vector<double> features;
    int label;
    std::string group;
    double weight;
    std::optional<double> score;
};

std::vector<ParsedRow> parse_rows(const CsvTable& table, const DatasetSchema& schema) {
    std::vector<size_t> feature_idx;
    for (const auto& c : schema.feature_columns) feature_idx.push_back(table.column(c));
    const size_t label_idx = table.column(schema.label_column);
    const size_t group_idx = table.column(schema.group_column);
    const std::optional<size_t> score_idx =
        schema.score_column ? std::optional<size_t>(table.column(*schema.score_column)) : std::nullopt;
    const std::optional<size_t> weight_idx =
        schema.weight_column ? std::optional<size_t>(table.column(*schema.weight_column)) : std::nullopt;
    if (table.rows.empty()) throw ValidationError("empty input");

    std::vector<ParsedRow> rows;
    rows.reserve(table.rows.size());
    for (size_t r = 0; r < table.rows.size(); ++r) {
        const auto& raw = table.rows[r];
        const size_t line = r + 2;
        ParsedRow row;
        for (size_t k = 0; k < feature_idx.size(); ++k)
            row.features.push_back(parse_number(raw[feature_idx[k]], schema.feature_columns[k], line));
        const double label = parse_number(raw[label_idx], schema.label_column, line);
        if (label != 0.0 && label != 1.0)
            throw ValidationError("non-binary label '" + raw[label_idx] + "' at row " + std::to_string(line));
        row.label = static_cast<int>(label);
        row.group = raw[group_idx];
        if (row.group.empty())
            throw ValidationError("missing value in column " + schema.group_column + ", row " + std::to_string(line));
        row.weight = weight_idx ? parse_number(raw[*weight_idx], *schema.weight_column, line) : 1.0;
        if (score_idx) row.score = parse_number(raw[*score_idx], *schema.score_column, line);
        rows.push_back(std::move(row));
    }
    return rows;
}

BinEdges compute_edges(const std::vector<ParsedRow>& rows, const DatasetSchema& schema) {
    BinEdges edges;
    for (size_t k = 0; k < schema.feature_columns.size(); ++k) {
        double lo, hi;
        if (!schema.feature_ranges.empty()) {
            std::tie(lo, hi) = schema.feature_ranges[k];
        } else {
            lo = hi = rows.front().features[k];
            for (const auto& r : rows) {
                lo = std::min(lo, r.features[k]);
                hi = std::max(hi, r.features[k]);
            }
            if (hi == lo) hi = lo + 1.0;
        }
        const int n = schema.bin_counts[k];
        std::vector<double> e(static_cast<size_t>(n) + 1);
        for (int b = 0; b < n; ++b) e[static_cast<size_t>(b)] = lo + (hi - lo) * static_cast<double>(b) / n;
        e.back() = hi;
        edges.push_back(std::move(e));
    }
    return edges;
}

int bin_of(double v, const std::vector<double>& e) {
    const int n = static_cast<int>(e.size()) - 1;
    const double pos = (v - e.front()) / (e.back() - e.front()) * n;
    return std::clamp(static_cast<int>(std::floor(pos)), 0, n - 1);
}

std::vector<std::string> bin_ids(const BinEdges& edges) {
    std::vector<std::string> ids{""};
    for (size_t k = 0; k < edges.size(); ++k) {
        std::vector<std::string> next;
        for (const auto& prefix : ids)
            for (size_t b = 0; b + 1 < edges[k].size(); ++b)
                next.push_back(k == 0 ? std::to_string(b) : prefix + "|" + std::to_string(b));
        ids = std::move(next);
    }
    return ids;
}

size_t flat_bin(const ParsedRow& row, const BinEdges& edges) {
    size_t idx = 0;
    for (size_t k = 0; k < edges.size(); ++k)
        idx = idx * (edges[k].size() - 1) + static_cast<size_t>(bin_of(row.features[k], edges[k]));
    return idx;
}

/// Centre of each flat bin, scaled to [0, 1] per feature (|X| x d).
Eigen::MatrixXd bin_centres(const BinEdges& edges) {
    size_t total = 1;
    for (const auto& e : edges) total *= e.size() - 1;
    Eigen::MatrixXd out(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(edges.size()));
    for (size_t i = 0; i < total; ++i) {
        size_t rest = i;
        for (size_t k = edges.size(); k-- > 0;) {
            const size_t n = edges[k].size() - 1;
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
                (static_cast<double>(rest % n) + 0.5) / static_cast<double>(n);
            rest /= n;
        }
    }
    return out;
}

Eigen::VectorXd fit_logistic(const std::vector<ParsedRow>& rows, const BinEdges& edges) {
    const auto n = static_cast<Eigen::Index>(rows.size());
    const auto d = static_cast<Eigen::Index>(edges.size());
    Eigen::MatrixXd x(n, d + 1);
    Eigen::VectorXd y(n), w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& r = rows[static_cast<size_t>(i)];
        for (Eigen::Index k = 0; k < d; ++k) {
            const auto& e = edges[static_cast<size_t>(k)];
            x(i, k) = std::clamp((r.features[static_cast<size_t>(k)] - e.front()) / (e.back() - e.front()), 0.0, 1.0);
        }
        x(i, d) = 1.0;
        y(i) = r.label;
        w(i) = r.weight;
    }
    if (!(w.sum() > 0.0)) throw ValidationError("total weight is zero");
    w /= w.sum();
    Eigen::VectorXd coef = Eigen::VectorXd::Zero(d + 1);
    for (int it = 0; it < 500; ++it) {
        const Eigen::VectorXd p = (1.0 + (-(x * coef).array()).exp()).inverse().matrix();
        coef -= 0.1 * (x.transpose() * w.cwiseProduct(p - y));
    }
    return coef;
}

EmpiricalDistribution build_table(const std::vector<ParsedRow>& rows, const BinEdges& edges, const Alphabet& alphabet) {
    std::vector<Record> records;
    records.reserve(rows.size());
    for (const auto& r : rows) records.push_back({alphabet.bins[flat_bin(r, edges)], r.label, r.group, r.weight});
    return build_empirical(records, alphabet);
}

} // namespace

IngestedData ingest_tables(const CsvTable& source, const std::optional<CsvTable>& target, const DatasetSchema& schema) {
    schema.validate();
    const std::vector<ParsedRow> src = parse_rows(source, schema);
    const std::optional<std::vector<ParsedRow>> tgt =
        target ? std::optional(parse_rows(*target, schema)) : std::nullopt;

    const BinEdges edges = compute_edges(src, schema);
    Alphabet alphabet;
    alphabet.bins = bin_ids(edges);
    alphabet.labels = {0, 1};
    std::set<std::string> groups;
    for (const auto& r : src) groups.insert(r.group);
    if (tgt)
        for (const auto& r : *tgt) groups.insert(r.group);
    if (groups.size() < 2) throw ValidationError("at least two groups required");
    alphabet.groups.assign(groups.begin(), groups.end());

    IngestedData out{build_table(src, edges, alphabet),
                     tgt ? std::optional(build_table(*tgt, edges, alphabet)) : std::nullopt,
                     ScoreTable{alphabet.bins, alphabet.groups, Eigen::MatrixXd::Zero(0, 0)},
                     edges,
                     Eigen::VectorXd()};

    const auto n_bins = static_cast<Eigen::Index>(alphabet.bins.size());
    const auto n_groups = static_cast<Eigen::Index>(alphabet.groups.size());
    if (schema.score_column) {
        Eigen::MatrixXd sum_s = Eigen::MatrixXd::Zero(n_bins, n_groups), sum_w = sum_s;
        Eigen::MatrixXd sum_t = sum_s, sum_tw = sum_s;
        auto accumulate = [&](const std::vector<ParsedRow>& rows, Eigen::MatrixXd& s, Eigen::MatrixXd& w) {
            for (const auto& r : rows) {
                const auto x = static_cast<Eigen::Index>(flat_bin(r, edges));
                const auto g = *out.source.group_index(r.group);
                s(x, g) += r.weight * *r.score;
                w(x, g) += r.weight;
            }
        };
        accumulate(src, sum_s, sum_w);
        if (tgt) accumulate(*tgt, sum_t, sum_tw);
        Eigen::MatrixXd scores = Eigen::MatrixXd::Zero(n_bins, n_groups);
        for (Eigen::Index g = 0; g < n_groups; ++g)
            for (Eigen::Index x = 0; x < n_bins; ++x) {
                if (sum_w(x, g) > 0.0)
                    scores(x, g) = sum_s(x, g) / sum_w(x, g);
                else if (sum_tw(x, g) > 0.0)
                    scores(x, g) = sum_t(x, g) / sum_tw(x, g);
            }
        out.scores.scores = std::move(scores);
    } else {
        out.coefficients = fit_logistic(src, edges);
        const Eigen::MatrixXd centres = bin_centres(edges);
        const Eigen::Index d = centres.cols();
        const Eigen::VectorXd z = centres * out.coefficients.head(d) +
                                  Eigen::VectorXd::Constant(n_bins, out.coefficients(d));
        const Eigen::VectorXd score = (1.0 + (-z.array()).exp()).inverse().matrix();
        out.scores.scores = score.replicate(1, n_groups);
    }
    return out;
}

IngestedData ingest(const std::string& source_path, const std::optional<std::string>& target_path,
                    const DatasetSchema& schema) {
    return ingest_tables(read_csv(source_path), target_path ? std::optional(read_csv(*target_path)) : std::nullopt,
                         schema);
}

MetricKind parse_metric(const std::string& name) {
    if (name == "dp") return MetricKind::dp;
    if (name == "eo") return MetricKind::eo;
    if (name == "eop") return MetricKind::eop;
    if (name == "dp-multi") return MetricKind::dp_multi;
    throw ValidationError("unknown metric: " + name);
}

std::string to_string(MetricKind kind) {
    switch (kind) {
    case MetricKind::dp: return "dp";
    case MetricKind::eo: return "eo";
    case MetricKind::eop: return "eop";
    case MetricKind::dp_multi: return "dp-multi";
    }
    return "unknown";
}

MaybeRate metric_value(MetricKind metric, const GroupOutcomeStats& stats, PairConvention convention) {
    switch (metric) {
    case MetricKind::dp: return disparity_dp(stats, convention);
    case MetricKind::dp_multi: return disparity_dp_multiclass(stats, convention);
    case MetricKind::eop:
    case MetricKind::eo: {
        if (!stats.binary) throw ValidationError("binary task required");
        const Eigen::Index n = stats.num_groups();
        Eigen::VectorXd tpr(n), fpr(n);
        for (Eigen::Index g = 0; g < n; ++g) {
            const auto& tp = stats.beta_plus[static_cast<size_t>(g)];
            const auto& fp = stats.beta_minus[static_cast<size_t>(g)];
            if (!tp || (metric == MetricKind::eo && !fp)) return std::nullopt;
            tpr(g) = *tp;
            fpr(g) = fp.value_or(0.0);
        }
        const double v = pairwise_spread(tpr, convention);
        return metric == MetricKind::eop ? v : v + pairwise_spread(fpr, convention);
    }
    }
    return std::nullopt;
}

double metric_cap(MetricKind metric, Eigen::Index n_groups, Eigen::Index n_classes, PairConvention convention) {
    switch (metric) {
    case MetricKind::dp:
    case MetricKind::eop: return max_binary_spread(n_groups, convention);
    case MetricKind::eo: return 2.0 * max_binary_spread(n_groups, convention);
    case MetricKind::dp_multi: return multiclass_cap(n_groups, n_classes, convention);
    }
    return std::numeric_limits<double>::infinity();
}

DivergenceKind divergence_for(BoundKind kind) {
    switch (kind) {
    case BoundKind::dp_covariate:
    case BoundKind::dp_covariate_multi:
    case BoundKind::strategic_derived:
    case BoundKind::strategic_literal: return DivergenceKind::var_omega;
    case BoundKind::dp_label:
    case BoundKind::replicator:
    case BoundKind::replicator_literal: return DivergenceKind::qual_rate;
    case BoundKind::eop_corners:
    case BoundKind::eop_geometric: return DivergenceKind::weighted_l2;
    case BoundKind::lipschitz: break;
    }
    throw ValidationError("bound kind " + to_string(kind) + " has no fixed divergence");
}

namespace {

void check_metric(const SweepOptions& o) {
    auto need = [&](MetricKind m) {
        if (o.metric != m)
            throw ValidationError("bound " + to_string(o.bound) + " requires metric " + to_string(m));
    };
    switch (o.bound) {
    case BoundKind::dp_covariate:
    case BoundKind::dp_label: need(MetricKind::dp); break;
    case BoundKind::dp_covariate_multi: need(MetricKind::dp_multi); break;
    case BoundKind::eop_geometric: need(MetricKind::eop); break;
    case BoundKind::lipschitz:
        if (!o.lipschitz) throw ValidationError("lipschitz bound requires Lipschitz constants");
        if (!o.budget) throw ValidationError("lipschitz bound requires an explicit budget");
        break;
    case BoundKind::eop_corners:
        throw ValidationError("eop-corners needs explicit TPR intervals; use the bound subcommand or eop-geometric");
    default: throw ValidationError("bound " + to_string(o.bound) + " is produced by the simulate subcommand");
    }
}

bool rates_defined(const GroupOutcomeStats& stats, bool need_fpr) {
    for (Eigen::Index g = 0; g < stats.num_groups(); ++g) {
        if (!stats.beta_plus[static_cast<size_t>(g)]) return false;
        if (need_fpr && !stats.beta_minus[static_cast<size_t>(g)]) return false;
    }
    return true;
}

} // namespace

ShiftBudget sweep_budget(const EmpiricalDistribution& source, const EmpiricalDistribution& target,
                         const SweepOptions& options) {
    const DivergenceKind kind =
        options.bound == BoundKind::lipschitz ? options.lipschitz_divergence : divergence_for(options.bound);
    if (options.budget) {
        if (options.budget->size() != source.num_groups())
            throw ValidationError("explicit budget needs one entry per group");
        return ShiftBudget(kind, *options.budget);
    }
    return realized_budget(kind, target, source);
}

CellResult evaluate_policy(const Policy& policy, const EmpiricalDistribution& source,
                           const std::optional<EmpiricalDistribution>& target, const ShiftBudget& budget,
                           const SweepOptions& options, std::uint64_t oracle_seed) {
    check_metric(options);
    const GroupOutcomeStats s_stats = outcome_stats(policy, source);
    CellResult out;
    out.delta_source = metric_value(options.metric, s_stats, options.convention);
    if (target) out.delta_target = metric_value(options.metric, outcome_stats(policy, *target), options.convention);

    switch (options.bound) {
    case BoundKind::dp_covariate: out.report = bound_dp_covariate(s_stats, budget, options.convention); break;
    case BoundKind::dp_covariate_multi:
        out.report = bound_dp_covariate_multiclass(s_stats, budget, options.convention);
        break;
    case BoundKind::dp_label:
        if (rates_defined(s_stats, true)) out.report = bound_dp_label(s_stats, budget, options.convention);
        break;
    case BoundKind::eop_geometric:
        if (rates_defined(s_stats, false))
            out.report = bound_eop_geometric(policy, source, budget, options.convention);
        break;
    case BoundKind::lipschitz:
        if (out.delta_source)
            out.report = lipschitz_bound(
                *out.delta_source, LipschitzVector(budget.kind, *options.lipschitz), budget,
                metric_cap(options.metric, source.num_groups(),
                           static_cast<Eigen::Index>(policy.predicted_labels().size()), options.convention));
        break;
    default: break;
    }
    if (out.report) out.bound = out.report->bound;

    if (options.oracle) {
        switch (options.bound) {
        case BoundKind::dp_label:
            out.oracle = sup_dp_label_shift(policy, source, budget, options.convention).v_estimate;
            break;
        case BoundKind::dp_covariate: {
            SearchOptions search = options.search;
            search.seed = oracle_seed;
            out.oracle = sup_dp_covariate_shift(policy, source, budget, search, options.convention).v_estimate;
            break;
        }
        case BoundKind::eop_geometric:
            if (rates_defined(s_stats, false))
                out.oracle = sup_eop_covariate_shift(policy, source, budget, options.eop_samples, oracle_seed,
                                                     options.convention)
                                 .v_estimate;
            break;
        default: throw ValidationError("no oracle for bound kind " + to_string(options.bound));
        }
    }
    return out;
}

SweepGrid sweep(const EmpiricalDistribution& source, const EmpiricalDistribution& target, const ScoreTable& scores,
                const std::vector<double>& tau_g, const std::vector<double>& tau_h, const SweepOptions& options) {
    if (tau_g.empty() || tau_h.empty()) throw ValidationError("empty grid");
    if (source.num_groups() != 2) throw ValidationError("sweep requires exactly two groups");
    if (!source.same_alphabets(target)) throw ValidationError("source and target alphabets differ");
    check_metric(options);
    const ShiftBudget budget = sweep_budget(source, target, options);

    SweepGrid grid;
    grid.axis_g = tau_g;
    grid.axis_h = tau_h;
    grid.has_oracle = options.oracle;
    grid.extra_columns = {"budget_g", "budget_h"};
    grid.meta.seed = options.seed;
    grid.meta.bound_kind = to_string(options.bound);
    grid.meta.metric = to_string(options.metric);
    grid.meta.convention = to_string(options.convention);
    grid.meta.groups = source.groups();
    grid.cells.resize(tau_g.size() * tau_h.size());
    const std::uint64_t seed = options.seed.value_or(0);
    parallel_for(grid.cells.size(), [&](size_t idx) {
        const double tg = tau_g[idx / tau_h.size()], th = tau_h[idx % tau_h.size()];
        const Policy policy = threshold_policy(scores, Eigen::Vector2d(tg, th));
        const CellResult r = evaluate_policy(policy, source, target, budget, options, stream_seed(seed, idx));
        GridCell& cell = grid.cells[idx];
        cell.axis_g = tg;
        cell.axis_h = th;
        cell.delta_source = r.delta_source;
        cell.delta_target = r.delta_target;
        cell.bound = r.bound;
        cell.oracle = r.oracle;
        cell.extra = {budget.per_group(0), budget.per_group(1)};
    });
    return grid;
}

} // namespace fairshift
