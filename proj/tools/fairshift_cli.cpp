// fairshift command-line driver.
//
// Exit codes: 0 success, 2 validation error, 3 infeasible oracle.

#include "fairshift/bounds.hpp"
#include "fairshift/disparity.hpp"
#include "fairshift/emit.hpp"
#include "fairshift/errors.hpp"
#include "fairshift/geometry.hpp"
#include "fairshift/harness.hpp"
#include "fairshift/oracle.hpp"
#include "fairshift/simulators.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace fairshift;
using ojson = nlohmann::ordered_json;

namespace {

Eigen::VectorXd parse_list(const std::string& text, const std::string& what) {
    std::vector<double> values;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            size_t used = 0;
            values.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ValidationError(what + ": not a number: '" + item + "'");
        }
    }
    if (values.empty()) throw ValidationError(what + ": empty list");
    return Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

std::optional<std::uint64_t> resolve_seed(const std::optional<std::uint64_t>& flag) {
    if (flag) return flag;
    if (const char* env = std::getenv("FAIRSHIFT_SEED")) {
        try {
            size_t used = 0;
            const auto v = std::stoull(env, &used);
            if (used == std::string(env).size()) return v;
        } catch (const std::exception&) {
        }
        throw ValidationError("FAIRSHIFT_SEED is not an unsigned integer");
    }
    return std::nullopt;
}

ojson vec(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

ojson maybe(const MaybeRate& v) { return v ? ojson(*v) : ojson(nullptr); }

ojson report_json(const BoundReport& r, const std::vector<std::string>& groups) {
    ojson j;
    j["kind"] = to_string(r.kind);
    j["convention"] = to_string(r.convention);
    j["source_disparity"] = r.source_disparity;
    j["bound"] = r.bound;
    j["unclipped"] = r.unclipped;
    j["cap"] = r.cap;
    j["groups"] = groups;
    j["per_group_terms"] = vec(r.per_group_terms);
    j["budget"] = {{"kind", to_string(r.budget.kind)}, {"per_group", vec(r.budget.per_group)}};
    j["coefficients"] = vec(r.coefficients);
    return j;
}

void write_text(const std::string& text, const std::string& out) {
    if (out.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(out, std::ios::binary | std::ios::trunc);
    if (!f) throw ValidationError("cannot write " + out);
    f << text;
}

Policy policy_from(const IngestedData& data, const std::string& tau_text) {
    const Eigen::Index n = data.source.num_groups();
    Eigen::VectorXd tau = tau_text.empty() ? Eigen::VectorXd::Constant(n, 0.5) : parse_list(tau_text, "--tau");
    if (tau.size() == 1 && n > 1) tau = Eigen::VectorXd::Constant(n, tau(0));
    if (tau.size() != n) throw ValidationError("--tau needs one threshold per group");
    return threshold_policy(data.scores, tau);
}

ojson stats_json(const GroupOutcomeStats& s) {
    ojson j;
    j["beta"] = vec(s.beta);
    ojson tp = ojson::array(), fp = ojson::array();
    for (const auto& v : s.beta_plus) tp.push_back(maybe(v));
    for (const auto& v : s.beta_minus) fp.push_back(maybe(v));
    j["beta_plus"] = tp;
    j["beta_minus"] = fp;
    j["qual"] = vec(s.qual);
    return j;
}

/// Strategic source/target CSVs (exact masses in a weight column) and their schema.
void write_strategic_dataset(const std::string& dir, const StrategicParams& params) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const EmpiricalDistribution source = strategic_source(2, params.bins);
    const EmpiricalDistribution target = strategic_target(source, params);
    const Eigen::VectorXd mid = bin_midpoints(params.bins);
    auto dump = [&](const EmpiricalDistribution& d, const std::string& name) {
        std::string text = "x,y,group,weight,score\n";
        for (Eigen::Index g = 0; g < d.num_groups(); ++g)
            for (Eigen::Index x = 0; x < d.num_bins(); ++x)
                for (Eigen::Index y = 0; y < 2; ++y)
                    text += format_double(mid(x)) + "," + std::to_string(d.labels()[static_cast<size_t>(y)]) + "," +
                            csv_field(d.groups()[static_cast<size_t>(g)]) + "," + format_double(d.mass(x, y, g)) +
                            "," + format_double(mid(x)) + "\n";
        write_text(text, (fs::path(dir) / name).string());
    };
    dump(source, "strategic_source.csv");
    dump(target, "strategic_target.csv");
    ojson schema;
    schema["feature_columns"] = {"x"};
    schema["bin_counts"] = {params.bins};
    schema["label_column"] = "y";
    schema["group_column"] = "group";
    schema["score_column"] = "score";
    schema["weight_column"] = "weight";
    schema["feature_ranges"] = {{0.0, 1.0}};
    write_text(schema.dump(2) + "\n", (fs::path(dir) / "schema.json").string());
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"fairshift: group-fairness disparities and their transfer under distribution shift"};
    app.require_subcommand(1);

    std::string source, target, schema_path, metric = "dp", bound = "dp-covariate", budget_text = "realized";
    std::string tau_grid = "0.05:0.95:19", tau_grid_h, out, format = "json", tau_text, pairs = "unordered";
    std::string lipschitz_text, lower_text, upper_text, utilities_text = "2,1,1,2", divergence = "var-omega";
    std::string dataset_out;
    std::optional<std::uint64_t> seed_flag;
    double m = 0.06, acceptance = 0.5;
    Eigen::Index bins = 1000;
    std::optional<Eigen::Index> replicator_bins;
    bool with_oracle = false;
    std::uint64_t proposals = 2000, samples = 100000;
    unsigned restarts = 4;

    auto add_data = [&](CLI::App* c, bool need_target) {
        c->add_option("--source", source, "source dataset CSV")->required()->check(CLI::ExistingFile);
        auto* t = c->add_option("--target", target, "target dataset CSV")->check(CLI::ExistingFile);
        if (need_target) t->required();
        c->add_option("--schema", schema_path, "dataset schema JSON")->required()->check(CLI::ExistingFile);
        c->add_option("--pairs", pairs, "pair convention")->check(CLI::IsMember({"unordered", "ordered"}));
    };
    auto add_output = [&](CLI::App* c) {
        c->add_option("--out", out, "output file (stdout if omitted)");
        c->add_option("--format", format, "output format")->check(CLI::IsMember({"json", "csv"}));
    };
    const auto metric_names = CLI::IsMember({"dp", "eo", "eop", "dp-multi"});
    const auto bound_names = CLI::IsMember(
        {"dp-covariate", "dp-covariate-multi", "dp-label", "eop-corners", "eop-geometric", "lipschitz"});

    auto* disparity_cmd = app.add_subcommand("disparity", "disparity of a threshold policy");
    add_data(disparity_cmd, false);
    disparity_cmd->add_option("--metric", metric)->check(metric_names);
    disparity_cmd->add_option("--tau", tau_text, "per-group thresholds (comma separated)");
    disparity_cmd->add_option("--out", out);

    auto* bound_cmd = app.add_subcommand("bound", "transfer bound for a threshold policy");
    add_data(bound_cmd, false);
    bound_cmd->add_option("--metric", metric)->check(metric_names);
    bound_cmd->add_option("--bound", bound)->check(bound_names);
    bound_cmd->add_option("--budget", budget_text, "per-group list or 'realized'");
    bound_cmd->add_option("--divergence", divergence, "budget divergence for lipschitz")
        ->check(CLI::IsMember({"var-omega", "qual-rate", "weighted-l2"}));
    bound_cmd->add_option("--lipschitz", lipschitz_text, "per-group Lipschitz constants");
    bound_cmd->add_option("--lower", lower_text, "per-group TPR lower ends (eop-corners)");
    bound_cmd->add_option("--upper", upper_text, "per-group TPR upper ends (eop-corners)");
    bound_cmd->add_option("--tau", tau_text, "per-group thresholds");
    bound_cmd->add_option("--out", out);

    auto* simulate_cmd = app.add_subcommand("simulate", "synthetic shift models");
    simulate_cmd->require_subcommand(1);
    auto* strategic_cmd = simulate_cmd->add_subcommand("strategic", "strategic response grid");
    strategic_cmd->add_option("--tau-grid", tau_grid, "lo:hi:n for both thresholds");
    strategic_cmd->add_option("--m", m, "manipulation budget");
    strategic_cmd->add_option("--bins", bins, "feature bins");
    strategic_cmd->add_option("--pairs", pairs)->check(CLI::IsMember({"unordered", "ordered"}));
    strategic_cmd->add_option("--dataset-out", dataset_out, "also write source/target CSVs and schema here");
    strategic_cmd->add_option("--tau", tau_text, "thresholds the written dataset responds to");
    add_output(strategic_cmd);
    auto* replicator_cmd = simulate_cmd->add_subcommand("replicator", "replicator dynamics grid");
    replicator_cmd->add_option("--tau-grid,--q-grid", tau_grid, "lo:hi:n for both qualification rates");
    replicator_cmd->add_option("--utilities", utilities_text, "U00,U01,U10,U11");
    replicator_cmd->add_option("--acceptance", acceptance, "common acceptance rate of the DP-fair policy");
    replicator_cmd->add_option("--bins", replicator_bins, "feature bins");
    replicator_cmd->add_option("--pairs", pairs)->check(CLI::IsMember({"unordered", "ordered"}));
    add_output(replicator_cmd);

    auto* oracle_cmd = app.add_subcommand("oracle", "adversarial supremum of the disparity");
    add_data(oracle_cmd, false);
    oracle_cmd->add_option("--bound", bound, "shift model")
        ->check(CLI::IsMember({"dp-label", "dp-covariate", "eop-geometric"}));
    oracle_cmd->add_option("--budget", budget_text, "per-group list or 'realized'");
    oracle_cmd->add_option("--tau", tau_text, "per-group thresholds");
    oracle_cmd->add_option("--seed", seed_flag);
    oracle_cmd->add_option("--proposals", proposals);
    oracle_cmd->add_option("--restarts", restarts);
    oracle_cmd->add_option("--samples", samples);
    oracle_cmd->add_option("--out", out);

    auto* sweep_cmd = app.add_subcommand("sweep", "bound and realized disparity over a threshold grid");
    add_data(sweep_cmd, true);
    sweep_cmd->add_option("--metric", metric)->check(metric_names);
    sweep_cmd->add_option("--bound", bound)->check(bound_names);
    sweep_cmd->add_option("--budget", budget_text, "per-group list or 'realized'");
    sweep_cmd->add_option("--divergence", divergence)->check(CLI::IsMember({"var-omega", "qual-rate", "weighted-l2"}));
    sweep_cmd->add_option("--lipschitz", lipschitz_text);
    sweep_cmd->add_option("--tau-grid", tau_grid, "lo:hi:n");
    sweep_cmd->add_option("--tau-grid-h", tau_grid_h, "lo:hi:n for the second group (defaults to --tau-grid)");
    sweep_cmd->add_option("--seed", seed_flag);
    sweep_cmd->add_flag("--oracle", with_oracle, "add an oracle column");
    sweep_cmd->add_option("--proposals", proposals);
    sweep_cmd->add_option("--restarts", restarts);
    sweep_cmd->add_option("--samples", samples);
    add_output(sweep_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        const PairConvention convention = parse_pair_convention(pairs);
        SweepOptions options;
        options.metric = parse_metric(metric);
        options.bound = parse_bound_kind(bound);
        options.convention = convention;
        options.seed = resolve_seed(seed_flag);
        options.oracle = with_oracle;
        options.search.proposals = proposals;
        options.search.restarts = restarts;
        options.eop_samples = samples;
        options.lipschitz_divergence = parse_divergence_kind(divergence);
        if (!lipschitz_text.empty()) options.lipschitz = parse_list(lipschitz_text, "--lipschitz");
        if (budget_text != "realized") options.budget = parse_list(budget_text, "--budget");

        auto load = [&] {
            const DatasetSchema schema = load_schema(schema_path);
            return ingest(source, target.empty() ? std::nullopt : std::optional(target), schema);
        };

        if (*disparity_cmd) {
            const IngestedData data = load();
            const Policy policy = policy_from(data, tau_text);
            const GroupOutcomeStats stats = outcome_stats(policy, data.source);
            ojson j;
            j["metric"] = metric;
            j["convention"] = pairs;
            j["groups"] = data.source.groups();
            j["value"] = maybe(metric_value(options.metric, stats, convention));
            j["stats"] = stats_json(stats);
            write_text(j.dump(2) + "\n", out);
            return 0;
        }

        if (*bound_cmd) {
            const IngestedData data = load();
            const Policy policy = policy_from(data, tau_text);
            ojson j;
            if (options.bound == BoundKind::eop_corners) {
                if (lower_text.empty() || upper_text.empty())
                    throw ValidationError("eop-corners requires --lower and --upper");
                const GroupOutcomeStats stats = outcome_stats(policy, data.source);
                const ShiftBudget zero = ShiftBudget::zero(DivergenceKind::weighted_l2, stats.num_groups());
                j = report_json(bound_eop_report(stats, parse_list(lower_text, "--lower"),
                                                 parse_list(upper_text, "--upper"), zero, convention),
                                data.source.groups());
            } else {
                if (!options.budget && !data.target) throw ValidationError("--budget realized requires --target");
                const ShiftBudget budget = options.budget
                                               ? ShiftBudget(options.bound == BoundKind::lipschitz
                                                                 ? options.lipschitz_divergence
                                                                 : divergence_for(options.bound),
                                                             *options.budget)
                                               : sweep_budget(data.source, *data.target, options);
                const CellResult r = evaluate_policy(policy, data.source, data.target, budget, options, 0);
                if (!r.report) throw ValidationError("bound undefined: a conditional rate has zero mass");
                j = report_json(*r.report, data.source.groups());
                j["delta_target"] = maybe(r.delta_target);
            }
            write_text(j.dump(2) + "\n", out);
            return 0;
        }

        if (*strategic_cmd) {
            const SweepGrid grid = strategic_grid(parse_axis(tau_grid), m, bins, convention);
            if (!dataset_out.empty()) {
                StrategicParams params;
                params.tau = tau_text.empty() ? Eigen::VectorXd(Eigen::Vector2d(0.4, 0.6)) : parse_list(tau_text, "--tau");
                params.m = params.tau.unaryExpr([&](double t) { return std::min({m, t, 1.0 - t}); });
                params.bins = bins;
                write_strategic_dataset(dataset_out, params);
            }
            write_text(render(grid, parse_grid_format(format)), out);
            return 0;
        }

        if (*replicator_cmd) {
            const Eigen::VectorXd u = parse_list(utilities_text, "--utilities");
            if (u.size() != 4) throw ValidationError("--utilities needs U00,U01,U10,U11");
            ReplicatorGridConfig config;
            config.utilities << u(0), u(1), u(2), u(3);
            config.acceptance = acceptance;
            if (replicator_bins) config.bins = *replicator_bins;
            const SweepGrid grid = replicator_grid(parse_axis(tau_grid), config, convention);
            write_text(render(grid, parse_grid_format(format)), out);
            return 0;
        }

        if (*oracle_cmd) {
            const IngestedData data = load();
            const Policy policy = policy_from(data, tau_text);
            if (!options.budget && !data.target) throw ValidationError("--budget realized requires --target");
            const ShiftBudget budget = options.budget ? ShiftBudget(divergence_for(options.bound), *options.budget)
                                                      : sweep_budget(data.source, *data.target, options);
            const std::uint64_t seed = options.seed.value_or(0);
            OracleResult r;
            if (options.bound == BoundKind::dp_label) {
                r = sup_dp_label_shift(policy, data.source, budget, convention);
            } else if (options.bound == BoundKind::dp_covariate) {
                SearchOptions search = options.search;
                search.seed = seed;
                r = sup_dp_covariate_shift(policy, data.source, budget, search, convention);
            } else {
                r = sup_eop_covariate_shift(policy, data.source, budget, samples, seed, convention);
            }
            ojson j;
            j["bound_kind"] = bound;
            j["convention"] = pairs;
            j["groups"] = data.source.groups();
            j["v_estimate"] = r.v_estimate;
            j["exact"] = r.exact;
            j["evaluations"] = r.evaluations;
            j["generator"] = r.generator;
            j["seed"] = r.seed ? ojson(*r.seed) : ojson(nullptr);
            j["found_lower"] = vec(r.found_lower);
            j["found_upper"] = vec(r.found_upper);
            write_text(j.dump(2) + "\n", out);
            return 0;
        }

        if (*sweep_cmd) {
            const DatasetSchema schema = load_schema(schema_path);
            const IngestedData data = ingest(source, target, schema);
            const std::vector<double> axis_g = parse_axis(tau_grid);
            const std::vector<double> axis_h = tau_grid_h.empty() ? axis_g : parse_axis(tau_grid_h);
            SweepGrid grid = sweep(data.source, *data.target, data.scores, axis_g, axis_h, options);
            grid.meta.schema = std::filesystem::path(schema_path).filename().string();
            grid.meta.bin_edges = data.edges;
            const GridFormat fmt = parse_grid_format(format);
            if (out.empty())
                std::cout << render(grid, fmt);
            else
                emit(grid, fmt, out);
            return 0;
        }
    } catch (const InfeasibleError& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
