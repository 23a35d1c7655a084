#pragma once

#include "fairshift/bounds.hpp"
#include "fairshift/distribution.hpp"
#include "fairshift/grid.hpp"
#include "fairshift/oracle.hpp"
#include "fairshift/shift.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace fairshift {

struct DatasetSchema {
    std::vector<std::string> feature_columns;
    std::vector<int> bin_counts;
    std::string label_column;
    std::string group_column;
    std::optional<std::string> score_column;
    std::optional<std::string> weight_column;
    /// Optional fixed [lo, hi] per feature; otherwise the source min/max is used.
    std::vector<std::pair<double, double>> feature_ranges;

    void validate() const;
};

DatasetSchema parse_schema(const std::string& json_text);
DatasetSchema load_schema(const std::string& path);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Index of a header column; throws ValidationError("missing column: ...").
    size_t column(const std::string& name) const;
};

/// RFC-4180 parser: quoted fields, doubled quotes, CRLF or LF records.
CsvTable parse_csv(const std::string& text);
CsvTable read_csv(const std::string& path);

/// Quote a field if it contains a comma, quote or line break.
std::string csv_field(const std::string& value);

/// Equal-width edges (n + 1 values) per feature.
using BinEdges = std::vector<std::vector<double>>;

struct IngestedData {
    EmpiricalDistribution source;
    std::optional<EmpiricalDistribution> target;
    ScoreTable scores;
    BinEdges edges;
    /// Logistic coefficients (bias last) when scores were fitted, empty otherwise.
    Eigen::VectorXd coefficients;
};

/**
 * Bin the feature columns on edges computed from the source, reuse them for the target,
 * and build both tables over the full cross product of bins. Groups are the sorted union
 * over both files. Scores are the score column averaged per (bin, group), or a logistic
 * fit on the source evaluated at bin centres.
 */
IngestedData ingest(const std::string& source_path, const std::optional<std::string>& target_path,
                    const DatasetSchema& schema);
IngestedData ingest_tables(const CsvTable& source, const std::optional<CsvTable>& target, const DatasetSchema& schema);

enum class MetricKind { dp, eo, eop, dp_multi };

MetricKind parse_metric(const std::string& name);
std::string to_string(MetricKind kind);

/// Disparity of the given kind from stats; nullopt if a needed conditional rate is undefined.
MaybeRate metric_value(MetricKind metric, const GroupOutcomeStats& stats, PairConvention convention);

/// Largest value the metric can take for n groups and k predicted labels.
double metric_cap(MetricKind metric, Eigen::Index n_groups, Eigen::Index n_classes, PairConvention convention);

/// Divergence a bound kind is stated for.
DivergenceKind divergence_for(BoundKind kind);

struct SweepOptions {
    MetricKind metric = MetricKind::dp;
    BoundKind bound = BoundKind::dp_covariate;
    PairConvention convention = PairConvention::unordered;
    /// Explicit budget; the realized divergence D(T || S) is used when empty.
    std::optional<Eigen::VectorXd> budget;
    /// Divergence of an explicit lipschitz budget.
    DivergenceKind lipschitz_divergence = DivergenceKind::var_omega;
    std::optional<Eigen::VectorXd> lipschitz;
    bool oracle = false;
    std::optional<std::uint64_t> seed;
    SearchOptions search;
    std::uint64_t eop_samples = 10000;
};

/// Single-cell evaluation shared by `bound` and `sweep`.
struct CellResult {
    MaybeRate delta_source;
    MaybeRate delta_target;
    MaybeRate bound;
    MaybeRate oracle;
    std::optional<BoundReport> report;
};

CellResult evaluate_policy(const Policy& policy, const EmpiricalDistribution& source,
                           const std::optional<EmpiricalDistribution>& target, const ShiftBudget& budget,
                           const SweepOptions& options, std::uint64_t oracle_seed);

/// Budget used for a sweep: the explicit one if given, else the realized divergence.
ShiftBudget sweep_budget(const EmpiricalDistribution& source, const EmpiricalDistribution& target,
                         const SweepOptions& options);

/// Grid of threshold policies (tau_g, tau_h) over a two-group dataset, row-major.
SweepGrid sweep(const EmpiricalDistribution& source, const EmpiricalDistribution& target, const ScoreTable& scores,
                const std::vector<double>& tau_g, const std::vector<double>& tau_h, const SweepOptions& options);

} // namespace fairshift
