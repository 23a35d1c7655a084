#pragma once

#include "fairshift/disparity.hpp"
#include "fairshift/distribution.hpp"
#include "fairshift/shift.hpp"

#include <Eigen/Dense>

#include <string>

namespace fairshift {

enum class BoundKind {
    lipschitz,
    dp_covariate,
    dp_covariate_multi,
    dp_label,
    eop_corners,
    eop_geometric,
    strategic_derived,
    strategic_literal,
    replicator,
    replicator_literal
};

BoundKind parse_bound_kind(const std::string& name);
std::string to_string(BoundKind kind);

/// Per-group Lipschitz constants for the supremal disparity with respect to the budget.
struct LipschitzVector {
    DivergenceKind kind = DivergenceKind::var_omega;
    Eigen::VectorXd per_group;

    LipschitzVector() = default;
    LipschitzVector(DivergenceKind k, Eigen::VectorXd l);
};

/**
 * Upper bound on the target disparity. `bound` is clipped at `cap` (the largest value the
 * metric can take); `unclipped` keeps the raw closed form. per_group_terms(g) is the
 * increment attributed to group g, so unclipped == source_disparity + per_group_terms.sum().
 */
struct BoundReport {
    BoundKind kind = BoundKind::lipschitz;
    PairConvention convention = PairConvention::unordered;
    double source_disparity = 0.0;
    double bound = 0.0;
    double unclipped = 0.0;
    double cap = 0.0;
    Eigen::VectorXd per_group_terms;
    ShiftBudget budget;
    /// Echo of the per-group statistic each term was built from (e.g. beta_g or |b+ - b-|).
    Eigen::VectorXd coefficients;
};

/// Assemble a report from source disparity and per-group increments, applying the cap.
BoundReport make_report(BoundKind kind, PairConvention convention, double source_disparity,
                        Eigen::VectorXd per_group_terms, double cap, ShiftBudget budget, Eigen::VectorXd coefficients);

BoundReport lipschitz_bound(double source_disparity, const LipschitzVector& lipschitz, const ShiftBudget& budget,
                            double cap = std::numeric_limits<double>::infinity());

BoundReport bound_dp_covariate(const GroupOutcomeStats& stats, const ShiftBudget& budget,
                               PairConvention convention = PairConvention::unordered);

BoundReport bound_dp_covariate_multiclass(const GroupOutcomeStats& stats, const ShiftBudget& budget,
                                          PairConvention convention = PairConvention::unordered);

BoundReport bound_dp_label(const GroupOutcomeStats& stats, const ShiftBudget& budget,
                           PairConvention convention = PairConvention::unordered);

/// Maximum of the EOp spread over all 2^n assignments x_g in {l_g, u_g}; n <= 16.
double bound_eop_corners(const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                         PairConvention convention = PairConvention::unordered);

/// Report form of the corner bound for given TPR intervals, clipped at eop_cap.
BoundReport bound_eop_report(const GroupOutcomeStats& stats, const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                             const ShiftBudget& budget, PairConvention convention = PairConvention::unordered);

/// Largest possible EOp disparity: floor(n/2)*ceil(n/2), doubled under the ordered convention.
double eop_cap(Eigen::Index n_groups, PairConvention convention = PairConvention::unordered);

/// Largest possible multi-class DP disparity over k predicted labels.
double multiclass_cap(Eigen::Index n_groups, Eigen::Index n_classes, PairConvention convention);

/// |b+_g - b-_g| per group; throws if a rate is undefined.
Eigen::VectorXd rate_gap(const GroupOutcomeStats& stats);

} // namespace fairshift
