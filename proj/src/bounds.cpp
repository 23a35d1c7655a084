#include "fairshift/bounds.hpp"

#include "fairshift/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace fairshift {

BoundKind parse_bound_kind(const std::string& name) {
    if (name == "lipschitz") return BoundKind::lipschitz;
    if (name == "dp-covariate") return BoundKind::dp_covariate;
    if (name == "dp-covariate-multi") return BoundKind::dp_covariate_multi;
    if (name == "dp-label") return BoundKind::dp_label;
    if (name == "eop-corners") return BoundKind::eop_corners;
    if (name == "eop-geometric") return BoundKind::eop_geometric;
    if (name == "strategic-derived") return BoundKind::strategic_derived;
    if (name == "strategic-literal") return BoundKind::strategic_literal;
    if (name == "replicator") return BoundKind::replicator;
    if (name == "replicator-literal") return BoundKind::replicator_literal;
    throw ValidationError("unknown bound kind: " + name);
}

std::string to_string(BoundKind kind) {
    switch (kind) {
    case BoundKind::lipschitz: return "lipschitz";
    case BoundKind::dp_covariate: return "dp-covariate";
    case BoundKind::dp_covariate_multi: return "dp-covariate-multi";
    case BoundKind::dp_label: return "dp-label";
    case BoundKind::eop_corners: return "eop-corners";
    case BoundKind::eop_geometric: return "eop-geometric";
    case BoundKind::strategic_derived: return "strategic-derived";
    case BoundKind::strategic_literal: return "strategic-literal";
    case BoundKind::replicator: return "replicator";
    case BoundKind::replicator_literal: return "replicator-literal";
    }
    return "unknown";
}

LipschitzVector::LipschitzVector(DivergenceKind k, Eigen::VectorXd l) : kind(k), per_group(std::move(l)) {
    if (!per_group.allFinite() || (per_group.array() < 0.0).any())
        throw ValidationError("Lipschitz constants must be finite and >= 0");
}

BoundReport make_report(BoundKind kind, PairConvention convention, double source_disparity,
                        Eigen::VectorXd per_group_terms, double cap, ShiftBudget budget, Eigen::VectorXd coefficients) {
    BoundReport r;
    r.kind = kind;
    r.convention = convention;
    r.source_disparity = source_disparity;
    r.per_group_terms = std::move(per_group_terms);
    r.unclipped = source_disparity + r.per_group_terms.sum();
    r.cap = cap;
    r.bound = std::min(r.unclipped, std::max(cap, source_disparity));
    r.budget = std::move(budget);
    r.coefficients = std::move(coefficients);
    return r;
}

BoundReport lipschitz_bound(double source_disparity, const LipschitzVector& lipschitz, const ShiftBudget& budget,
                            double cap) {
    if (lipschitz.kind != budget.kind) throw ValidationError("Lipschitz vector and budget kinds differ");
    if (lipschitz.per_group.size() != budget.per_group.size())
        throw ValidationError("Lipschitz vector and budget sizes differ");
    if (!(source_disparity >= 0.0)) throw ValidationError("source disparity must be >= 0");
    Eigen::VectorXd terms = lipschitz.per_group.cwiseProduct(budget.per_group);
    return make_report(BoundKind::lipschitz, PairConvention::unordered, source_disparity, std::move(terms), cap, budget,
                       lipschitz.per_group);
}

namespace {

void require_kind(const ShiftBudget& b, DivergenceKind kind, Eigen::Index n_groups) {
    if (b.kind != kind) throw ValidationError("budget kind must be " + to_string(kind));
    if (b.per_group.size() != n_groups) throw ValidationError("one budget entry per group required");
}

double group_factor(Eigen::Index n_groups, PairConvention c) {
    return pair_multiplicity(c) * static_cast<double>(n_groups - 1);
}

} // namespace

BoundReport bound_dp_covariate(const GroupOutcomeStats& stats, const ShiftBudget& budget, PairConvention convention) {
    if (!stats.binary) throw ValidationError("binary task required");
    const Eigen::Index n = stats.num_groups();
    require_kind(budget, DivergenceKind::var_omega, n);
    const double factor = group_factor(n, convention);
    Eigen::VectorXd terms(n);
    for (Eigen::Index g = 0; g < n; ++g) {
        const double b = stats.beta(g);
        terms(g) = factor * std::sqrt(std::max(0.0, b * (1.0 - b)) * budget.per_group(g));
    }
    return make_report(BoundKind::dp_covariate, convention, disparity_dp(stats, convention), std::move(terms),
                       max_binary_spread(n, convention), budget, stats.beta);
}

BoundReport bound_dp_covariate_multiclass(const GroupOutcomeStats& stats, const ShiftBudget& budget,
                                          PairConvention convention) {
    const Eigen::Index n = stats.num_groups();
    require_kind(budget, DivergenceKind::var_omega, n);
    const double factor = group_factor(n, convention);
    const Eigen::MatrixXd& rates = stats.class_rates;
    Eigen::VectorXd terms(n);
    for (Eigen::Index g = 0; g < n; ++g) {
        double s = 0.0;
        for (Eigen::Index k = 0; k < rates.cols(); ++k) {
            const double b = rates(g, k);
            s += std::sqrt(std::max(0.0, b * (1.0 - b)) * budget.per_group(g));
        }
        terms(g) = factor * s;
    }
    return make_report(BoundKind::dp_covariate_multi, convention, disparity_dp_multiclass(stats, convention),
                       std::move(terms), multiclass_cap(n, rates.cols(), convention), budget,
                       rates.rowwise().sum());
}

Eigen::VectorXd rate_gap(const GroupOutcomeStats& stats) {
    if (!stats.binary) throw ValidationError("binary task required");
    Eigen::VectorXd gap(stats.num_groups());
    for (Eigen::Index g = 0; g < gap.size(); ++g) {
        const auto& tp = stats.beta_plus[static_cast<size_t>(g)];
        const auto& fp = stats.beta_minus[static_cast<size_t>(g)];
        if (!tp || !fp) throw ValidationError("undefined true/false positive rate for a group");
        gap(g) = std::abs(*tp - *fp);
    }
    return gap;
}

BoundReport bound_dp_label(const GroupOutcomeStats& stats, const ShiftBudget& budget, PairConvention convention) {
    const Eigen::Index n = stats.num_groups();
    require_kind(budget, DivergenceKind::qual_rate, n);
    const Eigen::VectorXd gap = rate_gap(stats);
    Eigen::VectorXd terms = group_factor(n, convention) * budget.per_group.cwiseProduct(gap);
    return make_report(BoundKind::dp_label, convention, disparity_dp(stats, convention), std::move(terms),
                       max_binary_spread(n, convention), budget, gap);
}

double bound_eop_corners(const Eigen::VectorXd& lower, const Eigen::VectorXd& upper, PairConvention convention) {
    const Eigen::Index n = lower.size();
    if (upper.size() != n) throw ValidationError("interval bounds differ in length");
    if (n > 16) throw ValidationError("corner enumeration supports at most 16 groups");
    for (Eigen::Index g = 0; g < n; ++g) {
        if (!(lower(g) <= upper(g))) throw ValidationError("interval lower bound exceeds upper bound");
        if (lower(g) < 0.0 || upper(g) > 1.0) throw ValidationError("interval outside [0, 1]");
    }
    double best = 0.0;
    Eigen::VectorXd corner(n);
    const std::uint32_t count = 1u << n;
    for (std::uint32_t mask = 0; mask < count; ++mask) {
        for (Eigen::Index g = 0; g < n; ++g) corner(g) = (mask >> g) & 1u ? upper(g) : lower(g);
        best = std::max(best, pairwise_spread(corner, convention));
    }
    return best;
}

BoundReport bound_eop_report(const GroupOutcomeStats& stats, const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                             const ShiftBudget& budget, PairConvention convention) {
    const Eigen::Index n = stats.num_groups();
    const double source = disparity_eop(stats, convention);
    const double corners = bound_eop_corners(lower, upper, convention);
    // The corner bound is not additive per group; attribute the whole increment to group 0.
    Eigen::VectorXd terms = Eigen::VectorXd::Zero(n);
    terms(0) = std::max(0.0, corners - source);
    Eigen::VectorXd width = upper - lower;
    return make_report(BoundKind::eop_corners, convention, source, std::move(terms), eop_cap(n, convention), budget,
                       std::move(width));
}

double eop_cap(Eigen::Index n_groups, PairConvention convention) { return max_binary_spread(n_groups, convention); }

double multiclass_cap(Eigen::Index n_groups, Eigen::Index n_classes, PairConvention convention) {
    if (n_groups < 2) throw ValidationError("at least two groups required");
    if (n_classes < 2) throw ValidationError("at least two classes required");
    // Point masses spread as evenly as possible over the classes maximize the pairwise L1 sum.
    auto choose2 = [](Eigen::Index m) { return 0.5 * static_cast<double>(m) * static_cast<double>(m - 1); };
    double same = 0.0;
    for (Eigen::Index k = 0; k < n_classes; ++k) {
        const Eigen::Index size = n_groups / n_classes + (k < n_groups % n_classes ? 1 : 0);
        same += choose2(size);
    }
    return pair_multiplicity(convention) * 2.0 * (choose2(n_groups) - same);
}

} // namespace fairshift
