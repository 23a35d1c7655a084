#include "fairshift/geometry.hpp"

#include "fairshift/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace fairshift {

namespace {

constexpr int kAngleIterations = 64;
constexpr double kAngleTolerance = 1e-10;
constexpr double kParallelTolerance = 1e-12;

Eigen::VectorXd direction(const GeometricContext& ctx, double angle) {
    return std::cos(angle) * ctx.e1 + std::sin(angle) * ctx.e2;
}

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

} // namespace

GeometricContext make_geometric_context(Eigen::VectorXd r_source, Eigen::VectorXd s, Eigen::VectorXd t) {
    const Eigen::Index n = r_source.size();
    if (n == 0 || s.size() != n || t.size() != n) throw ValidationError("geometric context: length mismatch");
    if (!s.allFinite() || (s.array() <= 0.0).any())
        throw ValidationError("geometric context: s must be strictly positive on every bin");
    if (!r_source.allFinite() || !t.allFinite()) throw ValidationError("geometric context: non-finite input");
    if (std::abs(r_source.sum() - 1.0) > kMassTolerance)
        throw ValidationError("geometric context: source marginal is not on the normalization hyperplane");

    GeometricContext ctx;
    ctx.r_source = std::move(r_source);
    ctx.s = std::move(s);
    ctx.t = std::move(t);
    ctx.ones = Eigen::VectorXd::Ones(n);
    ctx.t_norm = weighted_norm(ctx.t, ctx.s);
    ctx.ones_norm = weighted_norm(ctx.ones, ctx.s);
    ctx.e1 = Eigen::VectorXd::Zero(n);
    ctx.e2 = Eigen::VectorXd::Zero(n);
    if (!(ctx.t_norm > 0.0)) {
        ctx.degenerate = true;
        return ctx;
    }
    ctx.e1 = ctx.t / ctx.t_norm;
    const double along = inner_product(ctx.ones, ctx.e1, ctx.s);
    const Eigen::VectorXd u = ctx.ones - along * ctx.e1;
    const double u_norm = weighted_norm(u, ctx.s);
    if (u_norm <= kParallelTolerance * ctx.ones_norm) {
        ctx.degenerate = true;
        return ctx;
    }
    ctx.e2 = u / u_norm;
    ctx.xi = std::atan2(u_norm, along);
    return ctx;
}

std::vector<GeometricContext> geometric_contexts(const Policy& policy, const EmpiricalDistribution& source) {
    check_alphabets(policy, source);
    const Eigen::MatrixXd s = positive_label_weights(source);
    std::vector<GeometricContext> out;
    for (Eigen::Index g = 0; g < source.num_groups(); ++g)
        out.push_back(make_geometric_context(source.feature_marginal(g), s.col(g), policy.prob_of(g, 1)));
    return out;
}

double tpr_from_geometry(const GeometricContext& ctx, const Eigen::VectorXd& r) {
    const double den = inner_product(r, ctx.ones, ctx.s);
    if (den == 0.0) throw ValidationError("<r, 1> is zero: true positive rate undefined");
    return inner_product(r, ctx.t, ctx.s) / den;
}

Eigen::Vector2d plane_coordinates(const GeometricContext& ctx, const Eigen::VectorXd& r) {
    return {inner_product(r, ctx.e1, ctx.s), inner_product(r, ctx.e2, ctx.s)};
}

Eigen::VectorXd plane_projection(const GeometricContext& ctx, const Eigen::VectorXd& r) {
    const Eigen::Vector2d c = plane_coordinates(ctx, r);
    return c(0) * ctx.e1 + c(1) * ctx.e2;
}

Eigen::VectorXd hyperplane_tangent(const GeometricContext& ctx, const Eigen::VectorXd& d) {
    // The hyperplane sum(r) = 1 has normal 1/s under the weighted inner product.
    const Eigen::VectorXd normal = ctx.s.cwiseInverse();
    return d - (d.sum() / normal.sum()) * normal;
}

double support_value(const GeometricContext& ctx, double radius, const Eigen::VectorXd& d) {
    return inner_product(ctx.r_source, d, ctx.s) + radius * weighted_norm(hyperplane_tangent(ctx, d), ctx.s);
}

double cos_ratio(double xi, double phi) { return std::cos(phi) / std::cos(xi - phi); }

TprInterval tpr_interval(const GeometricContext& ctx, double radius) {
    if (!(radius >= 0.0) || !std::isfinite(radius)) throw ValidationError("radius must be finite and >= 0");
    TprInterval out;
    if (ctx.degenerate) {
        const double v = ctx.t_norm > 0.0 ? clamp01(ctx.t_norm / ctx.ones_norm) : 0.0;
        out.lower = out.upper = v;
        return out;
    }
    const Eigen::Vector2d center = plane_coordinates(ctx, ctx.r_source);
    const double alpha_c = std::atan2(center(1), center(0));
    if (radius == 0.0) {
        out.lower = out.upper = clamp01(tpr_from_geometry(ctx, ctx.r_source));
        out.phi_lower = out.phi_upper = alpha_c;
        return out;
    }

    constexpr double half_pi = std::numbers::pi / 2.0;
    const double min_mass = inner_product(ctx.r_source, ctx.ones, ctx.s) -
                            radius * weighted_norm(hyperplane_tangent(ctx, ctx.ones), ctx.s);
    if (min_mass <= 0.0) {
        out.lower = 0.0;
        out.upper = 1.0;
        out.phi_lower = ctx.xi - half_pi;
        out.phi_upper = ctx.xi + half_pi;
        return out;
    }

    // Largest angle: the feasible image has a point beyond angle a iff its support along the
    // normal rotated +pi/2 is positive. Keep the bracket end on the infeasible side.
    double lo = alpha_c, hi = ctx.xi + half_pi;
    for (int i = 0; i < kAngleIterations && hi - lo > kAngleTolerance; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (support_value(ctx, radius, direction(ctx, mid + half_pi)) > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    out.phi_upper = hi;

    lo = ctx.xi - half_pi;
    hi = alpha_c;
    for (int i = 0; i < kAngleIterations && hi - lo > kAngleTolerance; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (support_value(ctx, radius, direction(ctx, mid - half_pi)) > 0.0)
            hi = mid;
        else
            lo = mid;
    }
    out.phi_lower = lo;

    const double scale = ctx.t_norm / ctx.ones_norm;
    out.upper = clamp01(scale * cos_ratio(ctx.xi, out.phi_lower));
    out.lower = clamp01(scale * cos_ratio(ctx.xi, out.phi_upper));
    return out;
}

BoundReport bound_eop_geometric(const Policy& policy, const EmpiricalDistribution& source, const ShiftBudget& budget,
                                PairConvention convention) {
    if (budget.kind != DivergenceKind::weighted_l2) throw ValidationError("budget kind must be weighted-l2");
    const GroupOutcomeStats stats = outcome_stats(policy, source);
    const Eigen::Index n = stats.num_groups();
    if (budget.per_group.size() != n) throw ValidationError("one budget entry per group required");
    const auto contexts = geometric_contexts(policy, source);
    Eigen::VectorXd lower(n), upper(n);
    for (Eigen::Index g = 0; g < n; ++g) {
        const auto& tpr = stats.beta_plus[static_cast<size_t>(g)];
        if (!tpr) throw ValidationError("undefined true positive rate for a group");
        if (budget.per_group(g) == 0.0) {
            lower(g) = upper(g) = *tpr;
            continue;
        }
        const TprInterval iv = tpr_interval(contexts[static_cast<size_t>(g)], budget.per_group(g));
        lower(g) = std::min(iv.lower, *tpr);
        upper(g) = std::max(iv.upper, *tpr);
    }
    BoundReport report = bound_eop_report(stats, lower, upper, budget, convention);
    report.kind = BoundKind::eop_geometric;
    return report;
}

} // namespace fairshift
