#include "fairshift/simulators.hpp"

#include "fairshift/disparity.hpp"
#include "fairshift/errors.hpp"
#include "fairshift/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace fairshift {

Eigen::VectorXd bin_midpoints(Eigen::Index n_bins) {
    if (n_bins < 1) throw ValidationError("at least one bin required");
    return (Eigen::VectorXd::LinSpaced(n_bins, 0.0, static_cast<double>(n_bins - 1)).array() + 0.5) /
           static_cast<double>(n_bins);
}

std::vector<std::string> numbered_bins(Eigen::Index n_bins) {
    std::vector<std::string> out;
    out.reserve(static_cast<size_t>(n_bins));
    for (Eigen::Index k = 0; k < n_bins; ++k) out.push_back(std::to_string(k));
    return out;
}

namespace {

std::vector<std::string> numbered_groups(Eigen::Index n) {
    std::vector<std::string> out;
    for (Eigen::Index g = 0; g < n; ++g) out.push_back("g" + std::to_string(g));
    return out;
}

Policy binary_policy(const Eigen::MatrixXd& accept, std::vector<std::string> bins, std::vector<std::string> groups) {
    std::vector<Eigen::MatrixXd> rows;
    for (Eigen::Index g = 0; g < accept.cols(); ++g) {
        Eigen::MatrixXd r(accept.rows(), 2);
        r.col(0) = 1.0 - accept.col(g).array();
        r.col(1) = accept.col(g);
        rows.push_back(std::move(r));
    }
    return Policy(std::move(bins), std::move(groups), {0, 1}, std::move(rows));
}

} // namespace

void StrategicParams::validate() const {
    if (tau.size() == 0 || tau.size() != m.size()) throw ValidationError("tau and m need one entry per group");
    if (bins < 1) throw ValidationError("at least one bin required");
    for (Eigen::Index g = 0; g < tau.size(); ++g) {
        if (!(tau(g) >= 0.0 && tau(g) <= 1.0)) throw ValidationError("tau must lie in [0, 1]");
        if (!(m(g) >= 0.0)) throw ValidationError("manipulation budget must be >= 0");
        if (tau(g) - m(g) < 0.0 || tau(g) + m(g) > 1.0)
            throw ValidationError("manipulation budget exceeds the threshold margins");
    }
}

double strategic_omega_at(double x, double tau, double m) {
    if (m == 0.0 || x < tau - m || x >= tau + m) return 1.0;
    if (x < tau) return (tau - x) / m;
    return (tau + 2.0 * m - x) / m;
}

ReweightingTable strategic_omega(const StrategicParams& params) {
    params.validate();
    const Eigen::VectorXd mid = bin_midpoints(params.bins);
    ReweightingTable out{Eigen::MatrixXd(params.bins, params.tau.size())};
    for (Eigen::Index g = 0; g < params.tau.size(); ++g)
        for (Eigen::Index x = 0; x < params.bins; ++x)
            out.omega(x, g) = strategic_omega_at(mid(x), params.tau(g), params.m(g));
    return out;
}

EmpiricalDistribution strategic_source(Eigen::Index n_groups, Eigen::Index n_bins) {
    if (n_groups < 1) throw ValidationError("at least one group required");
    const Eigen::VectorXd mid = bin_midpoints(n_bins);
    const double cell = 1.0 / static_cast<double>(n_bins * n_groups);
    Eigen::MatrixXd joint(n_bins, 2);
    joint.col(0) = (1.0 - mid.array()) * cell;
    joint.col(1) = mid * cell;
    return EmpiricalDistribution(numbered_bins(n_bins), {0, 1}, numbered_groups(n_groups),
                                 std::vector<Eigen::MatrixXd>(static_cast<size_t>(n_groups), joint));
}

Policy strategic_policy(const StrategicParams& params, const std::vector<std::string>& groups) {
    params.validate();
    if (static_cast<Eigen::Index>(groups.size()) != params.tau.size())
        throw ValidationError("one threshold per group required");
    const Eigen::VectorXd mid = bin_midpoints(params.bins);
    Eigen::MatrixXd accept(params.bins, params.tau.size());
    for (Eigen::Index g = 0; g < accept.cols(); ++g)
        accept.col(g) = (mid.array() >= params.tau(g)).cast<double>();
    return binary_policy(accept, numbered_bins(params.bins), groups);
}

EmpiricalDistribution strategic_target(const EmpiricalDistribution& source, const StrategicParams& params) {
    params.validate();
    if (source.num_bins() != params.bins || source.num_groups() != params.tau.size())
        throw ValidationError("source shape does not match strategic parameters");
    const double uniform = 1.0 / static_cast<double>(params.bins);
    for (Eigen::Index g = 0; g < source.num_groups(); ++g)
        if ((source.feature_marginal(g).array() - uniform).abs().maxCoeff() > kMassTolerance)
            throw ValidationError("strategic response requires a uniform source feature distribution");
    Eigen::MatrixXd marginals = strategic_omega(params).omega;
    for (Eigen::Index g = 0; g < marginals.cols(); ++g) marginals.col(g) /= marginals.col(g).sum();
    return apply_covariate_shift(source, marginals);
}

StrategicBound strategic_bound(const StrategicParams& params, double delta_source, PairConvention convention) {
    params.validate();
    const Eigen::Index n = params.tau.size();
    if (n < 2) throw ValidationError("at least two groups required");
    const double factor = pair_multiplicity(convention) * static_cast<double>(n - 1);
    const Eigen::ArrayXd spread = params.tau.array() * (1.0 - params.tau.array());
    const Eigen::ArrayXd variance = (2.0 / 3.0) * params.m.array();
    ShiftBudget budget(DivergenceKind::var_omega, variance.matrix());
    const double cap = max_binary_spread(n, convention);
    StrategicBound out;
    out.derived = make_report(BoundKind::strategic_derived, convention, delta_source,
                              (factor * (spread * variance).sqrt()).matrix(), cap, budget, spread.matrix());
    out.literal = make_report(BoundKind::strategic_literal, convention, delta_source,
                              (factor * spread * variance).matrix(), cap, budget, spread.matrix());
    return out;
}

SweepGrid strategic_grid(const std::vector<double>& tau_axis, double m, Eigen::Index n_bins,
                         PairConvention convention) {
    if (tau_axis.empty()) throw ValidationError("empty grid");
    SweepGrid grid;
    grid.axis_g = grid.axis_h = tau_axis;
    grid.extra_columns = {"bound_literal", "budget_g", "budget_h"};
    grid.meta.bound_kind = to_string(BoundKind::strategic_derived);
    grid.meta.metric = "dp";
    grid.meta.convention = to_string(convention);
    grid.meta.parameters = {{"m", m}, {"bins", static_cast<double>(n_bins)}};
    const EmpiricalDistribution source = strategic_source(2, n_bins);
    grid.meta.groups = source.groups();
    const size_t n = tau_axis.size();
    grid.cells.resize(n * n);
    parallel_for(n * n, [&](size_t idx) {
        const double tg = tau_axis[idx / n], th = tau_axis[idx % n];
        StrategicParams params;
        params.tau = Eigen::Vector2d(tg, th);
        params.m = Eigen::Vector2d(std::min({m, tg, 1.0 - tg}), std::min({m, th, 1.0 - th}));
        params.bins = n_bins;
        const Policy policy = strategic_policy(params, source.groups());
        const EmpiricalDistribution target = strategic_target(source, params);
        const double ds = disparity_dp(outcome_stats(policy, source), convention);
        const double dt = disparity_dp(outcome_stats(policy, target), convention);
        const StrategicBound b = strategic_bound(params, ds, convention);
        const Eigen::VectorXd realized = divergence_var_omega(target, source);
        GridCell& cell = grid.cells[idx];
        cell.axis_g = tg;
        cell.axis_h = th;
        cell.delta_source = ds;
        cell.delta_target = dt;
        cell.bound = b.derived.bound;
        cell.extra = {b.literal.bound, realized(0), realized(1)};
    });
    return grid;
}

void validate_utilities(const UtilityMatrix& u) {
    if (!u.allFinite() || (u.array() <= 0.0).any()) throw ValidationError("utilities must be finite and > 0");
}

Eigen::Matrix2d outcome_fractions(double q, double tpr, double fpr) {
    for (double v : {q, tpr, fpr})
        if (!(v >= 0.0 && v <= 1.0)) throw ValidationError("rates must lie in [0, 1]");
    Eigen::Matrix2d rho;
    rho << (1.0 - q) * (1.0 - fpr), (1.0 - q) * fpr, q * (1.0 - tpr), q * tpr;
    return rho;
}

double replicator_step(const UtilityMatrix& u, const Eigen::Matrix2d& rho) {
    validate_utilities(u);
    if (!rho.allFinite() || (rho.array() < 0.0).any()) throw ValidationError("outcome fractions must be >= 0");
    const Eigen::Matrix2d w = u.cwiseProduct(rho);
    const double num = w(1, 1) + w(1, 0);
    const double den = num + w(0, 0) + w(0, 1);
    if (!(den > 0.0)) throw ValidationError("replicator step has zero denominator");
    return num / den;
}

Eigen::VectorXd replicator_step(const UtilityMatrix& u, const GroupOutcomeStats& stats) {
    if (!stats.binary) throw ValidationError("binary task required");
    Eigen::VectorXd out(stats.num_groups());
    for (Eigen::Index g = 0; g < out.size(); ++g) out(g) = replicator_step(u, stats.binary_rho(g));
    return out;
}

Eigen::MatrixXd replicator_trajectory(const UtilityMatrix& u, const Eigen::VectorXd& q0, const Eigen::VectorXd& tpr,
                                      const Eigen::VectorXd& fpr, int steps) {
    if (steps < 0) throw ValidationError("steps must be >= 0");
    if (tpr.size() != q0.size() || fpr.size() != q0.size()) throw ValidationError("one rate per group required");
    Eigen::MatrixXd out(steps + 1, q0.size());
    out.row(0) = q0.transpose();
    for (int t = 0; t < steps; ++t)
        for (Eigen::Index g = 0; g < q0.size(); ++g)
            out(t + 1, g) = replicator_step(u, outcome_fractions(out(t, g), tpr(g), fpr(g)));
    return out;
}

ReplicatorBound replicator_bound(const Eigen::VectorXd& q_t, const Eigen::VectorXd& q_next,
                                 const GroupOutcomeStats& stats, PairConvention convention) {
    const Eigen::Index n = stats.num_groups();
    if (q_t.size() != n || q_next.size() != n) throw ValidationError("one qualification rate per group required");
    if ((q_t - stats.qual).cwiseAbs().maxCoeff() > kIdentityTolerance)
        throw ValidationError("q_t does not match the qualification rates of the stats");
    ShiftBudget budget(DivergenceKind::qual_rate, (q_next - q_t).cwiseAbs());
    ReplicatorBound out;
    out.canonical = bound_dp_label(stats, budget, convention);
    out.canonical.kind = BoundKind::replicator;

    Eigen::VectorXd ratio(n);
    for (Eigen::Index g = 0; g < n; ++g) {
        const Eigen::Matrix2d rho = stats.binary_rho(g);
        const double accepted = rho(1, 1) + rho(0, 1);
        if (!(accepted > 0.0)) throw ValidationError("zero acceptance mass in a group");
        ratio(g) = std::abs(rho(1, 1) - rho(0, 1)) / accepted;
    }
    const double factor = pair_multiplicity(convention) * static_cast<double>(n - 1);
    out.literal = make_report(BoundKind::replicator_literal, convention, out.canonical.source_disparity,
                              factor * budget.per_group.cwiseProduct(ratio), out.canonical.cap, budget, ratio);
    return out;
}

EmpiricalDistribution mlr_instance(const Eigen::VectorXd& qual, Eigen::Index n_bins, double c) {
    if (!(c > 0.0)) throw ValidationError("MLR offset must be > 0");
    const Eigen::VectorXd mid = bin_midpoints(n_bins);
    Eigen::VectorXd p1 = mid.array() + c;
    Eigen::VectorXd p0 = 1.0 - mid.array() + c;
    p1 /= p1.sum();
    p0 /= p0.sum();
    const double share = 1.0 / static_cast<double>(qual.size());
    std::vector<Eigen::MatrixXd> mass;
    for (Eigen::Index g = 0; g < qual.size(); ++g) {
        if (!(qual(g) >= 0.0 && qual(g) <= 1.0)) throw ValidationError("qualification rate outside [0, 1]");
        Eigen::MatrixXd joint(n_bins, 2);
        joint.col(0) = p0 * ((1.0 - qual(g)) * share);
        joint.col(1) = p1 * (qual(g) * share);
        mass.push_back(std::move(joint));
    }
    return EmpiricalDistribution(numbered_bins(n_bins), {0, 1}, numbered_groups(qual.size()), std::move(mass));
}

namespace {

Eigen::VectorXd fractional_accept(double tau, Eigen::Index n_bins) {
    const double scaled = tau * static_cast<double>(n_bins);
    Eigen::VectorXd out(n_bins);
    for (Eigen::Index k = 0; k < n_bins; ++k) out(k) = std::clamp(static_cast<double>(k + 1) - scaled, 0.0, 1.0);
    return out;
}

} // namespace

Policy fractional_threshold_policy(const Eigen::VectorXd& tau, Eigen::Index n_bins,
                                   const std::vector<std::string>& groups) {
    if (static_cast<Eigen::Index>(groups.size()) != tau.size()) throw ValidationError("one threshold per group required");
    Eigen::MatrixXd accept(n_bins, tau.size());
    for (Eigen::Index g = 0; g < tau.size(); ++g) {
        if (!(tau(g) >= 0.0 && tau(g) <= 1.0)) throw ValidationError("tau must lie in [0, 1]");
        accept.col(g) = fractional_accept(tau(g), n_bins);
    }
    return binary_policy(accept, numbered_bins(n_bins), groups);
}

Eigen::VectorXd dp_fair_thresholds(const EmpiricalDistribution& dist, double rate, double tolerance) {
    if (!(rate >= 0.0 && rate <= 1.0)) throw ValidationError("acceptance rate must lie in [0, 1]");
    Eigen::VectorXd tau(dist.num_groups());
    for (Eigen::Index g = 0; g < tau.size(); ++g) {
        const Eigen::VectorXd r = dist.feature_marginal(g);
        double lo = 0.0, hi = 1.0, mid = 0.5;
        for (int i = 0; i < 200; ++i) {
            mid = 0.5 * (lo + hi);
            const double acc = r.dot(fractional_accept(mid, r.size()));
            if (std::abs(acc - rate) <= tolerance) break;
            if (acc > rate)
                lo = mid;
            else
                hi = mid;
        }
        tau(g) = mid;
    }
    return tau;
}

SweepGrid replicator_grid(const std::vector<double>& q_axis, const ReplicatorGridConfig& config,
                          PairConvention convention) {
    if (q_axis.empty()) throw ValidationError("empty grid");
    validate_utilities(config.utilities);
    SweepGrid grid;
    grid.axis_g_name = "q_g";
    grid.axis_h_name = "q_h";
    grid.axis_g = grid.axis_h = q_axis;
    grid.extra_columns = {"bound_literal", "q_next_g", "q_next_h"};
    grid.meta.bound_kind = to_string(BoundKind::replicator);
    grid.meta.metric = "dp";
    grid.meta.convention = to_string(convention);
    grid.meta.groups = {"g0", "g1"};
    grid.meta.parameters = {{"u00", config.utilities(0, 0)}, {"u01", config.utilities(0, 1)},
                            {"u10", config.utilities(1, 0)}, {"u11", config.utilities(1, 1)},
                            {"acceptance", config.acceptance}, {"bins", static_cast<double>(config.bins)},
                            {"mlr_offset", config.c}};
    const size_t n = q_axis.size();
    grid.cells.resize(n * n);
    parallel_for(n * n, [&](size_t idx) {
        const Eigen::Vector2d q(q_axis[idx / n], q_axis[idx % n]);
        const EmpiricalDistribution source = mlr_instance(q, config.bins, config.c);
        const Policy policy =
            fractional_threshold_policy(dp_fair_thresholds(source, config.acceptance), config.bins, source.groups());
        const GroupOutcomeStats stats = outcome_stats(policy, source);
        const Eigen::VectorXd q_next = replicator_step(config.utilities, stats);
        const EmpiricalDistribution target = apply_label_shift(source, q_next);
        const ReplicatorBound b = replicator_bound(stats.qual, q_next, stats, convention);
        GridCell& cell = grid.cells[idx];
        cell.axis_g = q(0);
        cell.axis_h = q(1);
        cell.delta_source = b.canonical.source_disparity;
        cell.delta_target = disparity_dp(outcome_stats(policy, target), convention);
        cell.bound = b.canonical.bound;
        cell.extra = {b.literal.bound, q_next(0), q_next(1)};
    });
    return grid;
}

} // namespace fairshift
