#pragma once

#include "fairshift/bounds.hpp"
#include "fairshift/distribution.hpp"
#include "fairshift/grid.hpp"
#include "fairshift/shift.hpp"

#include <Eigen/Dense>

namespace fairshift {

/// Midpoints of N equal-width bins on [0, 1].
Eigen::VectorXd bin_midpoints(Eigen::Index n_bins);

/// Bin identifiers "0", "1", ... used by the synthetic instances.
std::vector<std::string> numbered_bins(Eigen::Index n_bins);

// ---------------------------------------------------------------------------------------
// Strategic response (covariate shift)

struct StrategicParams {
    Eigen::VectorXd tau; ///< per-group threshold
    Eigen::VectorXd m;   ///< per-group manipulation budget, 0 < m <= min(tau, 1 - tau)
    Eigen::Index bins = 1000;

    void validate() const;
};

/// Piecewise reweighting coefficient at feature value x.
double strategic_omega_at(double x, double tau, double m);

/// omega_g evaluated at bin midpoints, |X| x |G|.
ReweightingTable strategic_omega(const StrategicParams& params);

/// Uniform features on [0, 1], Pr(Y=1 | x) = x at bin midpoints, equal group sizes.
EmpiricalDistribution strategic_source(Eigen::Index n_groups, Eigen::Index n_bins);

/// Accepts bins whose midpoint is >= tau_g.
Policy strategic_policy(const StrategicParams& params, const std::vector<std::string>& groups);

/// Covariate shift of a uniform source by strategic_omega, renormalized per group.
EmpiricalDistribution strategic_target(const EmpiricalDistribution& source, const StrategicParams& params);

struct StrategicBound {
    BoundReport derived; ///< sqrt(tau(1 - tau) (2/3) m) per group
    BoundReport literal; ///< tau(1 - tau) (2/3) m per group
};

StrategicBound strategic_bound(const StrategicParams& params, double delta_source,
                               PairConvention convention = PairConvention::unordered);

/**
 * Two-group grid over (tau_g, tau_h). Each cell builds the source, applies strategic response
 * with budget min(m, tau, 1 - tau) per group and records the DP disparities and the derived
 * bound; the literal bound and the realized Var[omega] are extra columns.
 */
SweepGrid strategic_grid(const std::vector<double>& tau_axis, double m, Eigen::Index n_bins,
                         PairConvention convention = PairConvention::unordered);

// ---------------------------------------------------------------------------------------
// Replicator dynamics (label shift)

/// Utilities U(y, y_hat), all strictly positive.
using UtilityMatrix = Eigen::Matrix2d;

void validate_utilities(const UtilityMatrix& u);

/// Outcome fractions rho(y, y_hat) for qualification q and fixed TPR / FPR.
Eigen::Matrix2d outcome_fractions(double q, double tpr, double fpr);

/// Q[t + 1] from the outcome fractions at time t.
double replicator_step(const UtilityMatrix& u, const Eigen::Matrix2d& rho);

/// Per-group next qualification rates from the stats of a policy on the current distribution.
Eigen::VectorXd replicator_step(const UtilityMatrix& u, const GroupOutcomeStats& stats);

/// Q trajectory under a fixed policy (label shift keeps TPR and FPR fixed); (steps + 1) x |G|.
Eigen::MatrixXd replicator_trajectory(const UtilityMatrix& u, const Eigen::VectorXd& q0, const Eigen::VectorXd& tpr,
                                      const Eigen::VectorXd& fpr, int steps);

struct ReplicatorBound {
    BoundReport canonical; ///< label-shift bound with B_g = |Q_g[t+1] - Q_g[t]| and the true |b+ - b-|
    BoundReport literal;   ///< same B_g with |rho11 - rho01| / (rho11 + rho01)
};

ReplicatorBound replicator_bound(const Eigen::VectorXd& q_t, const Eigen::VectorXd& q_next,
                                 const GroupOutcomeStats& stats, PairConvention convention = PairConvention::unordered);

/// Pr(x | Y=1) proportional to x + c, Pr(x | Y=0) proportional to 1 - x + c at bin midpoints.
EmpiricalDistribution mlr_instance(const Eigen::VectorXd& qual, Eigen::Index n_bins, double c = 0.1);

/// Bin k = [k/N, (k+1)/N) is accepted with the fraction of its width above tau_g.
Policy fractional_threshold_policy(const Eigen::VectorXd& tau, Eigen::Index n_bins,
                                   const std::vector<std::string>& groups);

/// Per-group tau with acceptance rate equal to `rate` within `tolerance`, by bisection.
Eigen::VectorXd dp_fair_thresholds(const EmpiricalDistribution& dist, double rate, double tolerance = 1e-9);

struct ReplicatorGridConfig {
    UtilityMatrix utilities = (UtilityMatrix() << 2.0, 1.0, 1.0, 2.0).finished();
    double acceptance = 0.5;
    Eigen::Index bins = 200;
    double c = 0.1;
};

/**
 * Two-group grid over initial qualification rates (q_g, q_h). Each cell uses a locally DP-fair
 * fractional threshold policy on the MLR instance, takes one replicator step and records the
 * realized DP disparities and the canonical bound; the literal bound is an extra column.
 */
SweepGrid replicator_grid(const std::vector<double>& q_axis, const ReplicatorGridConfig& config = {},
                          PairConvention convention = PairConvention::unordered);

} // namespace fairshift
