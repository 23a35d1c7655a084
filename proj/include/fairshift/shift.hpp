#pragma once

#include "fairshift/distribution.hpp"

#include <Eigen/Dense>

#include <string>

namespace fairshift {

enum class DivergenceKind {
    var_omega,  ///< Var_S[omega_g], covariate shift / DP
    qual_rate,  ///< |Q_g(S) - Q_g(T)|, label shift / DP
    weighted_l2 ///< ||r_T - r_S||_g under the s_g-weighted inner product, covariate shift / EOp
};

DivergenceKind parse_divergence_kind(const std::string& name);
std::string to_string(DivergenceKind kind);

/// Per-group non-negative bound on the divergence from source to target.
struct ShiftBudget {
    DivergenceKind kind = DivergenceKind::var_omega;
    Eigen::VectorXd per_group;

    ShiftBudget() = default;
    ShiftBudget(DivergenceKind k, Eigen::VectorXd b);

    static ShiftBudget zero(DivergenceKind k, Eigen::Index n_groups) {
        return ShiftBudget(k, Eigen::VectorXd::Zero(n_groups));
    }
};

/// omega(x, g) = Pr_T(x | g) / Pr_S(x | g), |X| x |G|. Bins empty in both are set to 1.
struct ReweightingTable {
    Eigen::MatrixXd omega;
};

ReweightingTable reweighting(const EmpiricalDistribution& target, const EmpiricalDistribution& source);

/// E_S[omega_g | G=g] for every group (one up to rounding).
Eigen::VectorXd reweighting_mean(const ReweightingTable& table, const EmpiricalDistribution& source);
/// Var_S[omega_g | G=g] for every group.
Eigen::VectorXd reweighting_variance(const ReweightingTable& table, const EmpiricalDistribution& source);

Eigen::VectorXd divergence_var_omega(const EmpiricalDistribution& target, const EmpiricalDistribution& source);
Eigen::VectorXd divergence_qual_rate(const EmpiricalDistribution& target, const EmpiricalDistribution& source);

/// s_weights is |X| x |G| and strictly positive.
Eigen::VectorXd divergence_weighted_l2(const EmpiricalDistribution& target, const EmpiricalDistribution& source,
                                       const Eigen::MatrixXd& s_weights);
/// Uses s_g(x) = Pr_S(Y=1 | x, g); every such value must be positive.
Eigen::VectorXd divergence_weighted_l2(const EmpiricalDistribution& target, const EmpiricalDistribution& source);

/// s_g(x) = Pr_S(Y=1 | x, g) as |X| x |G|; throws if a bin has no source mass in a group.
Eigen::MatrixXd positive_label_weights(const EmpiricalDistribution& source);

/// Realized divergence of the given kind, as a budget.
ShiftBudget realized_budget(DivergenceKind kind, const EmpiricalDistribution& target,
                            const EmpiricalDistribution& source);

/// Replace Q_g, keeping Pr(X | Y, G) and Pr(G) fixed.
EmpiricalDistribution apply_label_shift(const EmpiricalDistribution& source, const Eigen::VectorXd& new_qual);

/// Replace Pr(X | G) by the columns of new_marginals (|X| x |G|), keeping Pr(Y | X, G) and Pr(G).
EmpiricalDistribution apply_covariate_shift(const EmpiricalDistribution& source, const Eigen::MatrixXd& new_marginals);

/// Feature marginals Pr(X | G) as |X| x |G|.
Eigen::MatrixXd feature_marginals(const EmpiricalDistribution& dist);

/// Largest |Pr_T(Y|X,G) - Pr_S(Y|X,G)| over cells where both are defined; +inf if the target
/// puts mass where the source conditional is undefined.
double covariate_shift_residual(const EmpiricalDistribution& target, const EmpiricalDistribution& source);
/// Largest |Pr_T(X|Y,G) - Pr_S(X|Y,G)|, analogous to covariate_shift_residual.
double label_shift_residual(const EmpiricalDistribution& target, const EmpiricalDistribution& source);

} // namespace fairshift
