#pragma once

#include "fairshift/disparity.hpp"
#include "fairshift/distribution.hpp"
#include "fairshift/shift.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>

namespace fairshift {

/**
 * Supremal disparity found by an oracle. For label shift the value is exact; for covariate
 * shift it is the disparity of a certified feasible witness, hence a lower bound on v.
 */
struct OracleResult {
    double v_estimate = 0.0;
    std::optional<EmpiricalDistribution> witness;
    std::uint64_t evaluations = 0;
    bool exact = false;
    std::string generator;
    std::optional<std::uint64_t> seed;
    /// Per-group extremes of the rate the disparity is built from (acceptance rate or TPR).
    Eigen::VectorXd found_lower;
    Eigen::VectorXd found_upper;
};

struct SearchOptions {
    std::uint64_t seed = 0;
    /// Random proposals per group, direction and restart.
    std::uint64_t proposals = 2000;
    unsigned restarts = 4;
};

/// Exact supremum of DP under a qual-rate budget by enumerating clamped vertices Q_S +- B.
OracleResult sup_dp_label_shift(const Policy& policy, const EmpiricalDistribution& source, const ShiftBudget& budget,
                                PairConvention convention = PairConvention::unordered);

/// DP value at the qualification vector q, holding TPR / FPR at their source values.
double dp_at_qualification(const GroupOutcomeStats& stats, const Eigen::VectorXd& q,
                           PairConvention convention = PairConvention::unordered);

/**
 * Randomized search for the largest DP under Var_S[omega_g] <= B_g (|X| <= 12). Dirichlet
 * proposals around the source are shrunk onto the feasible set, then refined by pairwise
 * mass moves; per-group extremes of the acceptance rate are combined at the best corner.
 */
OracleResult sup_dp_covariate_shift(const Policy& policy, const EmpiricalDistribution& source,
                                    const ShiftBudget& budget, const SearchOptions& options = {},
                                    PairConvention convention = PairConvention::unordered);

/**
 * Uniform samples of r in {||r - r_S||_g <= B_g, sum(r) = 1} (positivity not imposed). TPRs are
 * clamped to [0, 1] and samples with <r, 1>_g <= 0 skipped. `samples` counts kept samples per group.
 */
OracleResult sup_eop_covariate_shift(const Policy& policy, const EmpiricalDistribution& source,
                                     const ShiftBudget& budget, std::uint64_t samples, std::uint64_t seed,
                                     PairConvention convention = PairConvention::unordered);

/// Weighted-orthonormal basis (columns) of {d : sum(d) = 0} under <a, b> = sum a b s.
Eigen::MatrixXd tangent_basis(const Eigen::VectorXd& s);

/// |(b_g(T) - b_g(S)) - Cov_S[omega_g, Pr(Y_hat=1 | X, g)]| per group.
Eigen::VectorXd covariance_identity_check(const Policy& policy, const EmpiricalDistribution& source,
                                          const EmpiricalDistribution& target);

/// Var <= mean (1 - mean) + 1e-12 for a [0, 1]-valued variable with the given probabilities.
bool variance_expectation_check(const Eigen::VectorXd& values, const Eigen::VectorXd& probs);
bool variance_expectation_check(const Eigen::VectorXd& values);

/// Deterministic 64-bit mixer used to derive per-restart streams.
std::uint64_t splitmix64(std::uint64_t x);

/// Stream seed for worker `index` under a base seed.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index);

} // namespace fairshift
