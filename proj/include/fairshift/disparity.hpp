#pragma once

#include "fairshift/distribution.hpp"

#include <Eigen/Dense>

#include <functional>
#include <string>

namespace fairshift {

/**
 * How the double sum over groups (g, h) is counted.
 *
 * unordered: each unordered pair {g, h}, g != h, once. Matches the two-group form
 *            |b_g - b_h| and the floor(n/2)*ceil(n/2) cap.
 * ordered:   every ordered pair (g, h); each unordered pair counts twice.
 *
 * Disparities under `ordered` are exactly twice those under `unordered`; every bound
 * scales its increment by pair_multiplicity() so both conventions stay sound.
 */
enum class PairConvention { unordered, ordered };

constexpr double pair_multiplicity(PairConvention c) { return c == PairConvention::ordered ? 2.0 : 1.0; }

PairConvention parse_pair_convention(const std::string& name);
std::string to_string(PairConvention c);

enum class PremetricKind { dp, eo, eop, multi_dp, custom };

/// Group-conditional outcome distribution Pr(Y, Y_hat | G=g) handed to a premetric.
struct OutcomeSummary {
    Eigen::MatrixXd rho; ///< rows: labels, cols: predicted labels
    std::vector<int> labels;
    std::vector<int> predicted_labels;

    double predicted_rate(int value) const;
    /// Pr(Y_hat = value | Y = label); nullopt when Pr(Y = label) = 0.
    MaybeRate conditional_rate(int value, int label) const;
};

/// Shift between two outcome summaries. Must satisfy Psi(p||q) >= 0 and Psi(p||p) = 0.
struct Premetric {
    PremetricKind kind = PremetricKind::custom;
    std::function<double(const OutcomeSummary&, const OutcomeSummary&)> eval;
};

Premetric dp_premetric();
Premetric eo_premetric();
Premetric eop_premetric();
Premetric multi_dp_premetric();

struct DisparityValue {
    double value = 0.0;
    /// pairwise(g, h): the term contributed by pair (g, h). Under `unordered` only the
    /// strict upper triangle is populated, so value == pairwise.sum() in both conventions.
    Eigen::MatrixXd pairwise;
};

std::vector<OutcomeSummary> outcome_summaries(const Policy& policy, const EmpiricalDistribution& dist);

DisparityValue disparity(const Premetric& psi, const std::vector<OutcomeSummary>& groups,
                         PairConvention convention = PairConvention::unordered);
DisparityValue disparity(const Premetric& psi, const Policy& policy, const EmpiricalDistribution& dist,
                         PairConvention convention = PairConvention::unordered);

DisparityValue disparity_dp(const Policy& policy, const EmpiricalDistribution& dist,
                            PairConvention convention = PairConvention::unordered);
DisparityValue disparity_eo(const Policy& policy, const EmpiricalDistribution& dist,
                            PairConvention convention = PairConvention::unordered);
DisparityValue disparity_eop(const Policy& policy, const EmpiricalDistribution& dist,
                             PairConvention convention = PairConvention::unordered);
DisparityValue disparity_dp_multiclass(const Policy& policy, const EmpiricalDistribution& dist,
                                       PairConvention convention = PairConvention::unordered);

/// sum over pairs of |v_g - v_h| for a per-group scalar (acceptance rate, TPR, ...).
template <typename Derived>
double pairwise_spread(const Eigen::MatrixBase<Derived>& values, PairConvention convention) {
    double total = 0.0;
    for (Eigen::Index g = 0; g < values.size(); ++g)
        for (Eigen::Index h = g + 1; h < values.size(); ++h) total += std::abs(values(g) - values(h));
    return pair_multiplicity(convention) * total;
}

/// Same as pairwise_spread applied to every column and summed (multi-class DP from class rates).
double pairwise_spread_columns(const Eigen::MatrixXd& rates, PairConvention convention);

/// DP disparity directly from the binary stats.
double disparity_dp(const GroupOutcomeStats& stats, PairConvention convention = PairConvention::unordered);
double disparity_eop(const GroupOutcomeStats& stats, PairConvention convention = PairConvention::unordered);
double disparity_dp_multiclass(const GroupOutcomeStats& stats, PairConvention convention = PairConvention::unordered);

/// Largest value the binary pairwise-spread metric can take: floor(n/2)*ceil(n/2) pairs at 1.
double max_binary_spread(Eigen::Index n_groups, PairConvention convention);

} // namespace fairshift
