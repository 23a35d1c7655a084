#include "fairshift/disparity.hpp"

#include "fairshift/errors.hpp"

#include <algorithm>
#include <cmath>

namespace fairshift {

PairConvention parse_pair_convention(const std::string& name) {
    if (name == "unordered") return PairConvention::unordered;
    if (name == "ordered") return PairConvention::ordered;
    throw ValidationError("unknown pair convention: " + name);
}

std::string to_string(PairConvention c) { return c == PairConvention::ordered ? "ordered" : "unordered"; }

namespace {

std::optional<Eigen::Index> index_of(const std::vector<int>& v, int value) {
    auto it = std::find(v.begin(), v.end(), value);
    if (it == v.end()) return std::nullopt;
    return static_cast<Eigen::Index>(it - v.begin());
}

void require_binary_predictions(const Policy& policy) {
    const auto& p = policy.predicted_labels();
    if (p.size() != 2 || !index_of(p, 0) || !index_of(p, 1))
        throw ValidationError("binary predicted-label alphabet {0, 1} required");
}

double require_rate(const MaybeRate& r) {
    if (!r) throw ValidationError("undefined conditional rate for a group");
    return *r;
}

} // namespace

double OutcomeSummary::predicted_rate(int value) const {
    auto k = index_of(predicted_labels, value);
    return k ? rho.col(*k).sum() : 0.0;
}

MaybeRate OutcomeSummary::conditional_rate(int value, int label) const {
    auto y = index_of(labels, label);
    if (!y) return std::nullopt;
    const double denom = rho.row(*y).sum();
    if (!(denom > 0.0)) return std::nullopt;
    auto k = index_of(predicted_labels, value);
    return k ? rho(*y, *k) / denom : 0.0;
}

Premetric dp_premetric() {
    return {PremetricKind::dp, [](const OutcomeSummary& p, const OutcomeSummary& q) {
                return std::abs(p.predicted_rate(1) - q.predicted_rate(1));
            }};
}

Premetric eo_premetric() {
    return {PremetricKind::eo, [](const OutcomeSummary& p, const OutcomeSummary& q) {
                double total = 0.0;
                for (int y : {0, 1})
                    total += std::abs(require_rate(p.conditional_rate(1, y)) - require_rate(q.conditional_rate(1, y)));
                return total;
            }};
}

Premetric eop_premetric() {
    return {PremetricKind::eop, [](const OutcomeSummary& p, const OutcomeSummary& q) {
                return std::abs(require_rate(p.conditional_rate(1, 1)) - require_rate(q.conditional_rate(1, 1)));
            }};
}

Premetric multi_dp_premetric() {
    return {PremetricKind::multi_dp, [](const OutcomeSummary& p, const OutcomeSummary& q) {
                double total = 0.0;
                for (int k : p.predicted_labels) total += std::abs(p.predicted_rate(k) - q.predicted_rate(k));
                return total;
            }};
}

std::vector<OutcomeSummary> outcome_summaries(const Policy& policy, const EmpiricalDistribution& dist) {
    const GroupOutcomeStats stats = outcome_stats(policy, dist);
    std::vector<OutcomeSummary> out;
    for (const auto& rho : stats.rho) out.push_back({rho, stats.labels, stats.predicted_labels});
    return out;
}

DisparityValue disparity(const Premetric& psi, const std::vector<OutcomeSummary>& groups, PairConvention convention) {
    const auto n = static_cast<Eigen::Index>(groups.size());
    DisparityValue out;
    out.pairwise = Eigen::MatrixXd::Zero(n, n);
    for (const auto& s : groups)
        if (!(std::abs(psi.eval(s, s)) <= 1e-12)) throw ValidationError("premetric is not zero on identical arguments");
    for (Eigen::Index g = 0; g < n; ++g) {
        for (Eigen::Index h = 0; h < n; ++h) {
            if (g == h) continue;
            if (convention == PairConvention::unordered && h < g) continue;
            const double term = psi.eval(groups[static_cast<size_t>(g)], groups[static_cast<size_t>(h)]);
            if (!(term >= 0.0)) throw ValidationError("premetric returned a negative or NaN shift");
            out.pairwise(g, h) = term;
        }
    }
    out.value = out.pairwise.sum();
    return out;
}

DisparityValue disparity(const Premetric& psi, const Policy& policy, const EmpiricalDistribution& dist,
                         PairConvention convention) {
    return disparity(psi, outcome_summaries(policy, dist), convention);
}

DisparityValue disparity_dp(const Policy& policy, const EmpiricalDistribution& dist, PairConvention convention) {
    require_binary_predictions(policy);
    return disparity(dp_premetric(), policy, dist, convention);
}

DisparityValue disparity_eo(const Policy& policy, const EmpiricalDistribution& dist, PairConvention convention) {
    require_binary_predictions(policy);
    dist.positive_label();
    return disparity(eo_premetric(), policy, dist, convention);
}

DisparityValue disparity_eop(const Policy& policy, const EmpiricalDistribution& dist, PairConvention convention) {
    require_binary_predictions(policy);
    dist.positive_label();
    return disparity(eop_premetric(), policy, dist, convention);
}

DisparityValue disparity_dp_multiclass(const Policy& policy, const EmpiricalDistribution& dist,
                                       PairConvention convention) {
    if (policy.predicted_labels().size() < 2) throw ValidationError("at least two predicted labels required");
    return disparity(multi_dp_premetric(), policy, dist, convention);
}

double pairwise_spread_columns(const Eigen::MatrixXd& rates, PairConvention convention) {
    double total = 0.0;
    for (Eigen::Index k = 0; k < rates.cols(); ++k) total += pairwise_spread(rates.col(k), convention);
    return total;
}

double disparity_dp(const GroupOutcomeStats& stats, PairConvention convention) {
    if (!stats.binary) throw ValidationError("binary task required");
    return pairwise_spread(stats.beta, convention);
}

double disparity_eop(const GroupOutcomeStats& stats, PairConvention convention) {
    if (!stats.binary) throw ValidationError("binary task required");
    Eigen::VectorXd tpr(stats.num_groups());
    for (Eigen::Index g = 0; g < tpr.size(); ++g) tpr(g) = require_rate(stats.beta_plus[static_cast<size_t>(g)]);
    return pairwise_spread(tpr, convention);
}

double disparity_dp_multiclass(const GroupOutcomeStats& stats, PairConvention convention) {
    return pairwise_spread_columns(stats.class_rates, convention);
}

double max_binary_spread(Eigen::Index n_groups, PairConvention convention) {
    if (n_groups < 2) throw ValidationError("at least two groups required");
    const double lo = static_cast<double>(n_groups / 2);
    const double hi = static_cast<double>(n_groups - n_groups / 2);
    return pair_multiplicity(convention) * lo * hi;
}

} // namespace fairshift
