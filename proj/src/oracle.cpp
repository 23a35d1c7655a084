#include "fairshift/oracle.hpp"

#include "fairshift/bounds.hpp"
#include "fairshift/errors.hpp"
#include "fairshift/geometry.hpp"
#include "fairshift/parallel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

namespace fairshift {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index) { return splitmix64(splitmix64(seed) ^ index); }

namespace {

constexpr const char* kGenerator = "mt19937_64 seeded by splitmix64(seed, stream)";
constexpr double kBudgetSlack = 1e-12;
constexpr double kShrink = 1.0 - 1e-12;

void require_binary(const Policy& policy, const EmpiricalDistribution& source) {
    check_alphabets(policy, source);
    source.positive_label();
    const auto& p = policy.predicted_labels();
    if (p.size() != 2 || std::find(p.begin(), p.end(), 1) == p.end() || std::find(p.begin(), p.end(), 0) == p.end())
        throw ValidationError("binary predicted-label alphabet {0, 1} required");
}

void require_budget(const ShiftBudget& budget, DivergenceKind kind, Eigen::Index n_groups) {
    if (budget.kind != kind) throw ValidationError("budget kind must be " + to_string(kind));
    if (budget.per_group.size() != n_groups) throw ValidationError("one budget entry per group required");
}

/// Best corner of per-group [lower, upper] values; returns the chosen mask.
std::uint32_t best_corner(const Eigen::VectorXd& lower, const Eigen::VectorXd& upper, PairConvention convention,
                          double& best) {
    const Eigen::Index n = lower.size();
    if (n > 16) throw ValidationError("corner enumeration supports at most 16 groups");
    Eigen::VectorXd corner(n);
    std::uint32_t best_mask = 0;
    best = -1.0;
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        for (Eigen::Index g = 0; g < n; ++g) corner(g) = (mask >> g) & 1u ? upper(g) : lower(g);
        const double v = pairwise_spread(corner, convention);
        if (v > best) {
            best = v;
            best_mask = mask;
        }
    }
    return best_mask;
}

} // namespace

double dp_at_qualification(const GroupOutcomeStats& stats, const Eigen::VectorXd& q, PairConvention convention) {
    if (!stats.binary) throw ValidationError("binary task required");
    Eigen::VectorXd beta(stats.num_groups());
    for (Eigen::Index g = 0; g < beta.size(); ++g) {
        if (q(g) == stats.qual(g)) {
            beta(g) = stats.beta(g);
            continue;
        }
        const auto& tp = stats.beta_plus[static_cast<size_t>(g)];
        const auto& fp = stats.beta_minus[static_cast<size_t>(g)];
        if ((q(g) > 0.0 && !tp) || (q(g) < 1.0 && !fp))
            throw ValidationError("qualification rate requires an undefined conditional");
        beta(g) = (q(g) > 0.0 ? *tp * q(g) : 0.0) + (q(g) < 1.0 ? *fp * (1.0 - q(g)) : 0.0);
    }
    return pairwise_spread(beta, convention);
}

OracleResult sup_dp_label_shift(const Policy& policy, const EmpiricalDistribution& source, const ShiftBudget& budget,
                                PairConvention convention) {
    require_binary(policy, source);
    const Eigen::Index n = source.num_groups();
    require_budget(budget, DivergenceKind::qual_rate, n);
    if (n > 20) throw ValidationError("vertex enumeration supports at most 20 groups");
    const GroupOutcomeStats stats = outcome_stats(policy, source);

    // A group whose TPR or FPR is undefined cannot move its qualification rate.
    Eigen::VectorXd lo(n), hi(n);
    for (Eigen::Index g = 0; g < n; ++g) {
        const double q = stats.qual(g);
        const bool movable = stats.beta_plus[static_cast<size_t>(g)] && stats.beta_minus[static_cast<size_t>(g)];
        lo(g) = movable ? std::max(0.0, q - budget.per_group(g)) : q;
        hi(g) = movable ? std::min(1.0, q + budget.per_group(g)) : q;
    }

    OracleResult out;
    out.exact = true;
    out.v_estimate = -1.0;
    Eigen::VectorXd q(n), best_q = stats.qual;
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        for (Eigen::Index g = 0; g < n; ++g) q(g) = (mask >> g) & 1u ? hi(g) : lo(g);
        const double v = dp_at_qualification(stats, q, convention);
        ++out.evaluations;
        if (v > out.v_estimate) {
            out.v_estimate = v;
            best_q = q;
        }
    }
    out.witness = apply_label_shift(source, best_q);
    if ((divergence_qual_rate(*out.witness, source) - budget.per_group).maxCoeff() > kBudgetSlack)
        throw InfeasibleError("label-shift witness violates its budget");
    out.found_lower = lo;
    out.found_upper = hi;
    return out;
}

namespace {

struct GroupSearch {
    Eigen::VectorXd r_source;
    Eigen::VectorXd accept;
    double budget = 0.0;
    std::vector<Eigen::Index> support;
};

double chi_square(const GroupSearch& gs, const Eigen::VectorXd& r) {
    double c = 0.0;
    for (Eigen::Index x : gs.support) {
        const double d = r(x) - gs.r_source(x);
        c += d * d / gs.r_source(x);
    }
    return c;
}

/// Pairwise-move ascent on sign * <accept, r> with every step clipped to the feasible set.
void local_ascent(const GroupSearch& gs, double sign, Eigen::VectorXd& r, std::uint64_t& evals) {
    for (double step = 0.05; step >= 1e-4; step *= 0.5) {
        for (int pass = 0; pass < 1000; ++pass) {
            bool improved = false;
            for (Eigen::Index i : gs.support) {
                for (Eigen::Index j : gs.support) {
                    if (i == j || sign * (gs.accept(j) - gs.accept(i)) <= 0.0 || r(i) <= 0.0) continue;
                    const double c = chi_square(gs, r);
                    const double b = (r(j) - gs.r_source(j)) / gs.r_source(j) - (r(i) - gs.r_source(i)) / gs.r_source(i);
                    const double d = 1.0 / gs.r_source(j) + 1.0 / gs.r_source(i);
                    const double t_max = (-b + std::sqrt(b * b + d * std::max(0.0, gs.budget - c))) / d;
                    const double t = std::min({step, kShrink * t_max, r(i)});
                    ++evals;
                    if (t <= 1e-15) continue;
                    r(i) -= t;
                    r(j) += t;
                    improved = true;
                }
            }
            if (!improved) break;
        }
    }
}

/// Feasible marginal extremizing sign * <accept, r>: Dirichlet proposals then local ascent.
Eigen::VectorXd search_extreme(const GroupSearch& gs, double sign, std::uint64_t proposals, std::mt19937_64& rng,
                               std::uint64_t& evals) {
    Eigen::VectorXd best = gs.r_source;
    double best_val = sign * gs.accept.dot(best);
    if (gs.budget > 0.0 && gs.support.size() > 1) {
        constexpr std::array<double, 5> concentration{1.0, 4.0, 16.0, 64.0, 256.0};
        const std::uint64_t per_stage = std::max<std::uint64_t>(1, proposals / concentration.size());
        const double scale = static_cast<double>(gs.support.size());
        Eigen::VectorXd p = Eigen::VectorXd::Zero(gs.r_source.size());
        for (double conc : concentration) {
            for (std::uint64_t k = 0; k < per_stage; ++k) {
                double total = 0.0;
                for (Eigen::Index x : gs.support) {
                    std::gamma_distribution<double> gamma(conc * scale * gs.r_source(x), 1.0);
                    p(x) = gamma(rng);
                    total += p(x);
                }
                if (!(total > 0.0)) continue;
                p /= total;
                const double c = chi_square(gs, p);
                const double lambda = c > gs.budget ? kShrink * std::sqrt(gs.budget / c) : 1.0;
                const Eigen::VectorXd r = gs.r_source + lambda * (p - gs.r_source);
                const double v = sign * gs.accept.dot(r);
                ++evals;
                if (v > best_val) {
                    best_val = v;
                    best = r;
                }
            }
        }
        local_ascent(gs, sign, best, evals);
    }
    return best / best.sum();
}

} // namespace

OracleResult sup_dp_covariate_shift(const Policy& policy, const EmpiricalDistribution& source,
                                    const ShiftBudget& budget, const SearchOptions& options,
                                    PairConvention convention) {
    require_binary(policy, source);
    const Eigen::Index n = source.num_groups();
    require_budget(budget, DivergenceKind::var_omega, n);
    if (source.num_bins() > 12) throw ValidationError("covariate search supports at most 12 bins");
    if (options.restarts == 0) throw ValidationError("at least one restart required");

    std::vector<GroupSearch> groups(static_cast<size_t>(n));
    for (Eigen::Index g = 0; g < n; ++g) {
        GroupSearch& gs = groups[static_cast<size_t>(g)];
        gs.r_source = source.feature_marginal(g);
        gs.accept = policy.prob_of(g, 1);
        gs.budget = budget.per_group(g);
        for (Eigen::Index x = 0; x < gs.r_source.size(); ++x)
            if (gs.r_source(x) > 0.0) gs.support.push_back(x);
    }

    struct RestartResult {
        std::vector<Eigen::VectorXd> low, high;
        std::uint64_t evals = 0;
    };
    std::vector<RestartResult> restarts(options.restarts);
    parallel_for(options.restarts, [&](size_t k) {
        std::mt19937_64 rng(stream_seed(options.seed, k));
        RestartResult& res = restarts[k];
        for (const GroupSearch& gs : groups) {
            res.high.push_back(search_extreme(gs, 1.0, options.proposals, rng, res.evals));
            res.low.push_back(search_extreme(gs, -1.0, options.proposals, rng, res.evals));
        }
    });

    OracleResult out;
    out.generator = kGenerator;
    out.seed = options.seed;
    out.found_lower.resize(n);
    out.found_upper.resize(n);
    Eigen::MatrixXd low_r(source.num_bins(), n), high_r(source.num_bins(), n);
    for (Eigen::Index g = 0; g < n; ++g) {
        const GroupSearch& gs = groups[static_cast<size_t>(g)];
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (const RestartResult& res : restarts) {
            const double vh = gs.accept.dot(res.high[static_cast<size_t>(g)]);
            const double vl = gs.accept.dot(res.low[static_cast<size_t>(g)]);
            if (vh > hi) {
                hi = vh;
                high_r.col(g) = res.high[static_cast<size_t>(g)];
            }
            if (vl < lo) {
                lo = vl;
                low_r.col(g) = res.low[static_cast<size_t>(g)];
            }
        }
        out.found_lower(g) = lo;
        out.found_upper(g) = hi;
    }
    for (const RestartResult& res : restarts) out.evaluations += res.evals;

    if (budget.per_group.maxCoeff() == 0.0) {
        out.witness = source;
        out.v_estimate = disparity_dp(policy, source, convention).value;
        return out;
    }
    double corner_value = 0.0;
    const std::uint32_t mask = best_corner(out.found_lower, out.found_upper, convention, corner_value);
    Eigen::MatrixXd marginals(source.num_bins(), n);
    for (Eigen::Index g = 0; g < n; ++g) {
        if (budget.per_group(g) == 0.0)
            marginals.col(g) = groups[static_cast<size_t>(g)].r_source;
        else
            marginals.col(g) = (mask >> g) & 1u ? high_r.col(g) : low_r.col(g);
    }
    out.witness = apply_covariate_shift(source, marginals);
    const Eigen::VectorXd used = divergence_var_omega(*out.witness, source);
    for (Eigen::Index g = 0; g < n; ++g)
        if (used(g) > budget.per_group(g) + kBudgetSlack)
            throw InfeasibleError("covariate-shift witness violates its budget");
    out.v_estimate = disparity_dp(policy, *out.witness, convention).value;
    return out;
}

Eigen::MatrixXd tangent_basis(const Eigen::VectorXd& s) {
    const Eigen::Index n = s.size();
    if (n == 0 || (s.array() <= 0.0).any()) throw ValidationError("weights must be strictly positive");
    const Eigen::VectorXd a = s.cwiseSqrt().cwiseInverse();
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
    const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
    return q.rightCols(n - 1).array().colwise() * a.array();
}

namespace {

/// Uniform point in the unit ball of dimension d.
Eigen::VectorXd unit_ball_sample(Eigen::Index d, std::mt19937_64& rng) {
    Eigen::VectorXd c(d);
    if (d <= 6) {
        std::uniform_real_distribution<double> cube(-1.0, 1.0);
        do {
            for (Eigen::Index i = 0; i < d; ++i) c(i) = cube(rng);
        } while (c.squaredNorm() > 1.0);
        return c;
    }
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (Eigen::Index i = 0; i < d; ++i) c(i) = normal(rng);
    return c * (std::pow(unit(rng), 1.0 / static_cast<double>(d)) / c.norm());
}

} // namespace

OracleResult sup_eop_covariate_shift(const Policy& policy, const EmpiricalDistribution& source,
                                     const ShiftBudget& budget, std::uint64_t samples, std::uint64_t seed,
                                     PairConvention convention) {
    require_binary(policy, source);
    const Eigen::Index n = source.num_groups();
    require_budget(budget, DivergenceKind::weighted_l2, n);
    const GroupOutcomeStats stats = outcome_stats(policy, source);
    const auto contexts = geometric_contexts(policy, source);

    OracleResult out;
    out.generator = kGenerator;
    out.seed = seed;
    out.found_lower.resize(n);
    out.found_upper.resize(n);
    std::vector<std::uint64_t> evals(static_cast<size_t>(n), 0);
    parallel_for(static_cast<size_t>(n), [&](size_t gi) {
        const auto g = static_cast<Eigen::Index>(gi);
        const auto& tpr = stats.beta_plus[gi];
        if (!tpr) throw ValidationError("undefined true positive rate for a group");
        double lo = *tpr, hi = *tpr;
        const GeometricContext& ctx = contexts[gi];
        const double radius = budget.per_group(g);
        const Eigen::Index d = ctx.r_source.size() - 1;
        if (radius > 0.0 && d > 0) {
            const Eigen::MatrixXd basis = tangent_basis(ctx.s);
            std::mt19937_64 rng(stream_seed(seed, gi));
            const std::uint64_t max_draws = 100 * std::max<std::uint64_t>(samples, 1);
            std::uint64_t kept = 0;
            for (std::uint64_t draw = 0; kept < samples && draw < max_draws; ++draw) {
                const Eigen::VectorXd r = ctx.r_source + radius * (basis * unit_ball_sample(d, rng));
                ++evals[gi];
                const double den = inner_product(r, ctx.ones, ctx.s);
                if (!(den > 0.0)) continue;
                const double b = std::clamp(inner_product(r, ctx.t, ctx.s) / den, 0.0, 1.0);
                lo = std::min(lo, b);
                hi = std::max(hi, b);
                ++kept;
            }
        }
        out.found_lower(g) = lo;
        out.found_upper(g) = hi;
    });
    for (auto e : evals) out.evaluations += e;
    best_corner(out.found_lower, out.found_upper, convention, out.v_estimate);
    return out;
}

Eigen::VectorXd covariance_identity_check(const Policy& policy, const EmpiricalDistribution& source,
                                          const EmpiricalDistribution& target) {
    check_alphabets(policy, source);
    if (covariate_shift_residual(target, source) > kMassTolerance)
        throw ValidationError("target is not a covariate shift of the source");
    const ReweightingTable table = reweighting(target, source);
    const GroupOutcomeStats s_stats = outcome_stats(policy, source);
    const GroupOutcomeStats t_stats = outcome_stats(policy, target);
    const auto& predicted = policy.predicted_labels();
    const auto it = std::find(predicted.begin(), predicted.end(), 1);
    if (it == predicted.end()) throw ValidationError("policy never predicts label 1");
    const auto accept_col = static_cast<Eigen::Index>(it - predicted.begin());
    Eigen::VectorXd out(source.num_groups());
    for (Eigen::Index g = 0; g < out.size(); ++g) {
        const Eigen::VectorXd r = source.feature_marginal(g);
        const Eigen::VectorXd a = policy.prob_of(g, 1);
        const Eigen::VectorXd w = table.omega.col(g);
        const double cov = r.dot(w.cwiseProduct(a)) - r.dot(w) * r.dot(a);
        const double change = t_stats.class_rates(g, accept_col) - s_stats.class_rates(g, accept_col);
        out(g) = std::abs(change - cov);
    }
    return out;
}

bool variance_expectation_check(const Eigen::VectorXd& values, const Eigen::VectorXd& probs) {
    if (values.size() == 0 || values.size() != probs.size()) throw ValidationError("values and probabilities differ");
    if ((values.array() < 0.0).any() || (values.array() > 1.0).any() || !values.allFinite())
        throw ValidationError("sample outside [0, 1]");
    if ((probs.array() < 0.0).any() || std::abs(probs.sum() - 1.0) > kMassTolerance)
        throw ValidationError("probabilities must be >= 0 and sum to one");
    const double mean = probs.dot(values);
    const double var = probs.dot((values.array() - mean).square().matrix());
    return var <= mean * (1.0 - mean) + 1e-12;
}

bool variance_expectation_check(const Eigen::VectorXd& values) {
    if (values.size() == 0) throw ValidationError("no samples");
    return variance_expectation_check(values, Eigen::VectorXd::Constant(values.size(), 1.0 / values.size()));
}

} // namespace fairshift
