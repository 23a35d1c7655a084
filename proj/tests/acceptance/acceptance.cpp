// Acceptance run: one PASS/FAIL line per primary criterion, exit status 1 if any fails.

#include "fairshift/bounds.hpp"
#include "fairshift/disparity.hpp"
#include "fairshift/emit.hpp"
#include "fairshift/geometry.hpp"
#include "fairshift/harness.hpp"
#include "fairshift/oracle.hpp"
#include "fairshift/simulators.hpp"
#include "support/instances.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <sstream>

using namespace fairshift;
using namespace fairshift::testing;

#ifndef FAIRSHIFT_DATA_DIR
#define FAIRSHIFT_DATA_DIR "data"
#endif

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok && pass) detail << "first failure: " << what << "; ";
        pass = pass && ok;
    }
};

struct Criterion {
    std::string name;
    double time_limit; // seconds, infinity when none is stated
    std::function<void(Outcome&)> run;
};

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::VectorXd random_budget(Rng& rng, Eigen::Index n, double hi) {
    Eigen::VectorXd b(n);
    for (auto& v : b) v = uniform(rng, 0.0, hi);
    return b;
}

Eigen::VectorXd tpr_vector(const GroupOutcomeStats& s) {
    Eigen::VectorXd v(s.num_groups());
    for (Eigen::Index g = 0; g < v.size(); ++g) v(g) = *s.beta_plus[static_cast<size_t>(g)];
    return v;
}

// Recursive corner enumeration, independent of the bitmask loop in the library.
void corners(const Eigen::VectorXd& l, const Eigen::VectorXd& u, Eigen::VectorXd& x, Eigen::Index g, double& best) {
    if (g == l.size()) {
        best = std::max(best, pairwise_spread(x, PairConvention::unordered));
        return;
    }
    for (double v : {l(g), u(g)}) {
        x(g) = v;
        corners(l, u, x, g + 1, best);
    }
}

void zero_shift(Outcome& out) {
    Rng rng(1001);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const Eigen::Index bins = uniform_int(rng, 1, 6), n = uniform_int(rng, 2, 3);
        const auto d = random_distribution(rng, bins, n);
        const auto p = random_policy(rng, bins, n);
        const auto s = outcome_stats(p, d);
        const double dp = disparity_dp(s), eop = disparity_eop(s), multi = disparity_dp_multiclass(s);
        const auto zv = ShiftBudget::zero(DivergenceKind::var_omega, n);
        const auto zq = ShiftBudget::zero(DivergenceKind::qual_rate, n);
        const auto zl = ShiftBudget::zero(DivergenceKind::weighted_l2, n);
        const LipschitzVector lv(DivergenceKind::var_omega, random_budget(rng, n, 5.0));
        const Eigen::VectorXd tpr = tpr_vector(s);

        const auto d3 = random_distribution(rng, bins, n, 3);
        const auto s3 = outcome_stats(random_policy(rng, bins, n, 3), d3);

        StrategicParams sp;
        sp.tau = Eigen::VectorXd::NullaryExpr(n, [&] { return uniform(rng); });
        sp.m = Eigen::VectorXd::Zero(n);

        const std::vector<std::pair<double, double>> pairs = {
            {lipschitz_bound(dp, lv, zv).bound, dp},
            {bound_dp_covariate(s, zv).bound, dp},
            {bound_dp_covariate_multiclass(s, zv).bound, multi},
            {bound_dp_covariate_multiclass(s3, zv).bound, disparity_dp_multiclass(s3)},
            {bound_dp_label(s, zq).bound, dp},
            {bound_eop_report(s, tpr, tpr, zl).bound, eop},
            {bound_eop_geometric(p, d, zl).bound, eop},
            {strategic_bound(sp, dp).derived.bound, dp},
            {strategic_bound(sp, dp).literal.bound, dp},
            {sup_dp_label_shift(p, d, zq).v_estimate, dp},
        };
        // The replicator bound is undefined for a group that accepts nobody.
        if ((s.beta.array() > 0.0).all()) {
            const auto rb = replicator_bound(s.qual, s.qual, s);
            worst = std::max({worst, std::abs(rb.canonical.bound - dp), std::abs(rb.literal.bound - dp)});
        }
        for (const auto& [bound, exact] : pairs) worst = std::max(worst, std::abs(bound - exact));
    }
    out.require(worst <= 1e-12, "max |bound - delta_S| = " + std::to_string(worst));
    out.detail << "1000 instances, up to 12 checks each, max |bound(B=0) - delta_S| = " << worst;
}

void label_soundness(Outcome& out) {
    Rng rng(1002);
    double worst = -kInf;
    for (int i = 0; i < 1000; ++i) {
        const Eigen::Index bins = uniform_int(rng, 1, 6), n = uniform_int(rng, 2, 4);
        const auto d = random_distribution(rng, bins, n);
        const auto p = random_policy(rng, bins, n);
        const ShiftBudget b(DivergenceKind::qual_rate, random_budget(rng, n, 0.3));
        const double v = sup_dp_label_shift(p, d, b).v_estimate;
        worst = std::max(worst, v - bound_dp_label(outcome_stats(p, d), b).bound);
    }
    out.require(worst <= 1e-12, "v exceeded bound by " + std::to_string(worst));

    double gap = 0.0;
    int opposing = 0;
    for (int i = 0; i < 1000; ++i) {
        const Eigen::Vector2d q(uniform(rng, 0.3, 0.7), uniform(rng, 0.3, 0.7));
        auto [d, p] = shared_rates_instance(rng, uniform_int(rng, 2, 6), q);
        const auto s = outcome_stats(p, d);
        const ShiftBudget b(DivergenceKind::qual_rate, random_budget(rng, 2, 0.3));
        const auto r = sup_dp_label_shift(p, d, b);
        gap = std::max(gap, std::abs(r.v_estimate - bound_dp_label(s, b).bound));
        const Eigen::VectorXd moved = outcome_stats(p, *r.witness).qual - s.qual;
        if (moved(0) * moved(1) < 0) ++opposing;
    }
    out.require(gap <= 1e-12, "tightness gap " + std::to_string(gap));
    out.detail << "1000 random: max(v - bound) = " << worst << "; 1000 shared-rate pairs: max |v - bound| = " << gap
               << " (" << opposing << " witnesses with opposing moves)";
}

void covariate_soundness(Outcome& out) {
    Rng rng(1003);
    double worst = -kInf, worst_multi = -kInf;
    for (int i = 0; i < 1000; ++i) {
        const Eigen::Index bins = uniform_int(rng, 2, 8), n = uniform_int(rng, 2, 4);
        const auto s = random_distribution(rng, bins, n);
        const auto t = random_covariate_target(rng, s, uniform(rng, 0.05, 3.0));
        const auto p = random_policy(rng, bins, n);
        const auto budget = realized_budget(DivergenceKind::var_omega, t, s);
        worst = std::max(worst, disparity_dp(outcome_stats(p, t)) - bound_dp_covariate(outcome_stats(p, s), budget).bound);

        const auto s3 = random_distribution(rng, bins, n, 3);
        const auto t3 = random_covariate_target(rng, s3, uniform(rng, 0.05, 3.0));
        const auto p3 = random_policy(rng, bins, n, 3);
        const auto b3 = realized_budget(DivergenceKind::var_omega, t3, s3);
        worst_multi = std::max(worst_multi, disparity_dp_multiclass(outcome_stats(p3, t3)) -
                                                bound_dp_covariate_multiclass(outcome_stats(p3, s3), b3).bound);
    }
    double worst_witness = -kInf;
    for (int i = 0; i < 100; ++i) {
        const Eigen::Index bins = uniform_int(rng, 2, 6), n = uniform_int(rng, 2, 3);
        const auto s = random_distribution(rng, bins, n);
        const auto p = random_policy(rng, bins, n);
        const ShiftBudget b(DivergenceKind::var_omega, random_budget(rng, n, 0.5));
        SearchOptions o;
        o.seed = stream_seed(33, static_cast<std::uint64_t>(i));
        const auto r = sup_dp_covariate_shift(p, s, b, o);
        const double realized = disparity_dp(outcome_stats(p, *r.witness));
        worst_witness = std::max(worst_witness, realized - bound_dp_covariate(outcome_stats(p, s), b).bound);
        out.require((divergence_var_omega(*r.witness, s).array() <= b.per_group.array() + 1e-9).all(),
                    "oracle witness outside the budget");
    }
    worst = std::max(worst, worst_witness);
    out.require(worst <= 1e-9, "binary violation " + std::to_string(worst));
    out.require(worst_multi <= 1e-9, "multi-class violation " + std::to_string(worst_multi));
    out.detail << "1000 binary pairs + 100 oracle witnesses: max(delta_T - bound) = " << worst
               << " (witnesses alone " << worst_witness << "); 1000 |Y|=3 pairs: " << worst_multi;
}

void covariance_identity(Outcome& out) {
    Rng rng(1004);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const Eigen::Index bins = uniform_int(rng, 2, 8), n = uniform_int(rng, 2, 4);
        const auto s = random_distribution(rng, bins, n);
        const auto t = random_covariate_target(rng, s, uniform(rng, 0.05, 3.0));
        worst = std::max(worst, covariance_identity_check(random_policy(rng, bins, n), s, t).maxCoeff());
    }
    int strategic = 0;
    const auto axis = linspace(0.05, 0.95, 19);
    for (double m : {0.01, 0.05, 0.1}) {
        for (double tg : axis) {
            for (double th : axis) {
                StrategicParams sp;
                sp.tau = Eigen::Vector2d(tg, th);
                sp.m = sp.tau.unaryExpr([&](double t) { return std::min({m, t, 1.0 - t}); });
                sp.bins = 1000;
                const auto src = strategic_source(2, sp.bins);
                const auto tgt = strategic_target(src, sp);
                worst = std::max(worst, covariance_identity_check(strategic_policy(sp, src.groups()), src, tgt).maxCoeff());
                ++strategic;
            }
        }
    }
    out.require(worst < 1e-10, "residual " + std::to_string(worst));
    out.detail << "1000 random pairs + " << strategic << " strategic instances, max residual = " << worst;
}

void strategic_statistics(Outcome& out) {
    double mean_err = 0.0, var_rel = 0.0;
    for (double m : {0.01, 0.05, 0.1}) {
        for (double tau : {0.3, 0.5, 0.7}) {
            StrategicParams sp;
            sp.tau = Eigen::Vector2d(tau, tau);
            sp.m = Eigen::Vector2d(m, m);
            sp.bins = 10000;
            const auto src = strategic_source(2, sp.bins);
            const auto w = strategic_omega(sp);
            mean_err = std::max(mean_err, (reweighting_mean(w, src).array() - 1.0).abs().maxCoeff());
            var_rel = std::max(var_rel, (reweighting_variance(w, src).array() / (2.0 * m / 3.0) - 1.0).abs().maxCoeff());
        }
    }
    out.require(mean_err <= 1e-6, "E[omega] error " + std::to_string(mean_err));
    out.require(var_rel <= 1e-3, "Var relative error " + std::to_string(var_rel));

    double worst = -kInf;
    size_t cells = 0;
    for (double m : {0.01, 0.05, 0.1}) {
        const auto grid = strategic_grid(linspace(0.05, 0.95, 19), m, 10000);
        for (const auto& c : grid.cells) {
            worst = std::max(worst, *c.delta_target - *c.bound);
            ++cells;
        }
    }
    out.require(worst <= 0.0, "realized DP above derived bound by " + std::to_string(worst));
    out.detail << "N=1e4: max |E[omega]-1| = " << mean_err << ", max Var rel. error = " << var_rel << "; " << cells
               << " grid cells (19x19 for m in {0.01,0.05,0.1}), max(delta_T - bound) = " << worst;
}

void replicator(Outcome& out) {
    Rng rng(1006);
    double fixed = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const double q = uniform(rng);
        fixed = std::max(fixed, std::abs(replicator_step(UtilityMatrix::Ones(),
                                                         outcome_fractions(q, uniform(rng), uniform(rng))) - q));
    }
    out.require(fixed <= 1e-15, "U=1 drift " + std::to_string(fixed));

    bool in_range = true;
    for (int i = 0; i < 100; ++i) {
        UtilityMatrix u;
        for (auto& v : u.reshaped()) v = uniform(rng, 1e-3, 10.0);
        const Eigen::Index n = uniform_int(rng, 1, 4);
        const auto draw = [&] { return Eigen::VectorXd::NullaryExpr(n, [&] { return uniform(rng); }).eval(); };
        const Eigen::MatrixXd traj = replicator_trajectory(u, draw(), draw(), draw(), 100);
        in_range = in_range && traj.minCoeff() >= 0.0 && traj.maxCoeff() <= 1.0;
    }
    out.require(in_range, "trajectory left [0, 1]");

    const auto grid = replicator_grid(linspace(0.05, 0.95, 19));
    double worst = -kInf, tightest = kInf;
    for (const auto& c : grid.cells) {
        worst = std::max(worst, *c.delta_target - *c.bound);
        const double dg = *c.extra[1] - c.axis_g, dh = *c.extra[2] - c.axis_h;
        if (dg * dh < 0 && *c.delta_target > 0)
            tightest = std::min(tightest, std::abs(*c.bound - *c.delta_target) / *c.delta_target);
    }
    out.require(worst <= 1e-12, "one-step DP above bound by " + std::to_string(worst));
    out.require(tightest <= 0.05, "no opposing cell within 5%");
    out.detail << "U=1 drift " << fixed << "; 100 configs x 100 steps in [0,1]; 361 cells max(delta_T - bound) = "
               << worst << ", tightest opposing cell rel. gap = " << tightest;
}

void geometric(Outcome& out) {
    Rng rng(1007);
    double escape = -kInf;
    bool nested = true, monotone = true;
    for (int i = 0; i < 200; ++i) {
        const auto d = random_distribution(rng, 4, 2);
        const auto p = random_policy(rng, 4, 2);
        const auto ctxs = geometric_contexts(p, d);
        std::vector<TprInterval> prev(2);
        bool first = true;
        for (double b : {0.05, 0.1, 0.2}) {
            const auto r = sup_eop_covariate_shift(p, d, ShiftBudget(DivergenceKind::weighted_l2, Eigen::Vector2d(b, b)),
                                                   100000, stream_seed(77, static_cast<std::uint64_t>(i)));
            for (Eigen::Index g = 0; g < 2; ++g) {
                const auto iv = tpr_interval(ctxs[static_cast<size_t>(g)], b);
                escape = std::max({escape, iv.lower - r.found_lower(g), r.found_upper(g) - iv.upper});
                if (!first) nested = nested && iv.lower <= prev[g].lower + 1e-12 && iv.upper >= prev[g].upper - 1e-12;
                prev[g] = iv;
            }
            first = false;
        }
        for (const auto& c : ctxs) {
            if (c.degenerate) continue;
            const double lo = c.xi - std::numbers::pi / 2, hi = c.xi + std::numbers::pi / 2;
            double last = kInf;
            for (int k = 1; k <= 1000; ++k) {
                const double v = cos_ratio(c.xi, lo + (hi - lo) * k / 1001.0);
                monotone = monotone && v < last;
                last = v;
            }
        }
    }
    out.require(escape <= 1e-12, "sampled TPR outside interval by " + std::to_string(escape));
    out.require(nested, "intervals not nested");
    out.require(monotone, "cos ratio not decreasing");
    out.detail << "200 instances x B in {0.05,0.1,0.2} x 1e5 samples: max escape = " << escape
               << "; nesting " << (nested ? "ok" : "broken") << "; 1e3-point monotonicity " << (monotone ? "ok" : "broken");
}

void corners_and_cap(Outcome& out) {
    Rng rng(1008);
    double diff = 0.0;
    for (Eigen::Index n = 2; n <= 6; ++n) {
        for (int i = 0; i < 200; ++i) {
            Eigen::VectorXd l(n), u(n);
            for (Eigen::Index g = 0; g < n; ++g) {
                const double a = uniform(rng), b = uniform(rng);
                l(g) = std::min(a, b);
                u(g) = std::max(a, b);
            }
            Eigen::VectorXd x(n);
            double brute = 0.0;
            corners(l, u, x, 0, brute);
            diff = std::max(diff, std::abs(bound_eop_corners(l, u) - brute));
        }
        diff = std::max(diff, std::abs(bound_eop_corners(Eigen::VectorXd::Zero(n), Eigen::VectorXd::Ones(n)) - eop_cap(n)));
    }
    out.require(diff <= 1e-12, "corner mismatch " + std::to_string(diff));

    double over = -kInf;
    for (int i = 0; i < 60; ++i) {
        const Eigen::Index n = uniform_int(rng, 2, 6), bins = uniform_int(rng, 2, 6);
        const auto d = random_distribution(rng, bins, n);
        const auto p = random_policy(rng, bins, n);
        const auto r = sup_eop_covariate_shift(p, d, ShiftBudget(DivergenceKind::weighted_l2, random_budget(rng, n, 2.0)),
                                               5000, stream_seed(88, static_cast<std::uint64_t>(i)));
        over = std::max(over, r.v_estimate - eop_cap(n));
    }
    out.require(over <= 0.0, "oracle above cap by " + std::to_string(over));
    out.detail << "1000 interval sets, |G| = 2..6: max |corner - brute force| = " << diff
               << "; 60 oracle searches: max(v - eop_cap) = " << over;
}

void lipschitz_slope(Outcome& out) {
    Rng rng(1009);
    double worst = -kInf;
    for (int i = 0; i < 200; ++i) {
        const Eigen::Index bins = uniform_int(rng, 1, 6), n = uniform_int(rng, 2, 4);
        const auto d = random_distribution(rng, bins, n);
        const auto p = random_policy(rng, bins, n);
        const Eigen::VectorXd gap = rate_gap(outcome_stats(p, d));
        const Eigen::VectorXd b = random_budget(rng, n, 0.3);
        const double v0 = sup_dp_label_shift(p, d, ShiftBudget(DivergenceKind::qual_rate, b)).v_estimate;
        for (Eigen::Index g = 0; g < n; ++g) {
            for (double h : {1e-3, 1e-5}) {
                Eigen::VectorXd bh = b;
                bh(g) += h;
                const double v1 = sup_dp_label_shift(p, d, ShiftBudget(DivergenceKind::qual_rate, bh)).v_estimate;
                worst = std::max(worst, (v1 - v0) / h - static_cast<double>(n - 1) * gap(g));
            }
        }
    }
    out.require(worst <= 1e-9, "slope excess " + std::to_string(worst));
    out.detail << "200 instances, forward differences h in {1e-3,1e-5}: max(slope - (|G|-1)|b+ - b-|) = " << worst;
}

void determinism(Outcome& out) {
    const std::string dir = FAIRSHIFT_DATA_DIR;
    const auto schema = load_schema(dir + "/schema_coarse.json");
    const auto data = ingest(dir + "/strategic_source.csv", dir + "/strategic_target.csv", schema);
    SweepOptions o;
    o.oracle = true;
    o.seed = 20240607;
    std::string text[2];
    const auto tmp = std::filesystem::temp_directory_path();
    for (int run = 0; run < 2; ++run) {
        const auto grid = sweep(data.source, *data.target, data.scores, linspace(0.05, 0.95, 19),
                                linspace(0.05, 0.95, 19), o);
        const auto path = (tmp / ("fairshift_acceptance_" + std::to_string(run) + ".json")).string();
        emit(grid, GridFormat::json, path);
        std::ifstream in(path, std::ios::binary);
        text[run].assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
        std::remove(path.c_str());
    }
    out.require(!text[0].empty() && text[0] == text[1], "JSON differs between runs");
    out.detail << "19x19 sweep with covariate oracle, seed " << *o.seed << ": " << text[0].size()
               << " bytes, identical = " << (text[0] == text[1] ? "yes" : "no");
}

} // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {"zero-shift identity", 10, zero_shift},
        {"label-shift soundness and tightness", kInf, label_soundness},
        {"covariate-shift soundness (binary and |Y|=3)", kInf, covariate_soundness},
        {"covariance identity", kInf, covariance_identity},
        {"strategic-response statistics and grid", 60, strategic_statistics},
        {"replicator dynamics", kInf, replicator},
        {"geometric EOp interval", 120, geometric},
        {"EOp corner bound and cap", kInf, corners_and_cap},
        {"Lipschitz slope", kInf, lipschitz_slope},
        {"end-to-end determinism", kInf, determinism},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        Outcome out;
        const auto start = std::chrono::steady_clock::now();
        try {
            c.run(out);
        } catch (const std::exception& e) {
            out.pass = false;
            out.detail << "exception: " << e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (secs > c.time_limit) {
            out.pass = false;
            out.detail << "; runtime " << secs << " s exceeds " << c.time_limit << " s";
        }
        std::cout << (out.pass ? "PASS" : "FAIL") << "  " << c.name << "  [" << std::fixed << std::setprecision(2)
                  << secs << " s]  " << std::defaultfloat << std::setprecision(6) << out.detail.str() << std::endl;
        failures += out.pass ? 0 : 1;
    }
    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
    return failures == 0 ? 0 : 1;
}
