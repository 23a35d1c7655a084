#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fairshift/distribution.hpp"
#include "fairshift/errors.hpp"
#include "support/instances.hpp"

using namespace fairshift;
using namespace fairshift::testing;

TEST_CASE("two records normalize to half mass each [TRIVIAL]") {
    const auto d = build_empirical({{"x0", 1, "g", 1.0}, {"x0", 0, "h", 1.0}});
    CHECK(d.num_bins() == 1);
    CHECK(d.num_groups() == 2);
    const auto gi = *d.group_index("g");
    const auto hi = *d.group_index("h");
    const auto y1 = *d.label_index(1);
    const auto y0 = *d.label_index(0);
    CHECK(d.mass(0, y1, gi) == 0.5);
    CHECK(d.mass(0, y0, hi) == 0.5);
    CHECK(d.mass(0, y0, gi) == 0.0);
}

TEST_CASE("declared group without records is rejected [TRIVIAL]") {
    Alphabet declared;
    declared.groups = {"g", "h"};
    CHECK_THROWS_WITH_AS(build_empirical({{"x0", 1, "h", 1.0}, {"x1", 0, "h", 2.0}}, declared),
                         "group g has zero mass", ValidationError);
}

TEST_CASE("weights (1,1,2,4) normalize to (0.125,0.125,0.25,0.5) [DERIVED]") {
    const std::vector<Record> records = {{"a", 0, "g", 1}, {"a", 1, "g", 1}, {"b", 0, "g", 2}, {"b", 1, "g", 4}};
    const auto d = build_empirical(records);
    double total = 0.0;
    for (const auto& r : records) total += r.weight;
    for (const auto& r : records) {
        const double m = d.mass(*d.bin_index(r.bin), *d.label_index(r.label), 0);
        CHECK(m == doctest::Approx(r.weight / total).epsilon(1e-15));
    }
    CHECK(d.mass(0, 0, 0) == 0.125);
    CHECK(d.mass(1, 1, 0) == 0.5);
}

TEST_CASE("negative and non-finite weights are rejected [TRIVIAL]") {
    CHECK_THROWS_AS(build_empirical({{"a", 0, "g", -1.0}}), ValidationError);
    CHECK_THROWS_AS(build_empirical({{"a", 0, "g", std::nan("")}}), ValidationError);
}

TEST_CASE("accept-all policy gives unit rates [TRIVIAL]") {
    Rng rng(3);
    const auto d = random_distribution(rng, 4, 3);
    std::vector<Eigen::MatrixXd> rows(3, Eigen::MatrixXd(4, 2));
    for (auto& r : rows) r << 0, 1, 0, 1, 0, 1, 0, 1;
    const Policy p(d.bins(), d.groups(), {0, 1}, rows);
    const auto s = outcome_stats(p, d);
    for (Eigen::Index g = 0; g < 3; ++g) {
        CHECK(s.beta(g) == doctest::Approx(1.0));
        CHECK(*s.beta_plus[g] == doctest::Approx(1.0));
        CHECK(*s.beta_minus[g] == doctest::Approx(1.0));
    }
}

TEST_CASE("ten-bin uniform instance with threshold at bin 5 [DERIVED]") {
    std::vector<Record> records;
    for (int x = 0; x < 10; ++x) records.push_back({std::to_string(x), x >= 5 ? 1 : 0, "g", 1.0});
    Alphabet declared;
    for (int x = 0; x < 10; ++x) declared.bins.push_back(std::to_string(x));
    declared.labels = {0, 1};
    const auto d = build_empirical(records, declared);
    ScoreTable scores{d.bins(), d.groups(), Eigen::MatrixXd(10, 1)};
    for (int x = 0; x < 10; ++x) scores.scores(x, 0) = x;
    const auto p = threshold_policy(scores, Eigen::VectorXd::Constant(1, 4.5));

    // Brute-force enumeration of the table.
    double accepted = 0, pos = 0, tp = 0, fp = 0;
    for (int x = 0; x < 10; ++x) {
        const double a = p.rows(0)(x, 1);
        accepted += 0.1 * a;
        if (x >= 5) {
            pos += 0.1;
            tp += 0.1 * a;
        } else {
            fp += 0.1 * a;
        }
    }
    const auto s = outcome_stats(p, d);
    CHECK(s.beta(0) == doctest::Approx(accepted));
    CHECK(s.beta(0) == doctest::Approx(0.5));
    CHECK(*s.beta_plus[0] == doctest::Approx(tp / pos));
    CHECK(*s.beta_plus[0] == doctest::Approx(1.0));
    CHECK(*s.beta_minus[0] == doctest::Approx(fp / (1 - pos)));
    CHECK(*s.beta_minus[0] == doctest::Approx(0.0));
    CHECK(s.qual(0) == doctest::Approx(0.5));
}

TEST_CASE("beta = TPR*Q + FPR*(1-Q) on random 3-bin 2-group tables [DERIVED]") {
    Rng rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const auto d = random_distribution(rng, 3, 2);
        const auto p = random_policy(rng, 3, 2);
        const auto s = outcome_stats(p, d);
        for (Eigen::Index g = 0; g < 2; ++g) {
            double mg = 0, acc = 0, pos = 0, tp = 0, neg = 0, fp = 0;
            for (Eigen::Index x = 0; x < 3; ++x) {
                const double a = p.rows(g)(x, 1);
                mg += d.mass(x, 0, g) + d.mass(x, 1, g);
                acc += a * (d.mass(x, 0, g) + d.mass(x, 1, g));
                pos += d.mass(x, 1, g);
                tp += a * d.mass(x, 1, g);
                neg += d.mass(x, 0, g);
                fp += a * d.mass(x, 0, g);
            }
            CHECK(s.beta(g) == doctest::Approx(acc / mg).epsilon(1e-12));
            CHECK(*s.beta_plus[g] == doctest::Approx(tp / pos).epsilon(1e-12));
            CHECK(*s.beta_minus[g] == doctest::Approx(fp / neg).epsilon(1e-12));
            CHECK(std::abs(s.beta(g) - (*s.beta_plus[g] * s.qual(g) + *s.beta_minus[g] * (1 - s.qual(g)))) < 1e-12);
        }
    }
}

TEST_CASE("TPR is undefined when a group has no positives [TRIVIAL]") {
    const auto d = build_empirical({{"a", 0, "g", 1.0}, {"a", 1, "h", 1.0}, {"b", 0, "h", 1.0}});
    ScoreTable scores{d.bins(), d.groups(), Eigen::MatrixXd::Constant(2, 2, 1.0)};
    const auto s = outcome_stats(threshold_policy(scores, Eigen::Vector2d(0.0, 0.0)), d);
    const auto g = *d.group_index("g");
    CHECK_FALSE(s.beta_plus[g].has_value());
    CHECK(s.beta_minus[g].has_value());
}

TEST_CASE("threshold policy extremes [TRIVIAL]") {
    ScoreTable scores{{"a", "b", "c"}, {"g"}, Eigen::Vector3d(0.1, 0.5, 0.9)};
    const auto all = threshold_policy(scores, Eigen::VectorXd::Constant(1, -1.0));
    const auto none = threshold_policy(scores, Eigen::VectorXd::Constant(1, 2.0));
    CHECK(all.prob_of(0, 1).isApprox(Eigen::Vector3d::Ones()));
    CHECK(none.prob_of(0, 1).isZero());
}

TEST_CASE("midpoint scores with tau 0.5 accept exactly the upper half [DERIVED]") {
    const int n = 10;
    ScoreTable scores;
    scores.groups = {"g"};
    scores.scores.resize(n, 1);
    for (int x = 0; x < n; ++x) {
        scores.bins.push_back(std::to_string(x));
        scores.scores(x, 0) = (x + 0.5) / n;
    }
    const auto p = threshold_policy(scores, Eigen::VectorXd::Constant(1, 0.5));
    for (int x = 0; x < n; ++x) CHECK(p.rows(0)(x, 1) == (x >= n / 2 ? 1.0 : 0.0));
}

TEST_CASE("mixture keeps alphabets and interpolates masses [TRIVIAL]") {
    Rng rng(5);
    const auto a = random_distribution(rng, 3, 2);
    const auto b = random_distribution(rng, 3, 2);
    const auto m = mixture(a, b, 0.25);
    CHECK(m.same_alphabets(a));
    CHECK(m.mass(1, 1, 1) == doctest::Approx(0.25 * a.mass(1, 1, 1) + 0.75 * b.mass(1, 1, 1)));
    CHECK_THROWS_AS(mixture(a, b, 1.5), ValidationError);
}

TEST_CASE("policy and distribution alphabets must agree [TRIVIAL]") {
    Rng rng(9);
    const auto d = random_distribution(rng, 3, 2);
    const auto p = random_policy(rng, 4, 2);
    CHECK_THROWS_AS(outcome_stats(p, d), ValidationError);
}
