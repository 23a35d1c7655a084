#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fairshift/errors.hpp"
#include "fairshift/shift.hpp"
#include "support/instances.hpp"

using namespace fairshift;
using namespace fairshift::testing;

namespace {

// One group, two bins, Y = 1 in both; r is the feature marginal.
EmpiricalDistribution two_bin(double r0, double r1) {
    Eigen::MatrixXd m(2, 2);
    m << 0.0, r0, 0.0, r1;
    return EmpiricalDistribution({"a", "b"}, {0, 1}, {"g"}, {m});
}

EmpiricalDistribution with_qual(double q) {
    Eigen::MatrixXd m(2, 2);
    m << 0.5 * (1 - q), 0.5 * q, 0.5 * (1 - q), 0.5 * q;
    return EmpiricalDistribution({"a", "b"}, {0, 1}, {"g"}, {m});
}

} // namespace

TEST_CASE("identity shift has unit reweighting and zero divergence [TRIVIAL]") {
    Rng rng(1);
    const auto s = random_distribution(rng, 4, 3);
    CHECK(reweighting(s, s).omega.isApprox(Eigen::MatrixXd::Ones(4, 3)));
    CHECK(divergence_var_omega(s, s).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(divergence_qual_rate(s, s).isZero());
    CHECK(divergence_weighted_l2(s, s).isZero());
}

TEST_CASE("source (0.5,0.5), target (0.25,0.75) gives omega (0.5,1.5) and Var 0.25 [DERIVED]") {
    const auto s = two_bin(0.5, 0.5);
    const auto t = two_bin(0.25, 0.75);
    const auto w = reweighting(t, s);
    CHECK(w.omega(0, 0) == doctest::Approx(0.25 / 0.5));
    CHECK(w.omega(1, 0) == doctest::Approx(0.75 / 0.5));
    CHECK(reweighting_mean(w, s)(0) == doctest::Approx(1.0));
    // E[omega^2] - E[omega]^2 by direct expectation.
    const double e2 = 0.5 * 0.25 + 0.5 * 2.25;
    CHECK(reweighting_variance(w, s)(0) == doctest::Approx(e2 - 1.0));
    CHECK(divergence_var_omega(t, s)(0) == doctest::Approx(0.25));
}

TEST_CASE("target mass on a zero-source bin is a support error [TRIVIAL]") {
    CHECK_THROWS_AS(reweighting(two_bin(0.5, 0.5), two_bin(1.0, 0.0)), ValidationError);
}

TEST_CASE("qualification-rate divergence [DERIVED]") {
    CHECK(divergence_qual_rate(with_qual(0.55), with_qual(0.4))(0) == doctest::Approx(0.55 - 0.4));
    CHECK(divergence_qual_rate(with_qual(1.0), with_qual(0.0))(0) == 1.0);
}

TEST_CASE("weighted l2 with unit weights [DERIVED]") {
    const Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(2, 1);
    const double expected = std::sqrt(0.2 * 0.2 + 0.2 * 0.2);
    CHECK(divergence_weighted_l2(two_bin(0.3, 0.7), two_bin(0.5, 0.5), ones)(0) == doctest::Approx(expected));
    CHECK(expected == doctest::Approx(0.28284).epsilon(1e-5));
}

TEST_CASE("label shift to the same rates is the identity [TRIVIAL]") {
    Rng rng(2);
    const auto s = random_distribution(rng, 5, 3);
    const Eigen::VectorXd q = (Eigen::Vector3d() << s.label_rate(0, 1), s.label_rate(1, 1), s.label_rate(2, 1)).finished();
    const auto t = apply_label_shift(s, q);
    for (Eigen::Index g = 0; g < 3; ++g) CHECK((t.joint(g) - s.joint(g)).cwiseAbs().maxCoeff() < 1e-16);
}

TEST_CASE("label shift preserves Pr(X | Y, G) and hits the requested rates [DERIVED]") {
    Rng rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        const auto s = random_distribution(rng, 4, 2);
        const Eigen::Vector2d q(uniform(rng), uniform(rng));
        const auto t = apply_label_shift(s, q);
        CHECK(divergence_qual_rate(t, s)(0) == doctest::Approx(std::abs(q(0) - s.label_rate(0, 1))));
        CHECK(t.label_rate(1, 1) == doctest::Approx(q(1)));
        CHECK(label_shift_residual(t, s) < 1e-12);
        CHECK(t.group_marginal().isApprox(s.group_marginal(), 1e-12));
    }
}

TEST_CASE("covariate shift preserves Pr(Y | X, G) [DERIVED]") {
    Rng rng(4);
    for (int trial = 0; trial < 50; ++trial) {
        const auto s = random_distribution(rng, 5, 3);
        const auto t = random_covariate_target(rng, s);
        CHECK(covariate_shift_residual(t, s) < 1e-12);
        CHECK(t.group_marginal().isApprox(s.group_marginal(), 1e-12));
        CHECK(reweighting_mean(reweighting(t, s), s).isApprox(Eigen::Vector3d::Ones(), 1e-12));
    }
}

TEST_CASE("budget entries must be finite and non-negative [TRIVIAL]") {
    CHECK_THROWS_AS(ShiftBudget(DivergenceKind::var_omega, Eigen::Vector2d(0.1, -0.1)), ValidationError);
    CHECK_NOTHROW(ShiftBudget(DivergenceKind::qual_rate, Eigen::Vector2d(0.0, 0.3)));
}

TEST_CASE("divergence names round-trip [TRIVIAL]") {
    for (auto k : {DivergenceKind::var_omega, DivergenceKind::qual_rate, DivergenceKind::weighted_l2})
        CHECK(parse_divergence_kind(to_string(k)) == k);
    CHECK_THROWS_AS(parse_divergence_kind("kl"), ValidationError);
}
