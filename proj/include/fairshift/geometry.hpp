#pragma once

#include "fairshift/bounds.hpp"
#include "fairshift/distribution.hpp"
#include "fairshift/shift.hpp"

#include <Eigen/Dense>

#include <vector>

namespace fairshift {

/// <a, b>_s = sum_x a(x) b(x) s(x).
template <typename A, typename B, typename W>
typename A::Scalar inner_product(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b,
                                 const Eigen::MatrixBase<W>& s) {
    if (a.size() != b.size() || a.size() != s.size()) throw std::invalid_argument("inner_product: length mismatch");
    return (a.array() * b.array() * s.array()).sum();
}

template <typename A, typename W>
typename A::Scalar weighted_norm(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<W>& s) {
    using std::sqrt;
    return sqrt(inner_product(a, a, s));
}

/**
 * One group's view of the TPR geometry.
 *
 * With <a, b> weighted by s(x) = Pr_S(Y=1 | x, g), a feature marginal r satisfies
 * beta+ = <r, t> / <r, 1>, and every marginal lies on the hyperplane <r, 1/s> = 1.
 * e1, e2 is an orthonormal basis of span{t, 1} with e1 along t; xi is the angle from t to 1.
 */
struct GeometricContext {
    Eigen::VectorXd r_source;
    Eigen::VectorXd s;
    Eigen::VectorXd t;
    Eigen::VectorXd ones;
    Eigen::VectorXd e1;
    Eigen::VectorXd e2;
    double xi = 0.0;
    double t_norm = 0.0;
    double ones_norm = 0.0;
    /// t is zero or parallel to 1, so beta+ is the same for every admissible r.
    bool degenerate = false;

    /// ||1|| / ||t||.
    double norm_ratio() const { return ones_norm / t_norm; }
};

struct TprInterval {
    double lower = 0.0;
    double upper = 1.0;
    /// Smallest and largest angle from t reached by the feasible set in the (t, 1)-plane.
    double phi_lower = 0.0;
    double phi_upper = 0.0;
};

GeometricContext make_geometric_context(Eigen::VectorXd r_source, Eigen::VectorXd s, Eigen::VectorXd t);

/// Contexts for every group: r = Pr_S(X | g), s = Pr_S(Y=1 | X, g), t = Pr_pi(Y_hat=1 | X, g).
std::vector<GeometricContext> geometric_contexts(const Policy& policy, const EmpiricalDistribution& source);

/// <r, t> / <r, 1>.
double tpr_from_geometry(const GeometricContext& ctx, const Eigen::VectorXd& r);

/// Coordinates of r in the (e1, e2) basis.
Eigen::Vector2d plane_coordinates(const GeometricContext& ctx, const Eigen::VectorXd& r);

/// Orthogonal projection of r onto span{t, 1}.
Eigen::VectorXd plane_projection(const GeometricContext& ctx, const Eigen::VectorXd& r);

/// Component of d parallel to the hyperplane sum(r) = 1.
Eigen::VectorXd hyperplane_tangent(const GeometricContext& ctx, const Eigen::VectorXd& d);

/// sup of <r, d> over {||r - r_S|| <= radius, sum(r) = 1}.
double support_value(const GeometricContext& ctx, double radius, const Eigen::VectorXd& d);

/// cos(phi) / cos(xi - phi); strictly decreasing in phi on (xi - pi/2, xi + pi/2) for xi in (0, pi).
double cos_ratio(double xi, double phi);

/// Interval containing beta+ for every r within weighted-L2 distance `radius` of r_S on the
/// hyperplane. Positivity of r is not imposed; the result is clamped to [0, 1].
TprInterval tpr_interval(const GeometricContext& ctx, double radius);

/// Corner bound on EOp with intervals from tpr_interval and a weighted-l2 budget.
BoundReport bound_eop_geometric(const Policy& policy, const EmpiricalDistribution& source, const ShiftBudget& budget,
                                PairConvention convention = PairConvention::unordered);

} // namespace fairshift
