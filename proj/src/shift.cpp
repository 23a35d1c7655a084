#include "fairshift/shift.hpp"

#include "fairshift/errors.hpp"

#include <cmath>
#include <limits>

namespace fairshift {

DivergenceKind parse_divergence_kind(const std::string& name) {
    if (name == "var-omega") return DivergenceKind::var_omega;
    if (name == "qual-rate") return DivergenceKind::qual_rate;
    if (name == "weighted-l2") return DivergenceKind::weighted_l2;
    throw ValidationError("unknown divergence kind: " + name);
}

std::string to_string(DivergenceKind kind) {
    switch (kind) {
    case DivergenceKind::var_omega: return "var-omega";
    case DivergenceKind::qual_rate: return "qual-rate";
    case DivergenceKind::weighted_l2: return "weighted-l2";
    }
    return "unknown";
}

ShiftBudget::ShiftBudget(DivergenceKind k, Eigen::VectorXd b) : kind(k), per_group(std::move(b)) {
    if (!per_group.allFinite() || (per_group.array() < 0.0).any())
        throw ValidationError("shift budget entries must be finite and >= 0");
}

namespace {

void require_same(const EmpiricalDistribution& a, const EmpiricalDistribution& b) {
    if (!a.same_alphabets(b)) throw ValidationError("source and target alphabets differ");
}

} // namespace

Eigen::MatrixXd feature_marginals(const EmpiricalDistribution& dist) {
    Eigen::MatrixXd out(dist.num_bins(), dist.num_groups());
    for (Eigen::Index g = 0; g < dist.num_groups(); ++g) out.col(g) = dist.feature_marginal(g);
    return out;
}

ReweightingTable reweighting(const EmpiricalDistribution& target, const EmpiricalDistribution& source) {
    require_same(target, source);
    const Eigen::MatrixXd rt = feature_marginals(target);
    const Eigen::MatrixXd rs = feature_marginals(source);
    ReweightingTable out{Eigen::MatrixXd::Ones(rs.rows(), rs.cols())};
    for (Eigen::Index g = 0; g < rs.cols(); ++g) {
        for (Eigen::Index x = 0; x < rs.rows(); ++x) {
            if (rs(x, g) > 0.0)
                out.omega(x, g) = rt(x, g) / rs(x, g);
            else if (rt(x, g) > 0.0)
                throw ValidationError("support violation: target mass on bin " + source.bins()[static_cast<size_t>(x)] +
                                      " where group " + source.groups()[static_cast<size_t>(g)] + " has no source mass");
        }
    }
    return out;
}

Eigen::VectorXd reweighting_mean(const ReweightingTable& table, const EmpiricalDistribution& source) {
    const Eigen::MatrixXd rs = feature_marginals(source);
    return (rs.array() * table.omega.array()).colwise().sum().transpose();
}

Eigen::VectorXd reweighting_variance(const ReweightingTable& table, const EmpiricalDistribution& source) {
    const Eigen::MatrixXd rs = feature_marginals(source);
    const Eigen::VectorXd mean = reweighting_mean(table, source);
    Eigen::VectorXd out(rs.cols());
    for (Eigen::Index g = 0; g < rs.cols(); ++g)
        out(g) = (rs.col(g).array() * (table.omega.col(g).array() - mean(g)).square()).sum();
    return out;
}

Eigen::VectorXd divergence_var_omega(const EmpiricalDistribution& target, const EmpiricalDistribution& source) {
    return reweighting_variance(reweighting(target, source), source);
}

Eigen::VectorXd divergence_qual_rate(const EmpiricalDistribution& target, const EmpiricalDistribution& source) {
    require_same(target, source);
    const Eigen::Index pos = source.positive_label();
    Eigen::VectorXd out(source.num_groups());
    for (Eigen::Index g = 0; g < out.size(); ++g)
        out(g) = std::abs(source.label_rate(g, pos) - target.label_rate(g, pos));
    return out;
}

Eigen::VectorXd divergence_weighted_l2(const EmpiricalDistribution& target, const EmpiricalDistribution& source,
                                       const Eigen::MatrixXd& s_weights) {
    require_same(target, source);
    if (s_weights.rows() != source.num_bins() || s_weights.cols() != source.num_groups())
        throw ValidationError("weight table shape does not match alphabets");
    if (!s_weights.allFinite() || (s_weights.array() <= 0.0).any())
        throw ValidationError("inner-product weights must be strictly positive");
    const Eigen::MatrixXd diff = feature_marginals(target) - feature_marginals(source);
    return (diff.array().square() * s_weights.array()).colwise().sum().sqrt().transpose();
}

Eigen::MatrixXd positive_label_weights(const EmpiricalDistribution& source) {
    const Eigen::Index pos = source.positive_label();
    Eigen::MatrixXd s(source.num_bins(), source.num_groups());
    for (Eigen::Index g = 0; g < source.num_groups(); ++g) {
        const auto cond = source.label_given_feature(g, pos);
        for (Eigen::Index x = 0; x < source.num_bins(); ++x) {
            const auto& v = cond[static_cast<size_t>(x)];
            if (!v) throw ValidationError("Pr(Y=1 | x, g) undefined: bin has no source mass");
            s(x, g) = *v;
        }
    }
    return s;
}

Eigen::VectorXd divergence_weighted_l2(const EmpiricalDistribution& target, const EmpiricalDistribution& source) {
    return divergence_weighted_l2(target, source, positive_label_weights(source));
}

ShiftBudget realized_budget(DivergenceKind kind, const EmpiricalDistribution& target,
                            const EmpiricalDistribution& source) {
    switch (kind) {
    case DivergenceKind::var_omega: return {kind, divergence_var_omega(target, source)};
    case DivergenceKind::qual_rate: return {kind, divergence_qual_rate(target, source)};
    case DivergenceKind::weighted_l2: return {kind, divergence_weighted_l2(target, source)};
    }
    throw ValidationError("unknown divergence kind");
}

EmpiricalDistribution apply_label_shift(const EmpiricalDistribution& source, const Eigen::VectorXd& new_qual) {
    const Eigen::Index pos = source.positive_label();
    const Eigen::Index neg = 1 - pos;
    if (new_qual.size() != source.num_groups()) throw ValidationError("one qualification rate per group required");
    std::vector<Eigen::MatrixXd> mass;
    for (Eigen::Index g = 0; g < source.num_groups(); ++g) {
        const double q_new = new_qual(g);
        if (!(q_new >= 0.0 && q_new <= 1.0)) throw ValidationError("qualification rate outside [0, 1]");
        const Eigen::MatrixXd& joint = source.joint(g);
        const double gm = source.group_mass(g);
        const double pos_mass = joint.col(pos).sum();
        const double neg_mass = joint.col(neg).sum();
        if (q_new == pos_mass / gm) {
            mass.push_back(joint);
            continue;
        }
        if (q_new > 0.0 && !(pos_mass > 0.0))
            throw ValidationError("Pr(X | Y=1, G) undefined for group " + source.groups()[static_cast<size_t>(g)]);
        if (q_new < 1.0 && !(neg_mass > 0.0))
            throw ValidationError("Pr(X | Y=0, G) undefined for group " + source.groups()[static_cast<size_t>(g)]);
        Eigen::MatrixXd m = Eigen::MatrixXd::Zero(joint.rows(), joint.cols());
        if (q_new > 0.0) m.col(pos) = joint.col(pos) * (gm * q_new / pos_mass);
        if (q_new < 1.0) m.col(neg) = joint.col(neg) * (gm * (1.0 - q_new) / neg_mass);
        mass.push_back(std::move(m));
    }
    return EmpiricalDistribution(source.bins(), source.labels(), source.groups(), std::move(mass));
}

EmpiricalDistribution apply_covariate_shift(const EmpiricalDistribution& source, const Eigen::MatrixXd& new_marginals) {
    if (new_marginals.rows() != source.num_bins() || new_marginals.cols() != source.num_groups())
        throw ValidationError("marginal table shape does not match alphabets");
    std::vector<Eigen::MatrixXd> mass;
    for (Eigen::Index g = 0; g < source.num_groups(); ++g) {
        const auto col = new_marginals.col(g);
        if (!col.allFinite() || (col.array() < 0.0).any()) throw ValidationError("feature marginal has negative mass");
        if (std::abs(col.sum() - 1.0) > kMassTolerance) throw ValidationError("feature marginal does not sum to one");
        const Eigen::MatrixXd& joint = source.joint(g);
        const double gm = source.group_mass(g);
        Eigen::MatrixXd m = Eigen::MatrixXd::Zero(joint.rows(), joint.cols());
        for (Eigen::Index x = 0; x < joint.rows(); ++x) {
            if (col(x) == 0.0) continue;
            const double row = joint.row(x).sum();
            if (!(row > 0.0))
                throw ValidationError("requested mass on bin " + source.bins()[static_cast<size_t>(x)] +
                                      " where Pr(Y | X, G) is undefined");
            m.row(x) = joint.row(x) * (gm * col(x) / row);
        }
        mass.push_back(std::move(m));
    }
    return EmpiricalDistribution(source.bins(), source.labels(), source.groups(), std::move(mass));
}

double covariate_shift_residual(const EmpiricalDistribution& target, const EmpiricalDistribution& source) {
    require_same(target, source);
    double worst = 0.0;
    for (Eigen::Index g = 0; g < source.num_groups(); ++g) {
        const Eigen::MatrixXd& s = source.joint(g);
        const Eigen::MatrixXd& t = target.joint(g);
        for (Eigen::Index x = 0; x < s.rows(); ++x) {
            const double srow = s.row(x).sum(), trow = t.row(x).sum();
            if (!(trow > 0.0)) continue;
            if (!(srow > 0.0)) return std::numeric_limits<double>::infinity();
            worst = std::max(worst, (t.row(x) / trow - s.row(x) / srow).cwiseAbs().maxCoeff());
        }
    }
    return worst;
}

double label_shift_residual(const EmpiricalDistribution& target, const EmpiricalDistribution& source) {
    require_same(target, source);
    double worst = 0.0;
    for (Eigen::Index g = 0; g < source.num_groups(); ++g) {
        const Eigen::MatrixXd& s = source.joint(g);
        const Eigen::MatrixXd& t = target.joint(g);
        for (Eigen::Index y = 0; y < s.cols(); ++y) {
            const double scol = s.col(y).sum(), tcol = t.col(y).sum();
            if (!(tcol > 0.0)) continue;
            if (!(scol > 0.0)) return std::numeric_limits<double>::infinity();
            worst = std::max(worst, (t.col(y) / tcol - s.col(y) / scol).cwiseAbs().maxCoeff());
        }
    }
    return worst;
}

} // namespace fairshift
