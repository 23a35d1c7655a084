#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace fairshift {

constexpr double kMassTolerance = 1e-12;
constexpr double kIdentityTolerance = 1e-10;

/// A conditional rate that may be undefined because its conditioning event has zero mass.
using MaybeRate = std::optional<double>;

struct Record {
    std::string bin;
    int label;
    std::string group;
    double weight = 1.0;
};

/// Explicit alphabets. Empty fields are inferred from first appearance in the records.
struct Alphabet {
    std::vector<std::string> bins;
    std::vector<int> labels;
    std::vector<std::string> groups;
};

/**
 * Finite joint probability table over (feature bin, label, group).
 *
 * Stored as one |X| x |Y| matrix of joint masses Pr(X=x, Y=y, G=g) per group.
 * Immutable after construction; all masses are non-negative, the total is one and
 * every group has positive marginal mass.
 */
class EmpiricalDistribution {
public:
    EmpiricalDistribution(std::vector<std::string> bins, std::vector<int> labels,
                          std::vector<std::string> groups, std::vector<Eigen::MatrixXd> mass);

    const std::vector<std::string>& bins() const { return bins_; }
    const std::vector<int>& labels() const { return labels_; }
    const std::vector<std::string>& groups() const { return groups_; }

    Eigen::Index num_bins() const { return static_cast<Eigen::Index>(bins_.size()); }
    Eigen::Index num_labels() const { return static_cast<Eigen::Index>(labels_.size()); }
    Eigen::Index num_groups() const { return static_cast<Eigen::Index>(groups_.size()); }

    /// Joint masses Pr(X, Y, G=g) as a |X| x |Y| matrix.
    const Eigen::MatrixXd& joint(Eigen::Index g) const { return mass_[static_cast<size_t>(g)]; }
    double mass(Eigen::Index x, Eigen::Index y, Eigen::Index g) const { return joint(g)(x, y); }

    double group_mass(Eigen::Index g) const { return joint(g).sum(); }
    Eigen::VectorXd group_marginal() const;

    /// Pr(X | G=g).
    Eigen::VectorXd feature_marginal(Eigen::Index g) const;
    /// Pr(Y=label | X=x, G=g) per bin; nullopt where Pr(X=x, G=g) = 0.
    std::vector<MaybeRate> label_given_feature(Eigen::Index g, Eigen::Index label) const;
    /// Pr(Y=label | G=g).
    double label_rate(Eigen::Index g, Eigen::Index label) const;

    std::optional<Eigen::Index> label_index(int value) const;
    std::optional<Eigen::Index> group_index(const std::string& id) const;
    std::optional<Eigen::Index> bin_index(const std::string& id) const;

    /// Index of label value 1; throws ValidationError unless the label alphabet is {0, 1}.
    Eigen::Index positive_label() const;
    bool is_binary() const;

    bool same_alphabets(const EmpiricalDistribution& other) const;

private:
    std::vector<std::string> bins_;
    std::vector<int> labels_;
    std::vector<std::string> groups_;
    std::vector<Eigen::MatrixXd> mass_;
};

/// Normalize weighted records into a joint table; see Alphabet for ordering rules.
EmpiricalDistribution build_empirical(const std::vector<Record>& records, const Alphabet& declared = {});

/// Mixture alpha*a + (1-alpha)*b over identical alphabets.
EmpiricalDistribution mixture(const EmpiricalDistribution& a, const EmpiricalDistribution& b, double alpha);

/**
 * Stochastic policy pi(x, g): a distribution over predicted labels for every (bin, group).
 * There is no label index, so predictions are independent of Y given (X, G).
 */
class Policy {
public:
    Policy(std::vector<std::string> bins, std::vector<std::string> groups, std::vector<int> predicted_labels,
           std::vector<Eigen::MatrixXd> rows);

    const std::vector<std::string>& bins() const { return bins_; }
    const std::vector<std::string>& groups() const { return groups_; }
    const std::vector<int>& predicted_labels() const { return predicted_; }

    /// |X| x |Y_hat| matrix of Pr(Y_hat = column | x, g).
    const Eigen::MatrixXd& rows(Eigen::Index g) const { return rows_[static_cast<size_t>(g)]; }

    /// Pr(Y_hat = value | x, g) as a vector over bins (zero if value is not predicted).
    Eigen::VectorXd prob_of(Eigen::Index g, int value) const;

private:
    std::vector<std::string> bins_;
    std::vector<std::string> groups_;
    std::vector<int> predicted_;
    std::vector<Eigen::MatrixXd> rows_;
};

/// Per-(bin, group) real-valued scores. Column g holds group g's scores over bins.
struct ScoreTable {
    std::vector<std::string> bins;
    std::vector<std::string> groups;
    Eigen::MatrixXd scores; // |X| x |G|
};

/// Deterministic policy accepting (label 1) exactly where score > threshold of the group.
Policy threshold_policy(const ScoreTable& scores, const Eigen::VectorXd& thresholds);

/// Throws ValidationError if the policy and distribution disagree on bins or groups, or
/// if the policy predicts a label outside the distribution's label alphabet.
void check_alphabets(const Policy& policy, const EmpiricalDistribution& dist);

/**
 * Per-group outcome statistics. Binary fields (beta, beta_plus, beta_minus, qual) are
 * only populated when the label alphabet is {0, 1}.
 */
struct GroupOutcomeStats {
    bool binary = false;
    Eigen::VectorXd beta;              ///< Pr(Y_hat=1 | G=g)
    std::vector<MaybeRate> beta_plus;  ///< TPR, undefined when Q_g = 0
    std::vector<MaybeRate> beta_minus; ///< FPR, undefined when Q_g = 1
    Eigen::VectorXd qual;              ///< Q_g = Pr(Y=1 | G=g)
    /// rho[g](y, y_hat) = Pr(Y=y, Y_hat=y_hat | G=g), indexed by label values in the
    /// distribution's label order for rows and the policy's predicted order for columns.
    std::vector<Eigen::MatrixXd> rho;
    /// class_rates(g, k) = Pr(Y_hat = predicted_labels[k] | G=g).
    Eigen::MatrixXd class_rates;
    std::vector<int> labels;
    std::vector<int> predicted_labels;

    /// Binary outcome masses in canonical order: rho(g)(y, y_hat) for y, y_hat in {0, 1}.
    Eigen::Matrix2d binary_rho(Eigen::Index g) const;
    Eigen::Index num_groups() const { return class_rates.rows(); }
};

GroupOutcomeStats outcome_stats(const Policy& policy, const EmpiricalDistribution& dist);

/// Joint outcome masses Pr(X=x, Y=y, Y_hat=k | G=g) for one group as |X|*|Y| x |Y_hat|
/// (row index x * |Y| + y).
Eigen::MatrixXd outcome_table(const Policy& policy, const EmpiricalDistribution& dist, Eigen::Index g);

} // namespace fairshift
