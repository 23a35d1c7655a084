#include "fairshift/distribution.hpp"

#include "fairshift/errors.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

namespace fairshift {

namespace {

template <typename T>
std::optional<Eigen::Index> find_index(const std::vector<T>& values, const T& value) {
    auto it = std::find(values.begin(), values.end(), value);
    if (it == values.end()) return std::nullopt;
    return static_cast<Eigen::Index>(it - values.begin());
}

template <typename T>
void require_unique(const std::vector<T>& values, const char* what) {
    std::vector<T> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw ValidationError(std::string("duplicate ") + what + " identifier");
}

template <typename T>
void append_if_new(std::vector<T>& order, std::unordered_set<T>& seen, const T& value) {
    if (seen.insert(value).second) order.push_back(value);
}

} // namespace

EmpiricalDistribution::EmpiricalDistribution(std::vector<std::string> bins, std::vector<int> labels,
                                             std::vector<std::string> groups, std::vector<Eigen::MatrixXd> mass)
    : bins_(std::move(bins)), labels_(std::move(labels)), groups_(std::move(groups)), mass_(std::move(mass)) {
    if (bins_.empty() || labels_.empty() || groups_.empty())
        throw ValidationError("distribution needs at least one bin, label and group");
    require_unique(bins_, "bin");
    require_unique(labels_, "label");
    require_unique(groups_, "group");
    if (mass_.size() != groups_.size()) throw ValidationError("one mass table per group required");

    double total = 0.0;
    for (size_t g = 0; g < mass_.size(); ++g) {
        const auto& m = mass_[g];
        if (m.rows() != num_bins() || m.cols() != num_labels())
            throw ValidationError("mass table shape does not match alphabets");
        if (!m.allFinite()) throw ValidationError("non-finite probability mass");
        if ((m.array() < 0.0).any()) throw ValidationError("negative probability mass");
        const double gm = m.sum();
        if (!(gm > 0.0)) throw ValidationError("group " + groups_[g] + " has zero mass");
        total += gm;
    }
    if (std::abs(total - 1.0) > kMassTolerance) throw ValidationError("probability masses do not sum to one");
}

Eigen::VectorXd EmpiricalDistribution::group_marginal() const {
    Eigen::VectorXd out(num_groups());
    for (Eigen::Index g = 0; g < num_groups(); ++g) out(g) = group_mass(g);
    return out;
}

Eigen::VectorXd EmpiricalDistribution::feature_marginal(Eigen::Index g) const {
    return joint(g).rowwise().sum() / group_mass(g);
}

std::vector<MaybeRate> EmpiricalDistribution::label_given_feature(Eigen::Index g, Eigen::Index label) const {
    const Eigen::MatrixXd& m = joint(g);
    std::vector<MaybeRate> out(static_cast<size_t>(num_bins()));
    for (Eigen::Index x = 0; x < num_bins(); ++x) {
        const double row = m.row(x).sum();
        if (row > 0.0) out[static_cast<size_t>(x)] = m(x, label) / row;
    }
    return out;
}

double EmpiricalDistribution::label_rate(Eigen::Index g, Eigen::Index label) const {
    return joint(g).col(label).sum() / group_mass(g);
}

std::optional<Eigen::Index> EmpiricalDistribution::label_index(int value) const { return find_index(labels_, value); }
std::optional<Eigen::Index> EmpiricalDistribution::group_index(const std::string& id) const {
    return find_index(groups_, id);
}
std::optional<Eigen::Index> EmpiricalDistribution::bin_index(const std::string& id) const {
    return find_index(bins_, id);
}

bool EmpiricalDistribution::is_binary() const {
    return labels_.size() == 2 && label_index(0).has_value() && label_index(1).has_value();
}

Eigen::Index EmpiricalDistribution::positive_label() const {
    if (!is_binary()) throw ValidationError("binary label alphabet {0, 1} required");
    return *label_index(1);
}

bool EmpiricalDistribution::same_alphabets(const EmpiricalDistribution& other) const {
    return bins_ == other.bins_ && labels_ == other.labels_ && groups_ == other.groups_;
}

EmpiricalDistribution build_empirical(const std::vector<Record>& records, const Alphabet& declared) {
    if (records.empty()) throw ValidationError("empty input");

    Alphabet order = declared;
    const bool infer_bins = order.bins.empty();
    const bool infer_labels = order.labels.empty();
    const bool infer_groups = order.groups.empty();
    std::unordered_set<std::string> seen_bins, seen_groups;
    std::unordered_set<int> seen_labels;
    for (const auto& r : records) {
        if (!(r.weight >= 0.0) || !std::isfinite(r.weight)) throw ValidationError("negative weight");
        if (infer_bins) append_if_new(order.bins, seen_bins, r.bin);
        if (infer_labels) append_if_new(order.labels, seen_labels, r.label);
        if (infer_groups) append_if_new(order.groups, seen_groups, r.group);
    }

    std::unordered_map<std::string, Eigen::Index> bin_at, group_at;
    for (size_t i = 0; i < order.bins.size(); ++i) bin_at.emplace(order.bins[i], static_cast<Eigen::Index>(i));
    for (size_t i = 0; i < order.groups.size(); ++i) group_at.emplace(order.groups[i], static_cast<Eigen::Index>(i));

    const auto nx = static_cast<Eigen::Index>(order.bins.size());
    const auto ny = static_cast<Eigen::Index>(order.labels.size());
    std::vector<Eigen::MatrixXd> mass(order.groups.size(), Eigen::MatrixXd::Zero(nx, ny));
    double total = 0.0;
    for (const auto& r : records) {
        auto b = bin_at.find(r.bin);
        auto g = group_at.find(r.group);
        auto y = find_index(order.labels, r.label);
        if (b == bin_at.end()) throw ValidationError("undeclared bin " + r.bin);
        if (g == group_at.end()) throw ValidationError("undeclared group " + r.group);
        if (!y) throw ValidationError("undeclared label " + std::to_string(r.label));
        mass[static_cast<size_t>(g->second)](b->second, *y) += r.weight;
        total += r.weight;
    }
    if (!(total > 0.0)) throw ValidationError("total weight is zero");
    for (size_t g = 0; g < mass.size(); ++g)
        if (!(mass[g].sum() > 0.0)) throw ValidationError("group " + order.groups[g] + " has zero mass");
    for (auto& m : mass) m /= total;
    return EmpiricalDistribution(order.bins, order.labels, order.groups, std::move(mass));
}

EmpiricalDistribution mixture(const EmpiricalDistribution& a, const EmpiricalDistribution& b, double alpha) {
    if (!a.same_alphabets(b)) throw ValidationError("alphabet mismatch");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ValidationError("mixture weight outside [0, 1]");
    std::vector<Eigen::MatrixXd> mass;
    for (Eigen::Index g = 0; g < a.num_groups(); ++g) mass.push_back(alpha * a.joint(g) + (1.0 - alpha) * b.joint(g));
    return EmpiricalDistribution(a.bins(), a.labels(), a.groups(), std::move(mass));
}

Policy::Policy(std::vector<std::string> bins, std::vector<std::string> groups, std::vector<int> predicted_labels,
               std::vector<Eigen::MatrixXd> rows)
    : bins_(std::move(bins)), groups_(std::move(groups)), predicted_(std::move(predicted_labels)),
      rows_(std::move(rows)) {
    require_unique(predicted_, "predicted label");
    if (rows_.size() != groups_.size()) throw ValidationError("one policy table per group required");
    for (const auto& r : rows_) {
        if (r.rows() != static_cast<Eigen::Index>(bins_.size()) ||
            r.cols() != static_cast<Eigen::Index>(predicted_.size()))
            throw ValidationError("policy table shape does not match alphabets");
        if (!r.allFinite() || (r.array() < 0.0).any()) throw ValidationError("policy probabilities must be >= 0");
        if (((r.rowwise().sum().array() - 1.0).abs() > kMassTolerance).any())
            throw ValidationError("policy row is not a probability vector");
    }
}

Eigen::VectorXd Policy::prob_of(Eigen::Index g, int value) const {
    auto k = find_index(predicted_, value);
    if (!k) return Eigen::VectorXd::Zero(static_cast<Eigen::Index>(bins_.size()));
    return rows(g).col(*k);
}

Policy threshold_policy(const ScoreTable& table, const Eigen::VectorXd& thresholds) {
    const auto nx = static_cast<Eigen::Index>(table.bins.size());
    const auto ng = static_cast<Eigen::Index>(table.groups.size());
    if (table.scores.rows() != nx || table.scores.cols() != ng) throw ValidationError("missing score entry");
    if (thresholds.size() != ng) throw ValidationError("one threshold per group required");
    if (!table.scores.allFinite()) throw ValidationError("missing score entry");

    std::vector<Eigen::MatrixXd> rows;
    for (Eigen::Index g = 0; g < ng; ++g) {
        Eigen::MatrixXd r(nx, 2);
        for (Eigen::Index x = 0; x < nx; ++x) {
            const double accept = table.scores(x, g) > thresholds(g) ? 1.0 : 0.0;
            r(x, 0) = 1.0 - accept;
            r(x, 1) = accept;
        }
        rows.push_back(std::move(r));
    }
    return Policy(table.bins, table.groups, {0, 1}, std::move(rows));
}

void check_alphabets(const Policy& policy, const EmpiricalDistribution& dist) {
    if (policy.bins() != dist.bins() || policy.groups() != dist.groups())
        throw ValidationError("alphabet mismatch between policy and distribution");
    for (int v : policy.predicted_labels())
        if (!dist.label_index(v)) throw ValidationError("alphabet mismatch: predicted label outside label alphabet");
}

Eigen::Matrix2d GroupOutcomeStats::binary_rho(Eigen::Index g) const {
    auto at = [](const std::vector<int>& v, int value) {
        return static_cast<Eigen::Index>(std::find(v.begin(), v.end(), value) - v.begin());
    };
    Eigen::Matrix2d out;
    const auto& r = rho[static_cast<size_t>(g)];
    for (int y = 0; y < 2; ++y)
        for (int yh = 0; yh < 2; ++yh) out(y, yh) = r(at(labels, y), at(predicted_labels, yh));
    return out;
}

Eigen::MatrixXd outcome_table(const Policy& policy, const EmpiricalDistribution& dist, Eigen::Index g) {
    check_alphabets(policy, dist);
    const Eigen::Index nx = dist.num_bins(), ny = dist.num_labels();
    const Eigen::MatrixXd& joint = dist.joint(g);
    const Eigen::MatrixXd& rows = policy.rows(g);
    Eigen::MatrixXd out(nx * ny, rows.cols());
    const double gm = dist.group_mass(g);
    for (Eigen::Index x = 0; x < nx; ++x)
        for (Eigen::Index y = 0; y < ny; ++y) out.row(x * ny + y) = joint(x, y) / gm * rows.row(x);
    return out;
}

GroupOutcomeStats outcome_stats(const Policy& policy, const EmpiricalDistribution& dist) {
    check_alphabets(policy, dist);
    GroupOutcomeStats s;
    const Eigen::Index ng = dist.num_groups();
    const auto nk = static_cast<Eigen::Index>(policy.predicted_labels().size());
    s.labels = dist.labels();
    s.predicted_labels = policy.predicted_labels();
    s.class_rates.resize(ng, nk);
    for (Eigen::Index g = 0; g < ng; ++g) {
        // rho(y, k) = sum_x Pr(x, y | g) * pi(k | x, g)
        Eigen::MatrixXd rho = dist.joint(g).transpose() * policy.rows(g) / dist.group_mass(g);
        s.class_rates.row(g) = rho.colwise().sum();
        s.rho.push_back(std::move(rho));
    }

    const bool predicts_binary = std::find(s.predicted_labels.begin(), s.predicted_labels.end(), 1) !=
                                     s.predicted_labels.end() &&
                                 std::all_of(s.predicted_labels.begin(), s.predicted_labels.end(),
                                             [](int v) { return v == 0 || v == 1; });
    s.binary = dist.is_binary() && predicts_binary;
    if (!s.binary) return s;

    s.beta.resize(ng);
    s.qual.resize(ng);
    for (Eigen::Index g = 0; g < ng; ++g) {
        const Eigen::Matrix2d r = s.binary_rho(g);
        const double q = r.row(1).sum();
        s.qual(g) = q;
        s.beta(g) = r.col(1).sum();
        s.beta_plus.push_back(q > 0.0 ? MaybeRate(r(1, 1) / q) : std::nullopt);
        s.beta_minus.push_back(q < 1.0 && r.row(0).sum() > 0.0 ? MaybeRate(r(0, 1) / r.row(0).sum()) : std::nullopt);
    }
    return s;
}

} // namespace fairshift
