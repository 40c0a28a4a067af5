#include "coreselect/metrics.hpp"

#include "coreselect/error.hpp"
#include "coreselect/kernel.hpp"
#include "coreselect/parallel.hpp"

#include <cmath>
#include <unordered_map>

namespace coreselect {

Metric parse_metric(std::string_view s) {
    if (s == "density") return Metric::density;
    if (s == "irs") return Metric::irs;
    if (s == "transferability") return Metric::transferability;
    if (s == "text_transferability") return Metric::text_transferability;
    throw ConfigError("unknown metric '" + std::string(s) + "'");
}

std::string_view to_string(Metric m) {
    switch (m) {
    case Metric::density: return "density";
    case Metric::irs: return "irs";
    case Metric::transferability: return "transferability";
    case Metric::text_transferability: return "text_transferability";
    }
    return "?";
}

TauFilter parse_tau_filter(std::string_view s) {
    if (s == "at_most" || s == "le") return TauFilter::at_most;
    if (s == "above" || s == "gt") return TauFilter::above;
    throw ConfigError("unknown tau filter '" + std::string(s) + "'");
}

std::string_view to_string(TauFilter f) { return f == TauFilter::at_most ? "at_most" : "above"; }

double cluster_density(const RowMatrix& members, double sigma) {
    const auto n = members.rows();
    if (n < 1) throw InvalidArgument("cluster_density: empty cluster");
    if (!(sigma > 0.0)) throw InvalidArgument("cluster_density: sigma must be positive");
    if (n == 1) return 1.0;
    double sum = 0.0;
    for (Eigen::Index m = 0; m < n; ++m) {
        double row = 0.0;
        for (Eigen::Index q = m + 1; q < n; ++q)
            row += gaussian_kernel((members.row(m) - members.row(q)).squaredNorm(), sigma);
        sum += row;
    }
    // Each unordered pair stands for both orderings.
    return 2.0 * sum / (static_cast<double>(n) * static_cast<double>(n - 1));
}

ClusterScores cluster_densities(const RowMatrix& X, const ClusterModel& model, double sigma,
                                unsigned workers) {
    const auto members = model.members();
    ClusterScores out;
    out.metric = Metric::density;
    out.sigma = sigma;
    out.values.assign(members.size(), 0.0);
    parallel_for(members.size(), workers, [&](std::size_t c) {
        RowMatrix rows(static_cast<Eigen::Index>(members[c].size()), X.cols());
        for (std::size_t i = 0; i < members[c].size(); ++i)
            rows.row(static_cast<Eigen::Index>(i)) = X.row(static_cast<Eigen::Index>(members[c][i]));
        out.values[c] = cluster_density(rows, sigma);
    });
    return out;
}

ClusterScores cluster_irs(const ClusterModel& model, const std::vector<std::string>& ids,
                          const std::vector<SampleMeta>& meta) {
    if (ids.size() != model.assignments.size())
        throw InvalidArgument("cluster_irs: " + std::to_string(ids.size()) + " ids for " +
                              std::to_string(model.assignments.size()) + " assignments");
    std::unordered_map<std::string_view, const SampleMeta*> by_id;
    by_id.reserve(meta.size());
    for (const auto& m : meta) by_id.emplace(m.id, &m);

    const auto k = static_cast<std::size_t>(model.k);
    std::vector<double> sums(k, 0.0);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        auto it = by_id.find(ids[i]);
        if (it == by_id.end()) throw InvalidArgument("cluster_irs: no metadata for id '" + ids[i] + "'");
        const auto c = static_cast<std::size_t>(model.assignments[i]);
        sums[c] += sample_irs(*it->second);
        ++counts[c];
    }
    ClusterScores out;
    out.metric = Metric::irs;
    out.values.resize(k);
    for (std::size_t c = 0; c < k; ++c)
        out.values[c] = counts[c] ? sums[c] / static_cast<double>(counts[c]) : 0.0;
    return out;
}

ClusterScores cluster_transferability(const RowMatrix& centroids, double tau, TauFilter filter) {
    const auto k = centroids.rows();
    if (k < 1) throw InvalidArgument("transferability: need at least one centroid");
    if (!(tau >= -1.0 && tau <= 1.0)) throw InvalidArgument("transferability: tau must lie in [-1, 1]");

    Eigen::VectorXd norms(k);
    for (Eigen::Index i = 0; i < k; ++i) {
        norms(i) = centroids.row(i).norm();
        if (!(norms(i) > 0.0))
            throw InvalidArgument("transferability: centroid of cluster " + std::to_string(i) +
                                  " has zero norm");
    }

    ClusterScores out;
    out.metric = Metric::transferability;
    out.tau = tau;
    out.values.resize(static_cast<std::size_t>(k));
    for (Eigen::Index i = 0; i < k; ++i) {
        double num = 0.0;
        double den = 0.0;
        for (Eigen::Index j = 0; j < k; ++j) {
            const double s = i == j ? 1.0 : centroids.row(i).dot(centroids.row(j)) / (norms(i) * norms(j));
            const bool keep = filter == TauFilter::at_most ? s <= tau : s > tau;
            if (keep) {
                num += s;
                den += 1.0;
            }
        }
        out.values[static_cast<std::size_t>(i)] = den > 0.0 ? num / den : 0.0;
    }
    return out;
}

RowMatrix cluster_means(const RowMatrix& X, const ClusterModel& model) {
    if (static_cast<std::size_t>(X.rows()) != model.assignments.size())
        throw InvalidArgument("cluster_means: row count does not match the assignments");
    RowMatrix means = RowMatrix::Zero(model.k, X.cols());
    std::vector<std::size_t> counts(static_cast<std::size_t>(model.k), 0);
    for (std::size_t i = 0; i < model.assignments.size(); ++i) {
        means.row(model.assignments[i]) += X.row(static_cast<Eigen::Index>(i));
        ++counts[static_cast<std::size_t>(model.assignments[i])];
    }
    for (int c = 0; c < model.k; ++c)
        if (counts[static_cast<std::size_t>(c)]) means.row(c) /= static_cast<double>(counts[static_cast<std::size_t>(c)]);
    return means;
}

} // namespace coreselect
