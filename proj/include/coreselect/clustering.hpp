#pragma once

#include "coreselect/feature_store.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <vector>

namespace coreselect {

struct KMeansOptions {
    int k = 64;
    std::uint64_t seed = 0;
    int max_iter = 300;
    /// Stop once the largest centroid displacement drops below this.
    double tol = 1e-4;
    unsigned workers = 1;
};

/// Result of Lloyd's k-means. `inertia_trace` holds the inertia after every
/// assignment step (last entry equals `inertia`).
struct ClusterModel {
    int k = 0;
    RowMatrix centroids;
    std::vector<int> assignments;
    std::vector<std::size_t> sizes;
    double inertia = 0.0;
    int iterations = 0;
    std::vector<double> inertia_trace;

    /// Member row indices of every cluster, ascending.
    std::vector<std::vector<std::size_t>> members() const;

    void validate(std::size_t n) const;
};

/// k-means++ seeding followed by Lloyd iterations. Nearest-centroid ties go
/// to the lower cluster index; empty clusters are re-seeded at the point
/// farthest from its centroid until none remain. Results are bitwise
/// identical for any worker count.
ClusterModel kmeans_fit(const RowMatrix& X, const KMeansOptions& options);

/// Index of the nearest row of `centroids` to `point` (ties to lower index).
int nearest_centroid(const RowMatrix& centroids, const Eigen::Ref<const Eigen::RowVectorXd>& point,
                     double* sq_dist = nullptr);

nlohmann::json cluster_model_to_json(const ClusterModel& model);
ClusterModel cluster_model_from_json(const nlohmann::json& j);

} // namespace coreselect
