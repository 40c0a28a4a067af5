#pragma once

#include "coreselect/clustering.hpp"
#include "coreselect/feature_store.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace coreselect {

enum class Metric { density, irs, transferability, text_transferability };

Metric parse_metric(std::string_view s);
std::string_view to_string(Metric m);

/// Which centroid pairs enter the transferability average.
enum class TauFilter {
    at_most,  ///< keep S_ij <= tau
    above,    ///< keep S_ij > tau (flipped comparison, for experiments)
};

TauFilter parse_tau_filter(std::string_view s);
std::string_view to_string(TauFilter f);

struct ClusterScores {
    Metric metric = Metric::density;
    std::vector<double> values;
    std::optional<double> sigma;
    std::optional<double> tau;
    std::string source;
};

/// Mean Gaussian kernel value over all ordered pairs of distinct members.
/// Lies in (0, 1]; a singleton cluster scores 1.
double cluster_density(const RowMatrix& members, double sigma);

/// Density of every cluster of `model` over the rows of X. Clusters are
/// evaluated independently; the result does not depend on `workers`.
ClusterScores cluster_densities(const RowMatrix& X, const ClusterModel& model, double sigma,
                                unsigned workers = 1);

inline double sample_irs(const SampleMeta& meta) { return meta.loss_with_q / meta.loss_without_q; }

/// Per-cluster mean IRS. `ids` are the sample ids in the model's row order;
/// every one must appear in `meta`.
ClusterScores cluster_irs(const ClusterModel& model, const std::vector<std::string>& ids,
                          const std::vector<SampleMeta>& meta);

/// T_i = mean of S_ij over the centroids j passing the tau filter (j = i
/// included when it passes); 0 when no centroid passes.
ClusterScores cluster_transferability(const RowMatrix& centroids, double tau,
                                      TauFilter filter = TauFilter::at_most);

/// Per-cluster means of X under an existing assignment (used to recompute
/// centroids in a different feature space, e.g. text-only embeddings).
RowMatrix cluster_means(const RowMatrix& X, const ClusterModel& model);

} // namespace coreselect
