#pragma once

#include "coreselect/feature_store.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace coreselect {

enum class SamplerKind { greedy_mmd, svd, pca, random };

SamplerKind parse_sampler(std::string_view s);
std::string_view to_string(SamplerKind k);

/// Number of singular directions kept by the SVD and PCA samplers: either a
/// fixed count, or the smallest count whose squared singular values reach the
/// given fraction of the total.
struct RankPolicy {
    enum class Kind { fixed, energy } kind = Kind::energy;
    int rank = 1;
    double energy = 0.95;

    static RankPolicy fixed(int r) { return {Kind::fixed, r, 0.95}; }
    static RankPolicy energy_fraction(double theta) { return {Kind::energy, 1, theta}; }

    void validate() const;
};

struct SamplerSpec {
    SamplerKind kind = SamplerKind::svd;
    std::optional<double> sigma;  ///< greedy_mmd only; defaults to the shared bandwidth
    RankPolicy rank_policy;
    std::uint64_t seed = 0;
    std::optional<std::string> feature_space;  ///< unset: the clustering space
};

struct GreedyMmdTrace {
    std::vector<std::size_t> picks;
    /// Full MMD^2 (constant term included) after each pick.
    std::vector<double> mmd2;
};

/// Greedy MMD selection with incremental cross-term updates: O(n^2 d) to
/// build kernel row sums, then O(n d) per pick.
GreedyMmdTrace greedy_mmd_trace(const RowMatrix& X, std::size_t quota, double sigma);

std::vector<std::size_t> greedy_mmd_sample(const RowMatrix& X, std::size_t quota, double sigma);

/// Resolve the rank for a set of descending singular values (at least 1,
/// capped by the numerical rank; 0 when every singular value is zero).
int resolve_rank(const Eigen::VectorXd& singular_values, const RankPolicy& policy);

/// Squared row norms of the leading left singular vectors of X (uncentered).
std::vector<double> leverage_scores(const RowMatrix& X, const RankPolicy& policy, int* rank_used = nullptr);

/// Squared norms of the centered rows projected onto the leading principal directions.
std::vector<double> pca_energy_scores(const RowMatrix& X, const RankPolicy& policy, int* rank_used = nullptr);

std::vector<std::size_t> svd_leverage_sample(const RowMatrix& X, std::size_t quota, const RankPolicy& policy);
std::vector<std::size_t> pca_energy_sample(const RowMatrix& X, std::size_t quota, const RankPolicy& policy);
std::vector<std::size_t> random_sample(std::size_t n, std::size_t quota, std::uint64_t seed);

/// `quota` indices with the largest scores, in descending score order. Scores
/// equal to within 1e-10 of the largest score count as ties and go to the
/// lower index.
std::vector<std::size_t> top_scores(const std::vector<double>& scores, std::size_t quota);

/// Dispatch on spec.kind. `sigma` is used by greedy_mmd when spec.sigma is unset.
std::vector<std::size_t> sample_cluster(const RowMatrix& X, std::size_t quota, const SamplerSpec& spec,
                                        double sigma, std::uint64_t seed);

} // namespace coreselect
