#pragma once

// Synthetic data and brute-force reference implementations. Everything here
// is written as a separate code path from the production modules so that
// agreement between the two is meaningful.

#include "coreselect/feature_store.hpp"
#include "coreselect/samplers.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace coreselect::synth {

struct MixtureComponent {
    std::vector<double> center;
    double spread = 1.0;  ///< isotropic standard deviation; 0 gives a point mass
    std::size_t count = 1;
    double irs_mean = 1.0;
};

struct MixtureSpec {
    std::vector<MixtureComponent> components;
    double outlier_fraction = 0.0;  ///< outliers added, relative to the component total
    double irs_noise = 0.1;         ///< log-scale spread of per-sample IRS
    std::uint64_t seed = 0;
    std::string name = "synthetic";

    void validate() const;
};

struct Mixture {
    FeatureSpace space;
    std::vector<int> labels;  ///< component index, -1 for outliers
    std::vector<SampleMeta> meta;
};

/// Seeded Gaussian mixture plus uniform outliers in the bounding box of the
/// component points; rows are shuffled. Per-sample IRS is lognormal with the
/// component's mean (1 for outliers).
Mixture generate_mixture(const MixtureSpec& spec);

/// `count` components with centers drawn uniformly in [-scale, scale]^dim.
MixtureSpec random_mixture_spec(std::size_t components, std::size_t dim, std::size_t points_each,
                                double spread, double scale, std::uint64_t seed);

/// Split the columns of a space into consecutive named blocks.
std::vector<FeatureSpace> split_columns(const FeatureSpace& space, const std::vector<std::size_t>& widths,
                                        const std::vector<std::string>& names);

/// Double-loop density over all ordered pairs m != n.
double density_oracle(const RowMatrix& members, double sigma);

/// MMD^2 between all rows of X and `subset`, evaluated with explicit loops.
double mmd2_oracle(const RowMatrix& X, const std::vector<std::size_t>& subset, double sigma);

/// Greedy MMD where every candidate at every step is scored by a full
/// recomputation of MMD^2. Ties go to the lower index.
GreedyMmdTrace greedy_mmd_naive(const RowMatrix& X, std::size_t quota, double sigma);

struct SubsetValue {
    std::vector<std::size_t> subset;
    double mmd2 = 0.0;
};

inline constexpr std::uint64_t kMaxEnumeration = 1'000'000;

/// Exact MMD^2 minimizer over all subsets of size `quota` (C(n, quota) <= 1e6).
SubsetValue brute_force_mmd_best(const RowMatrix& X, std::size_t quota, double sigma);

/// Symmetric eigendecomposition by cyclic Jacobi rotations. Returns
/// eigenvalues in descending order and matching eigenvector columns.
void jacobi_eigen(const Eigen::MatrixXd& A, Eigen::VectorXd& values, Eigen::MatrixXd& vectors);

/// Leverage scores from the top-r eigenvectors of the Gram matrix X X^T.
std::vector<double> leverage_oracle(const RowMatrix& X, int r);

struct Coverage {
    double mmd2 = 0.0;
    double mean_nn_distance = 0.0;
};

/// MMD^2(full, selected) and the mean distance from every point to its
/// nearest selected point.
Coverage coverage_metrics(const std::vector<std::size_t>& selected, const RowMatrix& X, double sigma);

} // namespace coreselect::synth
