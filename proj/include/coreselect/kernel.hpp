#pragma once

// Gaussian kernel helpers shared by the density metric, the greedy MMD
// sampler and run reporting.

#include "coreselect/feature_store.hpp"

#include <cmath>
#include <cstdint>
#include <span>

namespace coreselect {

/// Largest sample used by the median heuristic.
inline constexpr std::size_t kBandwidthSubsample = 2048;

inline double gaussian_kernel(double sq_dist, double sigma) {
    return std::exp(-sq_dist / (2.0 * sigma * sigma));
}

/// Median pairwise Euclidean distance over at most 2048 seeded rows. Falls
/// back to the smallest nonzero distance when the median is zero, and to 1
/// when every distance is zero.
double median_bandwidth(const RowMatrix& X, std::uint64_t seed);

/// Mean kernel value over all cross pairs of the given row sets of X.
double kernel_mean(const RowMatrix& X, std::span<const std::size_t> a,
                   std::span<const std::size_t> b, double sigma);

/// MMD^2 between all rows of X and the rows listed in `subset`.
double mmd_squared(const RowMatrix& X, std::span<const std::size_t> subset, double sigma);

} // namespace coreselect
