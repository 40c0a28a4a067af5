#include "coreselect/kernel.hpp"

#include "coreselect/error.hpp"
#include "coreselect/random.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

namespace coreselect {

double median_bandwidth(const RowMatrix& X, std::uint64_t seed) {
    const auto n = static_cast<std::size_t>(X.rows());
    if (n < 2) throw InvalidArgument("median_bandwidth needs at least 2 points, got " + std::to_string(n));

    std::vector<std::size_t> rows;
    if (n <= kBandwidthSubsample) {
        rows.resize(n);
        std::iota(rows.begin(), rows.end(), std::size_t{0});
    } else {
        Rng rng(seed);
        rows = rng.sample_without_replacement(n, kBandwidthSubsample);
        std::sort(rows.begin(), rows.end());
    }

    std::vector<double> dists;
    dists.reserve(rows.size() * (rows.size() - 1) / 2);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = i + 1; j < rows.size(); ++j)
            dists.push_back((X.row(static_cast<Eigen::Index>(rows[i])) -
                             X.row(static_cast<Eigen::Index>(rows[j]))).norm());

    const std::size_t m = dists.size();
    const auto mid = dists.begin() + static_cast<std::ptrdiff_t>(m / 2);
    std::nth_element(dists.begin(), mid, dists.end());
    double median = *mid;
    if (m % 2 == 0) {
        const double lower = *std::max_element(dists.begin(), mid);
        median = 0.5 * (lower + median);
    }
    if (median > 0.0) return median;

    double smallest = 0.0;
    for (double d : dists)
        if (d > 0.0 && (smallest == 0.0 || d < smallest)) smallest = d;
    return smallest > 0.0 ? smallest : 1.0;
}

double kernel_mean(const RowMatrix& X, std::span<const std::size_t> a,
                   std::span<const std::size_t> b, double sigma) {
    if (a.empty() || b.empty()) return 0.0;
    double sum = 0.0;
    for (std::size_t i : a) {
        const auto xi = X.row(static_cast<Eigen::Index>(i));
        double row = 0.0;
        for (std::size_t j : b)
            row += gaussian_kernel((xi - X.row(static_cast<Eigen::Index>(j))).squaredNorm(), sigma);
        sum += row;
    }
    return sum / (static_cast<double>(a.size()) * static_cast<double>(b.size()));
}

double mmd_squared(const RowMatrix& X, std::span<const std::size_t> subset, double sigma) {
    std::vector<std::size_t> all(static_cast<std::size_t>(X.rows()));
    std::iota(all.begin(), all.end(), std::size_t{0});
    return kernel_mean(X, all, all, sigma) + kernel_mean(X, subset, subset, sigma) -
           2.0 * kernel_mean(X, all, subset, sigma);
}

} // namespace coreselect
