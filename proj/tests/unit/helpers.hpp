#pragma once

#include "coreselect/feature_store.hpp"
#include "coreselect/random.hpp"

#include <filesystem>
#include <string>

namespace testutil {

inline coreselect::RowMatrix random_matrix(std::size_t n, std::size_t d, std::uint64_t seed, double scale = 1.0) {
    coreselect::Rng rng(seed);
    coreselect::RowMatrix X(n, d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) X(i, j) = scale * rng.normal();
    return X;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("coreselect_unit_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace testutil
