#pragma once

// Feature matrices and per-sample metadata, plus their on-disk formats.
//
// Feature file layout (all little-endian):
//   "IQAFEAT1" | u32 N | u32 dim | N*dim float32, row-major
// Ids live in a sidecar text file next to it (extension replaced by ".ids"),
// one UTF-8 id per line, N lines.

#include <Eigen/Core>

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace coreselect {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMatrixF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr std::string_view kFeatureMagic = "IQAFEAT1";
inline constexpr std::size_t kFeatureHeaderBytes = 16;

/// A named N x dim embedding matrix with one id per row.
struct FeatureSpace {
    std::string name;
    RowMatrixF vectors;
    std::vector<std::string> ids;

    std::size_t size() const { return static_cast<std::size_t>(vectors.rows()); }
    std::size_t dim() const { return static_cast<std::size_t>(vectors.cols()); }

    /// Throws InvalidArgument unless N, dim >= 1, rows are finite, ids match
    /// the row count and are unique and non-empty.
    void validate() const;
};

/// Per-sample losses for the instruction relevance score.
struct SampleMeta {
    std::string id;
    double loss_with_q = 0.0;
    double loss_without_q = 1.0;
};

struct BlockLayout {
    std::string name;
    std::size_t offset = 0;
    std::size_t width = 0;

    bool operator==(const BlockLayout&) const = default;
};

enum class Normalization { none, per_block_l2 };

Normalization parse_normalization(std::string_view s);
std::string_view to_string(Normalization n);

/// Row-wise concatenation of one or more feature spaces, held in double precision.
struct CombinedFeatures {
    RowMatrix vectors;
    std::vector<std::string> ids;
    std::vector<BlockLayout> block_layout;

    std::size_t size() const { return static_cast<std::size_t>(vectors.rows()); }
    std::size_t dim() const { return static_cast<std::size_t>(vectors.cols()); }

    /// Round to float storage so the result can be written or combined again.
    FeatureSpace to_feature_space(std::string name) const;
};

/// Path of the id sidecar for a feature file.
std::filesystem::path ids_path_for(const std::filesystem::path& feature_path);

FeatureSpace load_feature_space(const std::filesystem::path& path);
void write_feature_space(const FeatureSpace& space, const std::filesystem::path& path);

/// Serialize header + payload exactly as written to disk.
std::string encode_feature_payload(const FeatureSpace& space);

CombinedFeatures combine_features(const std::vector<FeatureSpace>& spaces,
                                  Normalization normalization);

std::vector<SampleMeta> load_sample_meta(const std::filesystem::path& path);
std::vector<SampleMeta> parse_sample_meta(std::string_view csv_text);
void write_sample_meta(const std::vector<SampleMeta>& meta, const std::filesystem::path& path);

} // namespace coreselect
