#pragma once

// Three-stage selection: cluster the combined features, turn per-cluster
// metrics into integer quotas, then sample within each cluster.

#include "coreselect/clustering.hpp"
#include "coreselect/feature_store.hpp"
#include "coreselect/metrics.hpp"
#include "coreselect/quota.hpp"
#include "coreselect/samplers.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace coreselect {

inline constexpr const char* kToolVersion = "0.1.0";

/// Space names making up each of the nine clustering feature variants.
std::vector<std::string> feature_variant(int number);

struct PipelineConfig {
    /// Every named feature file the run may touch.
    std::map<std::string, std::filesystem::path> spaces;
    /// Concatenated, in order, to form the clustering space.
    std::vector<std::string> cluster_features;
    Normalization normalization = Normalization::per_block_l2;
    std::optional<std::filesystem::path> meta_path;
    int k = 64;
    std::uint64_t seed = 0;
    double budget_ratio = 0.1;
    QuotaStrategy strategy = catalog_strategy(8);
    double tau = 0.5;
    TauFilter tau_filter = TauFilter::at_most;
    std::optional<double> sigma;
    SamplerSpec sampler;
    std::optional<std::string> text_space;
    int max_iter = 300;
    double tol = 1e-4;
    unsigned workers = 1;
    std::filesystem::path output_dir = "run";

    /// Parse a config document. Relative paths resolve against `base_dir`.
    /// Missing fields take the defaults above: feature variant 6 (lmm + vte),
    /// quota strategy 8, SVD sampling with 95% energy.
    static PipelineConfig from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir);
    static PipelineConfig load(const std::filesystem::path& path);

    /// Fully resolved form with absolute paths; from_json(to_json()) round-trips.
    nlohmann::json to_json() const;

    void validate() const;
};

struct ClusterRecord {
    std::size_t size = 0;
    std::map<std::string, double> scores;
    double score = 0.0;
    double weight = 0.0;
    std::size_t quota = 0;
    std::size_t selected = 0;
};

struct SelectionManifest {
    std::vector<std::string> selected_ids;
    std::size_t budget = 0;
    std::size_t n_total = 0;
    double budget_ratio = 0.0;
    std::string config_digest;
    std::uint64_t seed = 0;
    std::string strategy;
    std::string sampler;
    double sigma = 0.0;
    std::vector<ClusterRecord> clusters;
    std::string tool_version = kToolVersion;

    nlohmann::json to_json() const;
    static SelectionManifest from_json(const nlohmann::json& j);
};

/// Everything computed for one configuration; budget-independent parts are
/// shared across ratios in a sweep.
struct RunState {
    PipelineConfig config;
    CombinedFeatures features;
    std::vector<SampleMeta> meta;  ///< aligned to features.ids; empty without meta
    ClusterModel model;
    bool model_from_cache = false;
    double sigma = 0.0;
    std::vector<ClusterScores> scores;
    std::vector<double> strategy_scores;
    std::string cluster_digest;
    nlohmann::json input_hashes;

    QuotaPlan plan;
    /// Selected rows of each cluster, in sampler order.
    std::vector<std::vector<std::size_t>> selected_per_cluster;
    /// Selected rows in manifest order (ascending cluster, then sampler order).
    std::vector<std::size_t> selected;
    SelectionManifest manifest;
};

/// floor(ratio * N); ratio must lie in (0, 1].
std::size_t budget_for(double ratio, std::size_t n);

/// Load inputs, cluster (reusing `clusters.json` in the output directory when
/// its digest matches) and compute every available metric.
RunState prepare_run(const PipelineConfig& config);

/// Allocate quotas and sample for one budget ratio; fills plan/selection/manifest.
void select_budget(RunState& state, double budget_ratio);

/// Write resolved_config.json, clusters.json, quotas.csv, manifest.json.
void write_run(const RunState& state, const std::filesystem::path& dir);

/// prepare + select + write to config.output_dir.
SelectionManifest run_selection(const PipelineConfig& config);

/// One manifest per ratio from a single clustering; ratio i is written to
/// <output_dir>/ratio_<ratio>.
std::vector<SelectionManifest> sweep_ratios(const PipelineConfig& config, const std::vector<double>& ratios);

/// Rebuild the state of a completed run directory.
RunState load_run(const std::filesystem::path& dir);

struct ReportSummary {
    std::size_t budget = 0;
    std::size_t cluster_count = 0;
    double mmd2_selected_vs_full = 0.0;
};

/// Write metrics.csv, coordinates.csv (rank-2 PCA) and summary.json.
ReportSummary emit_report(const RunState& state, const std::filesystem::path& dir);

/// First two principal coordinates of the rows of X (second is 0 when dim = 1).
RowMatrix pca_coordinates(const RowMatrix& X);

std::string metrics_csv(const RunState& state);
std::string quotas_csv(const RunState& state);

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view data);

} // namespace coreselect
