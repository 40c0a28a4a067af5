#pragma once

// Oracle suite: each check exercises one production module against an
// independent reference from synth.hpp at a fixed tolerance.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace coreselect::bench {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
    double seconds = 0.0;
};

struct BenchOptions {
    /// Scratch directory for the end-to-end checks.
    std::filesystem::path work_dir = "bench_work";
    std::uint64_t seed = 20240601;
};

CheckResult check_density(const BenchOptions& opts);
CheckResult check_irs(const BenchOptions& opts);
CheckResult check_transferability(const BenchOptions& opts);
CheckResult check_quota(const BenchOptions& opts);
CheckResult check_greedy_mmd(const BenchOptions& opts);
CheckResult check_svd_leverage(const BenchOptions& opts);
CheckResult check_pca(const BenchOptions& opts);
CheckResult check_kmeans(const BenchOptions& opts);
CheckResult check_end_to_end(const BenchOptions& opts);
CheckResult check_stage_isolation(const BenchOptions& opts);

std::vector<CheckResult> run_all(const BenchOptions& opts);

/// One "PASS|FAIL  name  (seconds)  detail" line per check.
std::string format_table(const std::vector<CheckResult>& results);

struct SyntheticDataset {
    std::filesystem::path dir;
    std::filesystem::path config;
    std::size_t n = 0;
};

/// Write a structured 5-component mixture as three feature spaces (lmm, vte,
/// e5), a metadata CSV and a default config.json into `dir`. Component sizes
/// are 32%, 24%, 20%, 14% and 10% of `n`.
SyntheticDataset write_synthetic_dataset(const std::filesystem::path& dir, std::size_t n, std::uint64_t seed);

} // namespace coreselect::bench
