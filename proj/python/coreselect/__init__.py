"""Cluster-based coreset selection from precomputed feature files."""

from ._core import (
    ClusterModel,
    ConfigError,
    FeatureSpace,
    FormatError,
    InvalidArgument,
    Manifest,
    StageError,
    allocate_quotas,
    cluster_density,
    cluster_transferability,
    greedy_mmd_sample,
    greedy_mmd_trace,
    kmeans_fit,
    leverage_scores,
    load_feature_space,
    load_sample_meta,
    median_bandwidth,
    mmd_squared,
    pca_energy_sample,
    random_sample,
    report,
    run_selection,
    score_clusters,
    svd_leverage_sample,
    sweep,
    write_feature_space,
    write_sample_meta,
    write_synthetic_dataset,
)

__version__ = "0.1.0"
