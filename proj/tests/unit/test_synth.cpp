#include "coreselect/metrics.hpp"
#include "coreselect/synth.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace coreselect;

TEST_CASE("mixture: counts, labels, determinism") {
    synth::MixtureSpec spec;
    spec.seed = 4;
    spec.components = {{{0.0, 0.0}, 1.0, 50, 0.8}, {{5.0, 5.0}, 1.0, 50, 1.2}};
    const auto a = synth::generate_mixture(spec);
    CHECK(a.space.size() == 100);
    CHECK(std::count(a.labels.begin(), a.labels.end(), 0) == 50);
    CHECK(std::count(a.labels.begin(), a.labels.end(), 1) == 50);
    CHECK(a.meta.size() == 100);
    const auto b = synth::generate_mixture(spec);
    CHECK(a.space.vectors == b.space.vectors);
    CHECK(a.space.ids == b.space.ids);
}

TEST_CASE("mixture: zero spread collapses to the center") {
    synth::MixtureSpec spec;
    spec.components = {{{1.0, -2.0, 3.0}, 0.0, 20, 1.0}};
    const auto m = synth::generate_mixture(spec);
    const RowMatrix X = m.space.vectors.cast<double>();
    CHECK(cluster_density(X, 0.5) == 1.0);
}

TEST_CASE("mixture: outliers labelled -1") {
    synth::MixtureSpec spec;
    spec.outlier_fraction = 0.1;
    spec.components = {{{0.0}, 1.0, 100, 1.0}};
    const auto m = synth::generate_mixture(spec);
    CHECK(std::count(m.labels.begin(), m.labels.end(), -1) == 10);
}

TEST_CASE("brute force: trivial quotas") {
    const auto X = testutil::random_matrix(6, 2, 1);
    const auto all = synth::brute_force_mmd_best(X, 6, 1.0);
    CHECK(std::abs(all.mmd2) < 1e-12);
    CHECK(all.subset.size() == 6);
}

TEST_CASE("jacobi: reconstructs a symmetric matrix") {
    const auto A0 = testutil::random_matrix(6, 6, 3);
    const Eigen::MatrixXd A = A0 + A0.transpose();
    Eigen::VectorXd vals;
    Eigen::MatrixXd vecs;
    synth::jacobi_eigen(A, vals, vecs);
    CHECK((vecs * vals.asDiagonal() * vecs.transpose() - A).cwiseAbs().maxCoeff() < 1e-10);
    for (Eigen::Index i = 1; i < vals.size(); ++i) CHECK(vals[i] <= vals[i - 1]);
}

TEST_CASE("leverage oracle: orthonormal rows give all ones") {
    const RowMatrix I = RowMatrix::Identity(4, 4);
    for (double v : synth::leverage_oracle(I, 4)) CHECK(v == doctest::Approx(1.0));
}

TEST_CASE("coverage: full selection and single anchor") {
    const auto X = testutil::random_matrix(10, 3, 5);
    std::vector<std::size_t> all(10);
    std::iota(all.begin(), all.end(), 0);
    const auto full = synth::coverage_metrics(all, X, 1.0);
    CHECK(std::abs(full.mmd2) < 1e-12);
    CHECK(full.mean_nn_distance == 0.0);

    const auto one = synth::coverage_metrics({3}, X, 1.0);
    double mean = 0.0;
    for (Eigen::Index i = 0; i < X.rows(); ++i) mean += (X.row(i) - X.row(3)).norm() / 10.0;
    CHECK(one.mean_nn_distance == doctest::Approx(mean).epsilon(1e-12));
}

TEST_CASE("split columns") {
    const auto X = testutil::random_matrix(4, 5, 2);
    FeatureSpace s;
    s.name = "all";
    s.vectors = X.cast<float>();
    s.ids = {"a", "b", "c", "d"};
    const auto parts = synth::split_columns(s, {2, 3}, {"x", "y"});
    REQUIRE(parts.size() == 2);
    CHECK(parts[0].dim() == 2);
    CHECK(parts[1].dim() == 3);
    CHECK(parts[1].vectors.col(0) == s.vectors.col(2));
}
