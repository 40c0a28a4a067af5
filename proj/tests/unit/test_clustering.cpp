#include "coreselect/clustering.hpp"
#include "coreselect/synth.hpp"
#include "helpers.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <map>
#include <numeric>

using namespace coreselect;

namespace {

bool same_partition(const std::vector<int>& a, const std::vector<int>& b) {
    std::map<int, int> ab, ba;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (ab.emplace(a[i], b[i]).first->second != b[i]) return false;
        if (ba.emplace(b[i], a[i]).first->second != a[i]) return false;
    }
    return true;
}

} // namespace

TEST_CASE("k-means: k = N gives singletons with zero inertia") {
    const auto X = testutil::random_matrix(9, 3, 5);
    const auto m = kmeans_fit(X, {.k = 9, .seed = 1});
    CHECK(m.inertia == 0.0);
    for (auto s : m.sizes) CHECK(s == 1);
}

TEST_CASE("k-means: two separated blobs recovered exactly") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        synth::MixtureSpec spec;
        spec.seed = seed;
        spec.components = {{{0.0, 0.0}, 0.5, 60, 1.0}, {{20.0, 0.0}, 0.5, 40, 1.0}};
        const auto mix = synth::generate_mixture(spec);
        const RowMatrix X = mix.space.vectors.cast<double>();
        const auto m = kmeans_fit(X, {.k = 2, .seed = seed});
        CHECK(same_partition(m.assignments, mix.labels));
    }
}

TEST_CASE("k-means: every point sits at its nearest centroid and inertia never rises") {
    const auto X = testutil::random_matrix(300, 4, 9);
    const auto m = kmeans_fit(X, {.k = 7, .seed = 3});
    m.validate(300);
    for (std::size_t i = 1; i < m.inertia_trace.size(); ++i) CHECK(m.inertia_trace[i] <= m.inertia_trace[i - 1]);
    CHECK(m.inertia_trace.back() == m.inertia);
    if (m.iterations < 300) {
        for (Eigen::Index i = 0; i < X.rows(); ++i)
            CHECK(nearest_centroid(m.centroids, X.row(i)) == m.assignments[static_cast<std::size_t>(i)]);
    }
}

TEST_CASE("k-means: deterministic across runs and worker counts") {
    const auto X = testutil::random_matrix(500, 6, 12);
    const auto a = kmeans_fit(X, {.k = 10, .seed = 77, .workers = 1});
    const auto b = kmeans_fit(X, {.k = 10, .seed = 77, .workers = 1});
    const auto c = kmeans_fit(X, {.k = 10, .seed = 77, .workers = 4});
    CHECK(a.assignments == b.assignments);
    CHECK(a.centroids == b.centroids);
    CHECK(a.assignments == c.assignments);
    CHECK(a.centroids == c.centroids);
}

TEST_CASE("k-means: duplicate points still yield k non-empty clusters") {
    RowMatrix X = RowMatrix::Zero(6, 2);
    X.row(5) << 1.0, 1.0;
    const auto m = kmeans_fit(X, {.k = 3, .seed = 0});
    m.validate(6);
}

TEST_CASE("k-means: invalid arguments") {
    const auto X = testutil::random_matrix(4, 2, 1);
    CHECK_THROWS(kmeans_fit(X, {.k = 5}));
    CHECK_THROWS(kmeans_fit(X, {.k = 0}));
}

TEST_CASE("nearest centroid ties go to the lower index") {
    RowMatrix C(2, 1);
    C << -1.0, 1.0;
    Eigen::RowVectorXd p(1);
    p << 0.0;
    CHECK(nearest_centroid(C, p) == 0);
}

TEST_CASE("cluster model json round trip") {
    const auto X = testutil::random_matrix(50, 3, 2);
    const auto m = kmeans_fit(X, {.k = 4, .seed = 8});
    const auto back = cluster_model_from_json(cluster_model_to_json(m));
    CHECK(back.assignments == m.assignments);
    CHECK(back.centroids == m.centroids);
    CHECK(back.sizes == m.sizes);
}
