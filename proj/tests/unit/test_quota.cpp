#include "coreselect/error.hpp"
#include "coreselect/quota.hpp"
#include "coreselect/random.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace coreselect;

namespace {

ClusterScores raw(Metric m, std::vector<double> v) {
    ClusterScores s;
    s.metric = m;
    s.values = std::move(v);
    return s;
}

std::size_t total(const std::vector<std::size_t>& q) { return std::accumulate(q.begin(), q.end(), std::size_t{0}); }

} // namespace

TEST_CASE("score: single metric already spanning [0,1]") {
    const auto s = score_clusters({raw(Metric::irs, {0.0, 0.25, 1.0})}, catalog_strategy(2));
    CHECK(s[0] == doctest::Approx(0.1));
    CHECK(s[1] == doctest::Approx(0.35));
    CHECK(s[2] == doctest::Approx(1.1));
}

TEST_CASE("score: constant metric maps to the midpoint") {
    for (double v : score_clusters({raw(Metric::density, {0.4, 0.4, 0.4})}, catalog_strategy(1)))
        CHECK(v == doctest::Approx(0.6));
}

TEST_CASE("score: strategy 8 hand trace") {
    const auto s = score_clusters({raw(Metric::density, {1.0, 0.2}), raw(Metric::transferability, {0.0, 0.8})},
                                  catalog_strategy(8));
    CHECK(s[0] == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(s[1] == doctest::Approx(1.1).epsilon(1e-15));
}

TEST_CASE("score: missing metric rejected") {
    CHECK_THROWS_AS(score_clusters({raw(Metric::density, {1.0, 0.2})}, catalog_strategy(8)), InvalidArgument);
}

TEST_CASE("catalog: eleven strategies, density always lower-gets-more") {
    for (int i = 1; i <= 11; ++i) {
        const auto s = catalog_strategy(i);
        for (const auto& c : s.components)
            CHECK((c.orientation == Orientation::lower_gets_more) == (c.metric == Metric::density));
    }
    CHECK(parse_strategy("s8").name == catalog_strategy(8).name);
    CHECK_THROWS_AS(catalog_strategy(12), ConfigError);
    CHECK_THROWS_AS(parse_strategy("x"), ConfigError);
}

TEST_CASE("allocate: worked examples") {
    CHECK(allocate_quotas({1.0, 1.0}, {50, 50}, 10).quotas == std::vector<std::size_t>{5, 5});
    const auto p = allocate_quotas({1.0, 0.2}, {100, 100}, 10);
    CHECK(p.weights == std::vector<double>{100.0, 20.0});
    CHECK(p.quotas == std::vector<std::size_t>{8, 2});
    CHECK(allocate_quotas({4.0 / 3.0, 0.01}, {3, 100}, 10).quotas == std::vector<std::size_t>{3, 7});
}

TEST_CASE("allocate: remainder ties go to the lower index") {
    CHECK(allocate_quotas({1.0, 1.0, 1.0}, {10, 10, 10}, 2).quotas == std::vector<std::size_t>{1, 1, 0});
}

TEST_CASE("allocate: budget = N fills every cluster") {
    CHECK(allocate_quotas({0.1, 5.0, 1.0}, {4, 9, 2}, 15).quotas == std::vector<std::size_t>{4, 9, 2});
}

TEST_CASE("allocate: fuzzed sum, caps, quota property, scale and permutation") {
    Rng rng(2024);
    for (int trial = 0; trial < 2000; ++trial) {
        const std::size_t k = 1 + rng.below(12);
        std::vector<std::size_t> sizes(k);
        std::vector<double> scores(k);
        for (std::size_t c = 0; c < k; ++c) {
            sizes[c] = 1 + rng.below(trial % 2 ? 5 : 200);
            scores[c] = rng.uniform(0.1, 1.1);
        }
        const std::size_t n = total(sizes);
        const std::size_t budget = 1 + rng.below(n);
        const auto plan = allocate_quotas(scores, sizes, budget);
        REQUIRE(total(plan.quotas) == budget);
        bool capped = false;
        double wsum = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            REQUIRE(plan.quotas[c] <= sizes[c]);
            wsum += sizes[c] * scores[c];
        }
        for (std::size_t c = 0; c < k; ++c) capped = capped || budget * sizes[c] * scores[c] / wsum > sizes[c];
        if (!capped) {
            for (std::size_t c = 0; c < k; ++c) {
                const double share = budget * sizes[c] * scores[c] / wsum;
                CHECK(plan.quotas[c] >= static_cast<std::size_t>(std::floor(share - 1e-9)));
                CHECK(plan.quotas[c] <= static_cast<std::size_t>(std::ceil(share + 1e-9)));
            }
        }

        std::vector<double> scaled = scores;
        for (auto& s : scaled) s *= 8.0;  // exact in binary
        CHECK(allocate_quotas(scaled, sizes, budget).quotas == plan.quotas);

        std::vector<std::size_t> perm(k);
        std::iota(perm.begin(), perm.end(), 0);
        std::reverse(perm.begin(), perm.end());
        std::vector<std::size_t> psizes(k);
        std::vector<double> pscores(k);
        for (std::size_t c = 0; c < k; ++c) {
            psizes[c] = sizes[perm[c]];
            pscores[c] = scores[perm[c]];
        }
        const auto pq = allocate_quotas(pscores, psizes, budget).quotas;
        for (std::size_t c = 0; c < k; ++c) CHECK(pq[c] == plan.quotas[perm[c]]);
    }
}

TEST_CASE("allocate: invalid input") {
    CHECK_THROWS_AS(allocate_quotas({1.0}, {5}, 6), InvalidArgument);
    CHECK_THROWS_AS(allocate_quotas({1.0}, {5}, 0), InvalidArgument);
    CHECK_THROWS_AS(allocate_quotas({0.0}, {5}, 1), InvalidArgument);
    CHECK_THROWS_AS(allocate_quotas({1.0, 1.0}, {5}, 1), InvalidArgument);
}
