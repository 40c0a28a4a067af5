#include "coreselect/error.hpp"
#include "coreselect/kernel.hpp"
#include "coreselect/samplers.hpp"
#include "coreselect/synth.hpp"
#include "helpers.hpp"

#include <Eigen/QR>
#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <set>

using namespace coreselect;

namespace {

std::vector<std::size_t> iota_n(std::size_t n) {
    std::vector<std::size_t> v(n);
    std::iota(v.begin(), v.end(), 0);
    return v;
}

} // namespace

TEST_CASE("greedy mmd: quota = n returns everything with zero discrepancy") {
    const auto X = testutil::random_matrix(7, 3, 1);
    const auto tr = greedy_mmd_trace(X, 7, 1.0);
    auto sorted = tr.picks;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == iota_n(7));
    CHECK(std::abs(tr.mmd2.back()) < 1e-12);
}

TEST_CASE("greedy mmd: first pick is the best singleton") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto X = testutil::random_matrix(10, 2, seed);
        const auto pick = greedy_mmd_sample(X, 1, 1.0);
        const auto best = synth::brute_force_mmd_best(X, 1, 1.0);
        CHECK(pick == best.subset);
    }
}

TEST_CASE("greedy mmd: every step matches a full recomputation") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto X = testutil::random_matrix(10, 3, 40 + seed);
        const double sigma = median_bandwidth(X, seed);
        const auto fast = greedy_mmd_trace(X, 3, sigma);
        const auto naive = synth::greedy_mmd_naive(X, 3, sigma);
        CHECK(fast.picks == naive.picks);
        for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(fast.mmd2[i] - naive.mmd2[i]) < 1e-9);
        CHECK(fast.mmd2.back() >= synth::brute_force_mmd_best(X, 3, sigma).mmd2 - 1e-12);
    }
}

TEST_CASE("greedy mmd: reported values match the loop oracle and fall to zero at quota = n") {
    const auto X = testutil::random_matrix(15, 4, 5);
    const auto tr = greedy_mmd_trace(X, 15, 1.2);
    for (std::size_t m = 1; m <= 15; ++m) {
        const std::vector<std::size_t> prefix(tr.picks.begin(), tr.picks.begin() + m);
        CHECK(std::abs(tr.mmd2[m - 1] - synth::mmd2_oracle(X, prefix, 1.2)) < 1e-12);
    }
    CHECK(std::abs(tr.mmd2.back()) < 1e-12);
}

TEST_CASE("greedy mmd: nested prefixes") {
    const auto X = testutil::random_matrix(30, 2, 8);
    const auto big = greedy_mmd_sample(X, 12, 0.9);
    const auto small = greedy_mmd_sample(X, 5, 0.9);
    CHECK(std::equal(small.begin(), small.end(), big.begin()));
}

TEST_CASE("svd leverage: worked case") {
    RowMatrix X(3, 2);
    X << 1, 0, 1, 0, 0, 1;
    const auto l = leverage_scores(X, RankPolicy::fixed(2));
    CHECK(l[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(l[1] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(l[2] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(svd_leverage_sample(X, 2, RankPolicy::fixed(2)) == std::vector<std::size_t>{2, 0});
    const auto o = synth::leverage_oracle(X, 2);
    for (int i = 0; i < 3; ++i) CHECK(std::abs(o[i] - l[i]) < 1e-12);
}

TEST_CASE("svd leverage: orthonormal rows give all ones") {
    const RowMatrix Q = Eigen::MatrixXd(Eigen::HouseholderQR<Eigen::MatrixXd>(testutil::random_matrix(5, 5, 3)).householderQ());
    for (double v : leverage_scores(Q, RankPolicy::fixed(5))) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(svd_leverage_sample(Q, 3, RankPolicy::fixed(5)) == std::vector<std::size_t>{0, 1, 2});
}

TEST_CASE("svd leverage: sums to rank and agrees with the Gram oracle") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto X = testutil::random_matrix(8 + seed % 10, 2 + seed % 6, seed);
        const int r = 1 + static_cast<int>(seed % 3);
        int used = 0;
        const auto l = leverage_scores(X, RankPolicy::fixed(r), &used);
        CHECK(used == r);
        CHECK(std::abs(std::accumulate(l.begin(), l.end(), 0.0) - r) < 1e-9);
        const auto o = synth::leverage_oracle(X, r);
        for (std::size_t i = 0; i < l.size(); ++i) CHECK(std::abs(l[i] - o[i]) < 1e-8);
    }
}

TEST_CASE("svd leverage: appended zero columns change nothing") {
    const auto X = testutil::random_matrix(12, 3, 14);
    RowMatrix padded = RowMatrix::Zero(12, 6);
    padded.leftCols(3) = X;
    CHECK(svd_leverage_sample(X, 4, {}) == svd_leverage_sample(padded, 4, {}));
}

TEST_CASE("svd and pca: identical rows select the lowest indices") {
    const RowMatrix same = RowMatrix::Ones(6, 3);
    CHECK(svd_leverage_sample(same, 3, {}) == std::vector<std::size_t>{0, 1, 2});
    CHECK(pca_energy_sample(same, 3, {}) == std::vector<std::size_t>{0, 1, 2});
    CHECK(svd_leverage_sample(RowMatrix::Zero(4, 2), 2, {}) == std::vector<std::size_t>{0, 1});
}

TEST_CASE("svd: duplicate rows share a score") {
    auto X = testutil::random_matrix(6, 3, 2);
    X.row(4) = X.row(1);
    const auto l = leverage_scores(X, RankPolicy::fixed(2));
    CHECK(l[1] == doctest::Approx(l[4]).epsilon(1e-12));
}

TEST_CASE("rank policy: energy threshold") {
    Eigen::VectorXd s(3);
    s << 3.0, 1.0, 0.5;  // energies 9, 1, 0.25
    CHECK(resolve_rank(s, RankPolicy::energy_fraction(0.8)) == 1);
    CHECK(resolve_rank(s, RankPolicy::energy_fraction(0.95)) == 2);
    CHECK(resolve_rank(s, RankPolicy::energy_fraction(1.0)) == 3);
    CHECK(resolve_rank(s, RankPolicy::fixed(10)) == 3);
    CHECK(resolve_rank(Eigen::VectorXd::Zero(2), RankPolicy::fixed(1)) == 0);
}

TEST_CASE("pca: 1-D worked case") {
    RowMatrix X(5, 1);
    X << -2, -1, 0, 1, 3;
    const auto e = pca_energy_scores(X, RankPolicy::fixed(1));
    const double expect[] = {4.84, 1.44, 0.04, 0.64, 7.84};
    for (int i = 0; i < 5; ++i) CHECK(e[i] == doctest::Approx(expect[i]).epsilon(1e-12));
    CHECK(pca_energy_sample(X, 2, RankPolicy::fixed(1)) == std::vector<std::size_t>{4, 0});
}

TEST_CASE("pca: translation invariance and full quota") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto X = testutil::random_matrix(15, 4, 300 + seed);
        RowMatrix moved = X;
        moved.rowwise() += Eigen::RowVector4d(10, -4, 2.5, 100);
        CHECK(pca_energy_sample(X, 5, {}) == pca_energy_sample(moved, 5, {}));
        auto all = pca_energy_sample(X, 15, {});
        std::sort(all.begin(), all.end());
        CHECK(all == iota_n(15));
    }
}

TEST_CASE("random: permutation, determinism, empty draw") {
    auto p = random_sample(20, 20, 9);
    CHECK(p == random_sample(20, 20, 9));
    std::sort(p.begin(), p.end());
    CHECK(p == iota_n(20));
    CHECK(random_sample(20, 0, 9).empty());
    CHECK(random_sample(20, 5, 9) != random_sample(20, 5, 10));
}

TEST_CASE("samplers: quota bounds") {
    const auto X = testutil::random_matrix(5, 2, 1);
    for (auto kind : {SamplerKind::greedy_mmd, SamplerKind::svd, SamplerKind::pca, SamplerKind::random}) {
        SamplerSpec spec;
        spec.kind = kind;
        CHECK(sample_cluster(X, 0, spec, 1.0, 3).empty());
        const auto all = sample_cluster(X, 5, spec, 1.0, 3);
        CHECK(std::set<std::size_t>(all.begin(), all.end()).size() == 5);
        CHECK_THROWS_AS(sample_cluster(X, 6, spec, 1.0, 3), InvalidArgument);
    }
}

TEST_CASE("top scores: near ties go to the lower index") {
    CHECK(top_scores({1.0, 3.0, 3.0 + 1e-14, 2.0}, 2) == std::vector<std::size_t>{1, 2});
    CHECK(top_scores({5.0, 1.0, 5.0}, 3) == std::vector<std::size_t>{0, 2, 1});
}
