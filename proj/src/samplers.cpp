#include "coreselect/samplers.hpp"

#include "coreselect/error.hpp"
#include "coreselect/kernel.hpp"
#include "coreselect/random.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace coreselect {

namespace {

void check_quota(std::size_t quota, std::size_t n, const char* who) {
    if (quota > n)
        throw InvalidArgument(std::string(who) + ": quota " + std::to_string(quota) +
                              " exceeds cluster size " + std::to_string(n));
}

std::vector<std::size_t> lowest_indices(std::size_t quota) {
    std::vector<std::size_t> out(quota);
    std::iota(out.begin(), out.end(), std::size_t{0});
    return out;
}

} // namespace

SamplerKind parse_sampler(std::string_view s) {
    if (s == "greedy_mmd") return SamplerKind::greedy_mmd;
    if (s == "svd") return SamplerKind::svd;
    if (s == "pca") return SamplerKind::pca;
    if (s == "random") return SamplerKind::random;
    throw ConfigError("unknown sampler '" + std::string(s) + "'");
}

std::string_view to_string(SamplerKind k) {
    switch (k) {
    case SamplerKind::greedy_mmd: return "greedy_mmd";
    case SamplerKind::svd: return "svd";
    case SamplerKind::pca: return "pca";
    case SamplerKind::random: return "random";
    }
    return "?";
}

void RankPolicy::validate() const {
    if (kind == Kind::fixed && rank < 1) throw ConfigError("rank policy: fixed rank must be >= 1");
    if (kind == Kind::energy && !(energy > 0.0 && energy <= 1.0))
        throw ConfigError("rank policy: energy fraction must lie in (0, 1]");
}

GreedyMmdTrace greedy_mmd_trace(const RowMatrix& X, std::size_t quota, double sigma) {
    const auto n = static_cast<std::size_t>(X.rows());
    check_quota(quota, n, "greedy_mmd");
    if (!(sigma > 0.0)) throw InvalidArgument("greedy_mmd: sigma must be positive");
    GreedyMmdTrace trace;
    if (quota == 0) return trace;

    auto kern = [&](std::size_t a, std::size_t b) {
        return gaussian_kernel((X.row(static_cast<Eigen::Index>(a)) - X.row(static_cast<Eigen::Index>(b))).squaredNorm(),
                               sigma);
    };

    // rowsum[x] = sum_p k(p, x) over the whole cluster.
    std::vector<double> rowsum(n, 1.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double v = kern(i, j);
            rowsum[i] += v;
            rowsum[j] += v;
        }
    const double nd = static_cast<double>(n);
    double full_sum = 0.0;
    for (double r : rowsum) full_sum += r;
    const double full_term = full_sum / (nd * nd);

    std::vector<double> to_selected(n, 0.0);  // sum_{s in S} k(s, x)
    std::vector<bool> taken(n, false);
    double self_sum = 0.0;                    // sum_{s,t in S} k(s, t)
    double cross_sum = 0.0;                   // sum_{s in S} rowsum[s]

    for (std::size_t step = 0; step < quota; ++step) {
        const double m1 = static_cast<double>(step + 1);
        std::size_t best = n;
        double best_obj = std::numeric_limits<double>::infinity();
        for (std::size_t x = 0; x < n; ++x) {
            if (taken[x]) continue;
            const double obj = (self_sum + 2.0 * to_selected[x] + 1.0) / (m1 * m1) -
                               2.0 * (cross_sum + rowsum[x]) / (nd * m1);
            if (obj < best_obj) {
                best_obj = obj;
                best = x;
            }
        }
        taken[best] = true;
        self_sum += 2.0 * to_selected[best] + 1.0;
        cross_sum += rowsum[best];
        for (std::size_t y = 0; y < n; ++y) to_selected[y] += y == best ? 1.0 : kern(best, y);
        trace.picks.push_back(best);
        trace.mmd2.push_back(full_term + best_obj);
    }
    return trace;
}

std::vector<std::size_t> greedy_mmd_sample(const RowMatrix& X, std::size_t quota, double sigma) {
    return greedy_mmd_trace(X, quota, sigma).picks;
}

int resolve_rank(const Eigen::VectorXd& sv, const RankPolicy& policy) {
    policy.validate();
    if (sv.size() == 0 || !(sv(0) > 0.0)) return 0;
    const double cutoff = sv(0) * static_cast<double>(sv.size()) * std::numeric_limits<double>::epsilon();
    int numerical = 0;
    while (numerical < sv.size() && sv(numerical) > cutoff) ++numerical;

    if (policy.kind == RankPolicy::Kind::fixed) return std::min(policy.rank, numerical);

    const double total = sv.squaredNorm();
    double cum = 0.0;
    for (int r = 0; r < numerical; ++r) {
        cum += sv(r) * sv(r);
        if (cum >= policy.energy * total * (1.0 - 1e-12)) return r + 1;
    }
    return numerical;
}

std::vector<double> leverage_scores(const RowMatrix& X, const RankPolicy& policy, int* rank_used) {
    const auto n = static_cast<std::size_t>(X.rows());
    std::vector<double> scores(n, 0.0);
    Eigen::BDCSVD<Eigen::MatrixXd> svd(Eigen::MatrixXd(X), Eigen::ComputeThinU);
    const int r = resolve_rank(svd.singularValues(), policy);
    if (rank_used) *rank_used = r;
    const auto U = svd.matrixU().leftCols(r);
    for (std::size_t i = 0; i < n; ++i) scores[i] = U.row(static_cast<Eigen::Index>(i)).squaredNorm();
    return scores;
}

std::vector<double> pca_energy_scores(const RowMatrix& X, const RankPolicy& policy, int* rank_used) {
    const auto n = static_cast<std::size_t>(X.rows());
    std::vector<double> scores(n, 0.0);
    const Eigen::RowVectorXd mean = X.colwise().mean();
    const Eigen::MatrixXd centered = X.rowwise() - mean;
    Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
    const int r = resolve_rank(svd.singularValues(), policy);
    if (rank_used) *rank_used = r;
    const Eigen::MatrixXd Z = centered * svd.matrixV().leftCols(r);
    for (std::size_t i = 0; i < n; ++i) scores[i] = Z.row(static_cast<Eigen::Index>(i)).squaredNorm();
    return scores;
}

std::vector<std::size_t> top_scores(const std::vector<double>& scores, std::size_t quota) {
    const std::size_t n = scores.size();
    check_quota(quota, n, "top_scores");
    double hi = 0.0;
    for (double s : scores) hi = std::max(hi, std::abs(s));
    std::vector<long long> key(n, 0);
    if (hi > 0.0)
        for (std::size_t i = 0; i < n; ++i) key[i] = std::llround(scores[i] / hi * 1e10);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return key[a] > key[b]; });
    order.resize(quota);
    return order;
}

std::vector<std::size_t> svd_leverage_sample(const RowMatrix& X, std::size_t quota, const RankPolicy& policy) {
    const auto n = static_cast<std::size_t>(X.rows());
    check_quota(quota, n, "svd");
    if (quota == 0) return {};
    if (X.isZero(0.0)) return lowest_indices(quota);
    return top_scores(leverage_scores(X, policy), quota);
}

std::vector<std::size_t> pca_energy_sample(const RowMatrix& X, std::size_t quota, const RankPolicy& policy) {
    const auto n = static_cast<std::size_t>(X.rows());
    check_quota(quota, n, "pca");
    if (quota == 0) return {};
    return top_scores(pca_energy_scores(X, policy), quota);
}

std::vector<std::size_t> random_sample(std::size_t n, std::size_t quota, std::uint64_t seed) {
    check_quota(quota, n, "random");
    Rng rng(seed);
    return rng.sample_without_replacement(n, quota);
}

std::vector<std::size_t> sample_cluster(const RowMatrix& X, std::size_t quota, const SamplerSpec& spec,
                                        double sigma, std::uint64_t seed) {
    switch (spec.kind) {
    case SamplerKind::greedy_mmd: return greedy_mmd_sample(X, quota, spec.sigma.value_or(sigma));
    case SamplerKind::svd: return svd_leverage_sample(X, quota, spec.rank_policy);
    case SamplerKind::pca: return pca_energy_sample(X, quota, spec.rank_policy);
    case SamplerKind::random: return random_sample(static_cast<std::size_t>(X.rows()), quota, seed);
    }
    throw InvalidArgument("unknown sampler kind");
}

} // namespace coreselect
