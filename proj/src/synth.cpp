#include "coreselect/synth.hpp"

#include "coreselect/error.hpp"
#include "coreselect/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

namespace coreselect::synth {

namespace {

double gauss(const RowMatrix& X, std::size_t a, std::size_t b, double sigma) {
    double sq = 0.0;
    for (Eigen::Index d = 0; d < X.cols(); ++d) {
        const double diff = X(static_cast<Eigen::Index>(a), d) - X(static_cast<Eigen::Index>(b), d);
        sq += diff * diff;
    }
    return std::exp(-sq / (2.0 * sigma * sigma));
}

std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
    if (k > n) return 0;
    k = std::min(k, n - k);
    long double r = 1;
    for (std::uint64_t i = 1; i <= k; ++i) r = r * static_cast<long double>(n - k + i) / static_cast<long double>(i);
    return static_cast<std::uint64_t>(std::llround(r));
}

std::string sample_id(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "s%07zu", i);
    return buf;
}

} // namespace

void MixtureSpec::validate() const {
    if (components.empty()) throw InvalidArgument("mixture: need at least one component");
    const auto dim = components.front().center.size();
    if (dim == 0) throw InvalidArgument("mixture: centers must have dim >= 1");
    for (const auto& c : components) {
        if (c.center.size() != dim) throw InvalidArgument("mixture: centers differ in dimension");
        if (!(c.spread >= 0.0)) throw InvalidArgument("mixture: spreads must be nonnegative");
        if (c.count < 1) throw InvalidArgument("mixture: point counts must be >= 1");
        if (!(c.irs_mean > 0.0)) throw InvalidArgument("mixture: irs_mean must be positive");
    }
    if (!(outlier_fraction >= 0.0 && outlier_fraction < 0.5))
        throw InvalidArgument("mixture: outlier fraction must lie in [0, 0.5)");
}

Mixture generate_mixture(const MixtureSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    const std::size_t dim = spec.components.front().center.size();
    std::size_t inliers = 0;
    for (const auto& c : spec.components) inliers += c.count;
    const auto outliers = static_cast<std::size_t>(std::llround(spec.outlier_fraction * static_cast<double>(inliers)));
    const std::size_t n = inliers + outliers;

    RowMatrix points(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
    std::vector<int> labels(n, -1);
    std::vector<double> irs_mean(n, 1.0);
    std::size_t row = 0;
    for (std::size_t c = 0; c < spec.components.size(); ++c) {
        const auto& comp = spec.components[c];
        for (std::size_t i = 0; i < comp.count; ++i, ++row) {
            for (std::size_t d = 0; d < dim; ++d)
                points(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(d)) =
                    comp.center[d] + comp.spread * rng.normal();
            labels[row] = static_cast<int>(c);
            irs_mean[row] = comp.irs_mean;
        }
    }
    if (outliers > 0) {
        const Eigen::RowVectorXd lo = points.topRows(static_cast<Eigen::Index>(inliers)).colwise().minCoeff();
        const Eigen::RowVectorXd hi = points.topRows(static_cast<Eigen::Index>(inliers)).colwise().maxCoeff();
        for (; row < n; ++row)
            for (std::size_t d = 0; d < dim; ++d) {
                const auto dd = static_cast<Eigen::Index>(d);
                points(static_cast<Eigen::Index>(row), dd) = rng.uniform(lo(dd), hi(dd));
            }
    }

    const auto order = rng.sample_without_replacement(n, n);
    Mixture out;
    out.space.name = spec.name;
    out.space.vectors.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
    out.labels.resize(n);
    out.meta.resize(n);
    const double s = spec.irs_noise;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t src = order[i];
        out.space.vectors.row(static_cast<Eigen::Index>(i)) = points.row(static_cast<Eigen::Index>(src)).cast<float>();
        out.space.ids.push_back(sample_id(i));
        out.labels[i] = labels[src];
        auto& m = out.meta[i];
        m.id = out.space.ids.back();
        m.loss_without_q = rng.uniform(1.0, 3.0);
        const double irs = irs_mean[src] * std::exp(s * rng.normal() - 0.5 * s * s);
        m.loss_with_q = irs * m.loss_without_q;
    }
    return out;
}

MixtureSpec random_mixture_spec(std::size_t components, std::size_t dim, std::size_t points_each,
                                double spread, double scale, std::uint64_t seed) {
    Rng rng(derive_seed(seed, 0x5eed));
    MixtureSpec spec;
    spec.seed = seed;
    for (std::size_t c = 0; c < components; ++c) {
        MixtureComponent comp;
        comp.center.resize(dim);
        for (auto& v : comp.center) v = rng.uniform(-scale, scale);
        comp.spread = spread;
        comp.count = points_each;
        comp.irs_mean = 0.5 + static_cast<double>(c) / static_cast<double>(std::max<std::size_t>(1, components));
        spec.components.push_back(std::move(comp));
    }
    return spec;
}

std::vector<FeatureSpace> split_columns(const FeatureSpace& space, const std::vector<std::size_t>& widths,
                                        const std::vector<std::string>& names) {
    if (widths.size() != names.size()) throw InvalidArgument("split_columns: widths/names length mismatch");
    if (std::accumulate(widths.begin(), widths.end(), std::size_t{0}) != space.dim())
        throw InvalidArgument("split_columns: widths do not sum to the space dimension");
    std::vector<FeatureSpace> out;
    std::size_t offset = 0;
    for (std::size_t b = 0; b < widths.size(); ++b) {
        FeatureSpace fs;
        fs.name = names[b];
        fs.ids = space.ids;
        fs.vectors = space.vectors.middleCols(static_cast<Eigen::Index>(offset), static_cast<Eigen::Index>(widths[b]));
        offset += widths[b];
        out.push_back(std::move(fs));
    }
    return out;
}

double density_oracle(const RowMatrix& members, double sigma) {
    const auto n = static_cast<std::size_t>(members.rows());
    if (n == 1) return 1.0;
    double sum = 0.0;
    for (std::size_t m = 0; m < n; ++m)
        for (std::size_t q = 0; q < n; ++q)
            if (m != q) sum += gauss(members, m, q, sigma);
    return sum / (static_cast<double>(n) * static_cast<double>(n - 1));
}

double mmd2_oracle(const RowMatrix& X, const std::vector<std::size_t>& subset, double sigma) {
    const auto n = static_cast<std::size_t>(X.rows());
    const auto m = subset.size();
    double full = 0.0, self = 0.0, cross = 0.0;
    for (std::size_t p = 0; p < n; ++p)
        for (std::size_t q = 0; q < n; ++q) full += gauss(X, p, q, sigma);
    for (std::size_t a : subset)
        for (std::size_t b : subset) self += gauss(X, a, b, sigma);
    for (std::size_t p = 0; p < n; ++p)
        for (std::size_t b : subset) cross += gauss(X, p, b, sigma);
    const double nd = static_cast<double>(n), md = static_cast<double>(m);
    return full / (nd * nd) + self / (md * md) - 2.0 * cross / (nd * md);
}

GreedyMmdTrace greedy_mmd_naive(const RowMatrix& X, std::size_t quota, double sigma) {
    const auto n = static_cast<std::size_t>(X.rows());
    if (quota > n) throw InvalidArgument("greedy_mmd_naive: quota exceeds n");
    GreedyMmdTrace trace;
    std::vector<bool> taken(n, false);
    std::vector<std::size_t> current;
    for (std::size_t step = 0; step < quota; ++step) {
        std::size_t best = n;
        double best_val = std::numeric_limits<double>::infinity();
        for (std::size_t x = 0; x < n; ++x) {
            if (taken[x]) continue;
            auto trial = current;
            trial.push_back(x);
            const double v = mmd2_oracle(X, trial, sigma);
            if (v < best_val) {
                best_val = v;
                best = x;
            }
        }
        taken[best] = true;
        current.push_back(best);
        trace.picks.push_back(best);
        trace.mmd2.push_back(best_val);
    }
    return trace;
}

SubsetValue brute_force_mmd_best(const RowMatrix& X, std::size_t quota, double sigma) {
    const auto n = static_cast<std::size_t>(X.rows());
    if (quota > n) throw InvalidArgument("brute_force_mmd_best: quota exceeds n");
    if (binomial(n, quota) > kMaxEnumeration)
        throw InvalidArgument("brute_force_mmd_best: C(" + std::to_string(n) + ", " + std::to_string(quota) +
                              ") exceeds the enumeration cap of 1e6");
    if (quota == 0) throw InvalidArgument("brute_force_mmd_best: quota must be >= 1");

    // Precompute the kernel once; subsets are scored from it.
    Eigen::MatrixXd K(n, n);
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b)
            K(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = gauss(X, a, b, sigma);
    const double full = K.sum() / (static_cast<double>(n) * static_cast<double>(n));
    const Eigen::VectorXd colsum = K.colwise().sum().transpose();

    SubsetValue best;
    best.mmd2 = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> idx(quota);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    const double md = static_cast<double>(quota);
    for (;;) {
        double self = 0.0, cross = 0.0;
        for (std::size_t a : idx) {
            cross += colsum(static_cast<Eigen::Index>(a));
            for (std::size_t b : idx) self += K(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
        }
        const double v = full + self / (md * md) - 2.0 * cross / (static_cast<double>(n) * md);
        if (v < best.mmd2) {
            best.mmd2 = v;
            best.subset = idx;
        }
        // Next combination in lexicographic order.
        std::size_t i = quota;
        while (i > 0 && idx[i - 1] == n - quota + i - 1) --i;
        if (i == 0) break;
        ++idx[i - 1];
        for (std::size_t j = i; j < quota; ++j) idx[j] = idx[j - 1] + 1;
    }
    return best;
}

void jacobi_eigen(const Eigen::MatrixXd& input, Eigen::VectorXd& values, Eigen::MatrixXd& vectors) {
    const Eigen::Index n = input.rows();
    Eigen::MatrixXd A = input;
    Eigen::MatrixXd V = Eigen::MatrixXd::Identity(n, n);
    const double scale = std::max(A.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (Eigen::Index p = 0; p < n; ++p)
            for (Eigen::Index q = p + 1; q < n; ++q) off += A(p, q) * A(p, q);
        if (std::sqrt(off) <= 1e-15 * scale) break;
        for (Eigen::Index p = 0; p < n; ++p)
            for (Eigen::Index q = p + 1; q < n; ++q) {
                if (A(p, q) == 0.0) continue;
                const double theta = (A(q, q) - A(p, p)) / (2.0 * A(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double akp = A(k, p), akq = A(k, q);
                    A(k, p) = c * akp - s * akq;
                    A(k, q) = s * akp + c * akq;
                }
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double apk = A(p, k), aqk = A(q, k);
                    A(p, k) = c * apk - s * aqk;
                    A(q, k) = s * apk + c * aqk;
                }
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double vkp = V(k, p), vkq = V(k, q);
                    V(k, p) = c * vkp - s * vkq;
                    V(k, q) = s * vkp + c * vkq;
                }
            }
    }
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return A(a, a) > A(b, b); });
    values.resize(n);
    vectors.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        values(i) = A(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(i)]);
        vectors.col(i) = V.col(order[static_cast<std::size_t>(i)]);
    }
}

std::vector<double> leverage_oracle(const RowMatrix& X, int r) {
    const auto n = X.rows();
    if (r < 1 || r > std::min<Eigen::Index>(n, X.cols()))
        throw InvalidArgument("leverage_oracle: r=" + std::to_string(r) + " out of range [1, min(n, d)]");
    Eigen::MatrixXd gram(n, n);
    for (Eigen::Index a = 0; a < n; ++a)
        for (Eigen::Index b = 0; b < n; ++b) {
            double s = 0.0;
            for (Eigen::Index d = 0; d < X.cols(); ++d) s += X(a, d) * X(b, d);
            gram(a, b) = s;
        }
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors;
    jacobi_eigen(gram, values, vectors);
    std::vector<double> out(static_cast<std::size_t>(n), 0.0);
    for (Eigen::Index i = 0; i < n; ++i)
        for (int j = 0; j < r; ++j) out[static_cast<std::size_t>(i)] += vectors(i, j) * vectors(i, j);
    return out;
}

Coverage coverage_metrics(const std::vector<std::size_t>& selected, const RowMatrix& X, double sigma) {
    if (selected.empty()) throw InvalidArgument("coverage_metrics: selection is empty");
    Coverage cov;
    cov.mmd2 = mmd2_oracle(X, selected, sigma);
    double total = 0.0;
    for (Eigen::Index p = 0; p < X.rows(); ++p) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t s : selected)
            best = std::min(best, (X.row(p) - X.row(static_cast<Eigen::Index>(s))).norm());
        total += best;
    }
    cov.mean_nn_distance = total / static_cast<double>(X.rows());
    return cov;
}

} // namespace coreselect::synth
