#include "coreselect/clustering.hpp"

#include "coreselect/error.hpp"
#include "coreselect/parallel.hpp"
#include "coreselect/random.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <limits>

namespace coreselect {

namespace {

struct Assignment {
    std::vector<int> labels;
    std::vector<double> sq_dist;
};

void assign_all(const RowMatrix& X, const RowMatrix& centroids, unsigned workers, Assignment& a) {
    const auto n = static_cast<std::size_t>(X.rows());
    a.labels.resize(n);
    a.sq_dist.resize(n);
    parallel_for(n, workers, [&](std::size_t i) {
        double d = 0.0;
        a.labels[i] = nearest_centroid(centroids, X.row(static_cast<Eigen::Index>(i)), &d);
        a.sq_dist[i] = d;
    });
}

std::vector<std::size_t> count_sizes(const std::vector<int>& labels, int k) {
    std::vector<std::size_t> sizes(static_cast<std::size_t>(k), 0);
    for (int l : labels) ++sizes[static_cast<std::size_t>(l)];
    return sizes;
}

// Re-seed empty clusters at the point farthest from its centroid, taken from a
// cluster that can spare it, then reassign. Every move with a positive
// distance strictly lowers the inertia, so the loop terminates. When all
// points already sit on their centroids (more clusters than distinct points)
// the point is moved without reassignment; it stays at distance zero.
void repair_empty(const RowMatrix& X, RowMatrix& centroids, unsigned workers, Assignment& a) {
    const int k = static_cast<int>(centroids.rows());
    for (;;) {
        auto sizes = count_sizes(a.labels, k);
        if (std::find(sizes.begin(), sizes.end(), std::size_t{0}) == sizes.end()) return;

        bool forced = false;
        for (int c = 0; c < k; ++c) {
            if (sizes[static_cast<std::size_t>(c)] != 0) continue;
            std::size_t best = a.labels.size();
            double best_d = -1.0;
            for (std::size_t i = 0; i < a.labels.size(); ++i) {
                if (sizes[static_cast<std::size_t>(a.labels[i])] < 2) continue;
                if (a.sq_dist[i] > best_d) {
                    best_d = a.sq_dist[i];
                    best = i;
                }
            }
            if (best == a.labels.size())
                throw InvalidArgument("k-means: cannot fill an empty cluster (k exceeds N)");
            if (best_d <= 0.0) forced = true;
            centroids.row(c) = X.row(static_cast<Eigen::Index>(best));
            --sizes[static_cast<std::size_t>(a.labels[best])];
            a.labels[best] = c;
            a.sq_dist[best] = 0.0;
            sizes[static_cast<std::size_t>(c)] = 1;
        }
        if (forced) return;
        assign_all(X, centroids, workers, a);
    }
}

RowMatrix kmeans_pp_init(const RowMatrix& X, int k, std::uint64_t seed, unsigned workers) {
    const auto n = static_cast<std::size_t>(X.rows());
    Rng rng(seed);
    RowMatrix centroids(k, X.cols());
    std::vector<bool> chosen(n, false);
    std::size_t first = static_cast<std::size_t>(rng.below(n));
    chosen[first] = true;
    centroids.row(0) = X.row(static_cast<Eigen::Index>(first));

    std::vector<double> d2(n);
    parallel_for(n, workers, [&](std::size_t i) {
        d2[i] = (X.row(static_cast<Eigen::Index>(i)) - centroids.row(0)).squaredNorm();
    });

    for (int c = 1; c < k; ++c) {
        double total = 0.0;
        for (double v : d2) total += v;
        std::size_t pick = n;
        if (total > 0.0) {
            const double target = rng.uniform() * total;
            double cum = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (d2[i] <= 0.0) continue;
                cum += d2[i];
                pick = i;
                if (cum > target) break;
            }
        } else {
            // Every point coincides with a chosen center: take the lowest unused row.
            for (std::size_t i = 0; i < n; ++i)
                if (!chosen[i]) {
                    pick = i;
                    break;
                }
        }
        chosen[pick] = true;
        centroids.row(c) = X.row(static_cast<Eigen::Index>(pick));
        parallel_for(n, workers, [&](std::size_t i) {
            const double d = (X.row(static_cast<Eigen::Index>(i)) - centroids.row(c)).squaredNorm();
            d2[i] = std::min(d2[i], d);
        });
    }
    return centroids;
}

double total_inertia(const std::vector<double>& sq_dist) {
    double s = 0.0;
    for (double v : sq_dist) s += v;
    return s;
}

} // namespace

int nearest_centroid(const RowMatrix& centroids, const Eigen::Ref<const Eigen::RowVectorXd>& point,
                     double* sq_dist) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
        const double d = (point - centroids.row(c)).squaredNorm();
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(c);
        }
    }
    if (sq_dist) *sq_dist = best_d;
    return best;
}

std::vector<std::vector<std::size_t>> ClusterModel::members() const {
    std::vector<std::vector<std::size_t>> out(static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < assignments.size(); ++i)
        out[static_cast<std::size_t>(assignments[i])].push_back(i);
    return out;
}

void ClusterModel::validate(std::size_t n) const {
    if (k <= 0) throw InvalidArgument("cluster model: k must be positive");
    if (assignments.size() != n)
        throw InvalidArgument("cluster model: " + std::to_string(assignments.size()) +
                              " assignments for " + std::to_string(n) + " samples");
    if (sizes.size() != static_cast<std::size_t>(k) || centroids.rows() != k)
        throw InvalidArgument("cluster model: sizes/centroids do not match k");
    std::vector<std::size_t> counted(static_cast<std::size_t>(k), 0);
    for (int a : assignments) {
        if (a < 0 || a >= k) throw InvalidArgument("cluster model: assignment out of range");
        ++counted[static_cast<std::size_t>(a)];
    }
    if (counted != sizes) throw InvalidArgument("cluster model: sizes disagree with assignments");
    for (std::size_t c = 0; c < sizes.size(); ++c)
        if (sizes[c] == 0) throw InvalidArgument("cluster model: cluster " + std::to_string(c) + " is empty");
}

ClusterModel kmeans_fit(const RowMatrix& X, const KMeansOptions& options) {
    const auto n = static_cast<std::size_t>(X.rows());
    if (options.k <= 0) throw InvalidArgument("k-means: k must be positive, got " + std::to_string(options.k));
    if (static_cast<std::size_t>(options.k) > n)
        throw InvalidArgument("k-means: k=" + std::to_string(options.k) + " exceeds N=" + std::to_string(n));
    if (options.max_iter <= 0) throw InvalidArgument("k-means: max_iter must be positive");
    if (!(options.tol >= 0.0)) throw InvalidArgument("k-means: tol must be nonnegative");
    if (!X.allFinite()) throw InvalidArgument("k-means: input contains non-finite values");

    const int k = options.k;
    ClusterModel model;
    model.k = k;
    model.centroids = kmeans_pp_init(X, k, options.seed, options.workers);

    Assignment a;
    for (int iter = 0; iter < options.max_iter; ++iter) {
        assign_all(X, model.centroids, options.workers, a);
        repair_empty(X, model.centroids, options.workers, a);
        model.inertia_trace.push_back(total_inertia(a.sq_dist));

        RowMatrix updated = RowMatrix::Zero(k, X.cols());
        std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
        for (std::size_t i = 0; i < n; ++i) {
            updated.row(a.labels[i]) += X.row(static_cast<Eigen::Index>(i));
            ++counts[static_cast<std::size_t>(a.labels[i])];
        }
        double shift = 0.0;
        for (int c = 0; c < k; ++c) {
            updated.row(c) /= static_cast<double>(counts[static_cast<std::size_t>(c)]);
            shift = std::max(shift, (updated.row(c) - model.centroids.row(c)).norm());
        }
        model.centroids = std::move(updated);
        model.iterations = iter + 1;
        if (shift < options.tol || shift == 0.0) break;
    }

    assign_all(X, model.centroids, options.workers, a);
    repair_empty(X, model.centroids, options.workers, a);
    model.assignments = std::move(a.labels);
    model.sizes = count_sizes(model.assignments, k);
    model.inertia = total_inertia(a.sq_dist);
    model.inertia_trace.push_back(model.inertia);
    return model;
}

nlohmann::json cluster_model_to_json(const ClusterModel& model) {
    nlohmann::json centroids = nlohmann::json::array();
    for (Eigen::Index c = 0; c < model.centroids.rows(); ++c) {
        std::vector<double> row(model.centroids.row(c).begin(), model.centroids.row(c).end());
        centroids.push_back(row);
    }
    return {
        {"k", model.k},
        {"iterations", model.iterations},
        {"inertia", model.inertia},
        {"inertia_trace", model.inertia_trace},
        {"sizes", model.sizes},
        {"assignments", model.assignments},
        {"centroids", std::move(centroids)},
    };
}

ClusterModel cluster_model_from_json(const nlohmann::json& j) {
    ClusterModel m;
    m.k = j.at("k").get<int>();
    m.iterations = j.at("iterations").get<int>();
    m.inertia = j.at("inertia").get<double>();
    m.inertia_trace = j.at("inertia_trace").get<std::vector<double>>();
    m.sizes = j.at("sizes").get<std::vector<std::size_t>>();
    m.assignments = j.at("assignments").get<std::vector<int>>();
    const auto& rows = j.at("centroids");
    const auto dim = rows.empty() ? 0 : rows.front().size();
    m.centroids.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(dim));
    for (std::size_t c = 0; c < rows.size(); ++c) {
        const auto row = rows[c].get<std::vector<double>>();
        if (row.size() != dim) throw FormatError("cluster model: ragged centroid rows");
        for (std::size_t d = 0; d < dim; ++d)
            m.centroids(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(d)) = row[d];
    }
    m.validate(m.assignments.size());
    return m;
}

} // namespace coreselect
