#include "coreselect/bench.hpp"

#include "coreselect/clustering.hpp"
#include "coreselect/error.hpp"
#include "coreselect/kernel.hpp"
#include "coreselect/metrics.hpp"
#include "coreselect/pipeline.hpp"
#include "coreselect/quota.hpp"
#include "coreselect/random.hpp"
#include "coreselect/samplers.hpp"
#include "coreselect/synth.hpp"
#include "text_util.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <numeric>
#include <set>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace coreselect::bench {

namespace {

class Timer {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

RowMatrix random_matrix(Rng& rng, Eigen::Index n, Eigen::Index d, double scale = 1.0) {
    RowMatrix X(n, d);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < d; ++j) X(i, j) = scale * rng.normal();
    return X;
}

std::string fmt(double v) {
    std::ostringstream ss;
    ss.precision(3);
    ss << v;
    return ss.str();
}

bool partitions_match(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() != b.size()) return false;
    std::map<int, int> fwd, back;
    for (std::size_t i = 0; i < a.size(); ++i) {
        auto [f, fnew] = fwd.emplace(a[i], b[i]);
        auto [r, rnew] = back.emplace(b[i], a[i]);
        if (f->second != b[i] || r->second != a[i]) return false;
    }
    return true;
}

bool bitwise_equal(const RowMatrix& a, const RowMatrix& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() &&
           std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

} // namespace

SyntheticDataset write_synthetic_dataset(const fs::path& dir, std::size_t n, std::uint64_t seed) {
    static constexpr double share[] = {0.32, 0.24, 0.20, 0.14, 0.10};
    static constexpr double spread[] = {0.6, 1.0, 1.4, 0.8, 1.8};
    static constexpr double irs[] = {0.6, 0.9, 1.2, 0.8, 1.5};
    constexpr std::size_t dim = 26;

    Rng rng(derive_seed(seed, 0xda7a));
    synth::MixtureSpec spec;
    spec.seed = seed;
    spec.name = "mixture";
    std::size_t used = 0;
    for (int c = 0; c < 5; ++c) {
        synth::MixtureComponent comp;
        comp.center.resize(dim);
        for (auto& v : comp.center) v = rng.uniform(-6.0, 6.0);
        comp.spread = spread[c];
        comp.count = c == 4 ? n - used : static_cast<std::size_t>(std::floor(share[c] * static_cast<double>(n)));
        comp.irs_mean = irs[c];
        used += comp.count;
        spec.components.push_back(std::move(comp));
    }
    const auto mix = synth::generate_mixture(spec);
    const auto spaces = synth::split_columns(mix.space, {12, 8, 6}, {"lmm", "vte", "e5"});

    fs::create_directories(dir);
    for (const auto& s : spaces) write_feature_space(s, dir / (s.name + ".feat"));
    write_sample_meta(mix.meta, dir / "meta.csv");
    const json config = {{"feature_variant", 6},  {"meta", "meta.csv"},     {"text_space", "e5"},
                         {"k", 64},               {"seed", seed},           {"budget_ratio", 0.1},
                         {"quota_strategy", 8},   {"sampler", "svd"},       {"output_dir", "run"}};
    detail::write_file(dir / "config.json", config.dump(2) + "\n");
    return {dir, dir / "config.json", mix.space.size()};
}

CheckResult check_density(const BenchOptions& opts) {
    Timer t;
    CheckResult r{"density: module vs double-loop oracle (1e-10), closed form e^-1 (1e-12), < 5 s", false, {}, 0.0};
    Rng rng(derive_seed(opts.seed, 1));
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto n = static_cast<Eigen::Index>(1 + rng.below(50));
        const auto d = static_cast<Eigen::Index>(1 + rng.below(16));
        const double sigma = rng.uniform(0.5, 3.0);
        const RowMatrix X = random_matrix(rng, n, d);
        worst = std::max(worst, std::abs(cluster_density(X, sigma) - synth::density_oracle(X, sigma)));
    }
    const double sigma = 1.7;
    RowMatrix pair(2, 2);
    pair << 0.0, 0.0, std::sqrt(2.0) * sigma, 0.0;
    const double closed = std::abs(cluster_density(pair, sigma) - std::exp(-1.0));
    r.seconds = t.seconds();
    r.passed = worst <= 1e-10 && closed <= 1e-12 && r.seconds < 5.0;
    r.detail = "max |diff| " + fmt(worst) + ", closed-form err " + fmt(closed);
    return r;
}

CheckResult check_irs(const BenchOptions& opts) {
    Timer t;
    CheckResult r{"irs: exact ratio on 1000 fuzzed pairs, zero denominator rejected", false, {}, 0.0};
    Rng rng(derive_seed(opts.seed, 2));
    int mismatches = 0;
    for (int i = 0; i < 1000; ++i) {
        SampleMeta m{"s", rng.uniform(0.0, 10.0), rng.uniform(1e-3, 10.0)};
        if (sample_irs(m) != m.loss_with_q / m.loss_without_q) ++mismatches;
    }
    bool rejected = false;
    try {
        parse_sample_meta("id,loss_with_q,loss_without_q\ns1,1.0,0\n");
    } catch (const FormatError&) {
        rejected = true;
    }
    r.seconds = t.seconds();
    r.passed = mismatches == 0 && rejected;
    r.detail = std::to_string(mismatches) + " mismatches, zero denominator " + (rejected ? "rejected" : "ACCEPTED");
    return r;
}

CheckResult check_transferability(const BenchOptions& opts) {
    Timer t;
    CheckResult r{"transferability: closed form (1e-9), empty filter = 0, rescale invariance on 100 sets", false, {}, 0.0};
    RowMatrix c(3, 2);
    const double h = 1.0 / std::sqrt(2.0);
    c << 1, 0, 0, 1, h, h;
    const auto closed = cluster_transferability(c, 0.8);
    const double err = std::abs(closed.values[0] - 0.5 / std::sqrt(2.0));

    RowMatrix tight(3, 2);
    tight << 1.0, 0.01, 1.0, 0.02, 1.0, 0.03;
    const auto empty = cluster_transferability(tight, 0.5);
    const bool empty_ok = std::all_of(empty.values.begin(), empty.values.end(), [](double v) { return v == 0.0; });

    Rng rng(derive_seed(opts.seed, 3));
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto k = static_cast<Eigen::Index>(2 + rng.below(19));
        const auto d = static_cast<Eigen::Index>(2 + rng.below(9));
        const double tau = rng.uniform(-0.5, 0.9);
        RowMatrix X = random_matrix(rng, k, d);
        const auto base = cluster_transferability(X, tau);
        for (Eigen::Index i = 0; i < k; ++i) X.row(i) *= std::exp(rng.uniform(std::log(0.01), std::log(100.0)));
        const auto scaled = cluster_transferability(X, tau);
        for (std::size_t i = 0; i < base.values.size(); ++i)
            worst = std::max(worst, std::abs(base.values[i] - scaled.values[i]));
    }
    r.seconds = t.seconds();
    r.passed = err <= 1e-9 && empty_ok && worst <= 1e-12;
    r.detail = "T1 err " + fmt(err) + ", empty filter " + (empty_ok ? "ok" : "WRONG") + ", rescale max diff " + fmt(worst);
    return r;
}

CheckResult check_quota(const BenchOptions& opts) {
    Timer t;
    CheckResult r{"quota: 1e4 fuzzed instances exact sum and caps, worked {8,2} and {3,7}, < 10 s", false, {}, 0.0};
    Rng rng(derive_seed(opts.seed, 4));
    int violations = 0;
    for (int trial = 0; trial < 10000; ++trial) {
        const std::size_t k = 1 + rng.below(200);
        std::vector<std::size_t> sizes(k);
        std::vector<double> scores(k);
        std::size_t total = 0;
        for (std::size_t c = 0; c < k; ++c) {
            sizes[c] = 1 + rng.below(100);
            scores[c] = 0.1 + rng.uniform();
            total += sizes[c];
        }
        const std::size_t budget = 1 + rng.below(total);
        const auto plan = allocate_quotas(scores, sizes, budget);
        std::size_t sum = 0;
        bool capped = true;
        for (std::size_t c = 0; c < k; ++c) {
            sum += plan.quotas[c];
            capped = capped && plan.quotas[c] <= sizes[c];
        }
        if (sum != budget || !capped) ++violations;
    }
    const auto worked = allocate_quotas({1.0, 0.2}, {100, 100}, 10).quotas;
    const auto capped = allocate_quotas({4.0, 0.03}, {3, 100}, 10).quotas;
    const bool worked_ok = worked == std::vector<std::size_t>{8, 2};
    const bool capped_ok = capped == std::vector<std::size_t>{3, 7};
    r.seconds = t.seconds();
    r.passed = violations == 0 && worked_ok && capped_ok && r.seconds < 10.0;
    r.detail = std::to_string(violations) + " violations, {8,2} " + (worked_ok ? "ok" : "WRONG") + ", {3,7} " +
               (capped_ok ? "ok" : "WRONG");
    return r;
}

CheckResult check_greedy_mmd(const BenchOptions& opts) {
    Timer t;
    CheckResult r{"greedy mmd: per-step exhaustive agreement, naive path within 1e-9, <= 1.2x optimum on >= 45/50", false, {}, 0.0};
    Rng rng(derive_seed(opts.seed, 5));
    int step_mismatch = 0;
    int within_bound = 0;
    double worst_diff = 0.0;
    double worst_ratio = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const RowMatrix X = random_matrix(rng, 12, 3);
        const double sigma = median_bandwidth(X, 0);
        const auto fast = greedy_mmd_trace(X, 3, sigma);
        const auto naive = synth::greedy_mmd_naive(X, 3, sigma);
        if (fast.picks != naive.picks) ++step_mismatch;
        for (std::size_t s = 0; s < fast.mmd2.size(); ++s)
            worst_diff = std::max(worst_diff, std::abs(fast.mmd2[s] - naive.mmd2[s]));
        const auto best = synth::brute_force_mmd_best(X, 3, sigma);
        const double ratio = fast.mmd2.back() / best.mmd2;
        worst_ratio = std::max(worst_ratio, ratio);
        if (ratio <= 1.2) ++within_bound;
    }
    r.seconds = t.seconds();
    r.passed = step_mismatch == 0 && worst_diff <= 1e-9 && within_bound >= 45;
    r.detail = std::to_string(step_mismatch) + " step mismatches, max |incremental-naive| " + fmt(worst_diff) + ", " +
               std::to_string(within_bound) + "/50 within 1.2x (worst ratio " + fmt(worst_ratio) + ")";
    return r;
}

CheckResult check_svd_leverage(const BenchOptions& opts) {
    Timer t;
    CheckResult r{"svd leverage: sum = r (1e-9), Gram oracle (1e-8), worked case selects [2, 0]", false, {}, 0.0};
    Rng rng(derive_seed(opts.seed, 6));
    double worst_sum = 0.0;
    double worst_oracle = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto n = static_cast<Eigen::Index>(3 + rng.below(28));
        const auto d = static_cast<Eigen::Index>(2 + rng.below(11));
        const RowMatrix X = random_matrix(rng, n, d);
        const int rank = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(std::min(n, d))));
        int used = 0;
        const auto lev = leverage_scores(X, RankPolicy::fixed(rank), &used);
        const double sum = std::accumulate(lev.begin(), lev.end(), 0.0);
        worst_sum = std::max(worst_sum, std::abs(sum - used) + (used == rank ? 0.0 : 1.0));
        const auto oracle = synth::leverage_oracle(X, rank);
        for (std::size_t i = 0; i < lev.size(); ++i) worst_oracle = std::max(worst_oracle, std::abs(lev[i] - oracle[i]));
    }
    RowMatrix ex(3, 2);
    ex << 1, 0, 1, 0, 0, 1;
    const auto picks = svd_leverage_sample(ex, 2, RankPolicy::fixed(2));
    const bool worked = picks == std::vector<std::size_t>{2, 0};
    r.seconds = t.seconds();
    r.passed = worst_sum <= 1e-9 && worst_oracle <= 1e-8 && worked;
    r.detail = "max |sum-r| " + fmt(worst_sum) + ", max |svd-gram| " + fmt(worst_oracle) + ", worked case " +
               (worked ? "[2, 0]" : "WRONG");
    return r;
}

CheckResult check_pca(const BenchOptions& opts) {
    Timer t;
    CheckResult r{"pca: translation invariance on 100 fuzzed clusters, 1-D case selects [4, 0]", false, {}, 0.0};
    Rng rng(derive_seed(opts.seed, 7));
    int changed = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto n = static_cast<Eigen::Index>(2 + rng.below(40));
        const auto d = static_cast<Eigen::Index>(1 + rng.below(10));
        const RowMatrix X = random_matrix(rng, n, d);
        const std::size_t quota = 1 + rng.below(static_cast<std::uint64_t>(n));
        Eigen::RowVectorXd shift(d);
        for (Eigen::Index j = 0; j < d; ++j) shift(j) = rng.uniform(-10.0, 10.0);
        const RowMatrix moved = X.rowwise() + shift;
        const auto policy = trial % 2 ? RankPolicy::energy_fraction(0.95)
                                      : RankPolicy::fixed(1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(d))));
        if (pca_energy_sample(X, quota, policy) != pca_energy_sample(moved, quota, policy)) ++changed;
    }
    RowMatrix line(5, 1);
    line << -2, -1, 0, 1, 3;
    const bool worked = pca_energy_sample(line, 2, RankPolicy::fixed(1)) == std::vector<std::size_t>{4, 0};
    r.seconds = t.seconds();
    r.passed = changed == 0 && worked;
    r.detail = std::to_string(changed) + "/100 selections changed under translation, 1-D case " +
               (worked ? "[4, 0]" : "WRONG");
    return r;
}

CheckResult check_kmeans(const BenchOptions& opts) {
    Timer t;
    CheckResult r{"k-means: monotone inertia, two-blob recovery, bitwise determinism, equal assignments on 1/2/4 workers", false, {}, 0.0};
    Rng rng(derive_seed(opts.seed, 8));
    int non_monotone = 0, blob_fail = 0, nondeterministic = 0, worker_mismatch = 0, runs = 0;

    auto monotone = [](const ClusterModel& m) {
        for (std::size_t i = 1; i < m.inertia_trace.size(); ++i)
            if (m.inertia_trace[i] > m.inertia_trace[i - 1] * (1.0 + 1e-12)) return false;
        return true;
    };

    for (int trial = 0; trial < 10; ++trial) {
        // Two blobs 20 apart with spread 0.5.
        synth::MixtureSpec spec;
        spec.seed = rng.next();
        const std::size_t dim = 2 + rng.below(4);
        synth::MixtureComponent a, b;
        a.center.assign(dim, 0.0);
        b.center.assign(dim, 0.0);
        b.center[0] = 20.0;
        a.spread = b.spread = 0.5;
        a.count = 30 + rng.below(70);
        b.count = 30 + rng.below(70);
        spec.components = {a, b};
        const auto mix = synth::generate_mixture(spec);
        const RowMatrix X = mix.space.vectors.cast<double>();
        KMeansOptions o;
        o.k = 2;
        o.seed = rng.next();
        const auto m = kmeans_fit(X, o);
        ++runs;
        if (!monotone(m)) ++non_monotone;
        if (!partitions_match(m.assignments, mix.labels)) ++blob_fail;
    }

    for (int trial = 0; trial < 10; ++trial) {
        const auto spec = synth::random_mixture_spec(2 + rng.below(6), 2 + rng.below(8), 40 + rng.below(80),
                                                     rng.uniform(0.5, 2.0), 5.0, rng.next());
        const RowMatrix X = synth::generate_mixture(spec).space.vectors.cast<double>();
        KMeansOptions o;
        o.k = static_cast<int>(2 + rng.below(20));
        o.seed = rng.next();
        const auto m1 = kmeans_fit(X, o);
        const auto m1b = kmeans_fit(X, o);
        runs += 2;
        if (!monotone(m1) || !monotone(m1b)) ++non_monotone;
        if (m1.assignments != m1b.assignments || !bitwise_equal(m1.centroids, m1b.centroids)) ++nondeterministic;
        for (unsigned w : {2u, 4u}) {
            o.workers = w;
            const auto mw = kmeans_fit(X, o);
            ++runs;
            if (!monotone(mw)) ++non_monotone;
            if (mw.assignments != m1.assignments) ++worker_mismatch;
        }
        o.workers = 1;
    }
    r.seconds = t.seconds();
    r.passed = non_monotone == 0 && blob_fail == 0 && nondeterministic == 0 && worker_mismatch == 0;
    r.detail = std::to_string(runs) + " runs: " + std::to_string(non_monotone) + " non-monotone, " +
               std::to_string(blob_fail) + "/10 blob failures, " + std::to_string(nondeterministic) +
               " nondeterministic, " + std::to_string(worker_mismatch) + " worker mismatches";
    return r;
}

CheckResult check_end_to_end(const BenchOptions& opts) {
    Timer t;
    CheckResult r{"end-to-end: N=5000 default preset, 500 unique ids, byte-identical rerun, MMD2 <= random sampler on >= 8/10 seeds, < 60 s", false, {}, 0.0};
    int wins = 0;
    int global_wins = 0;
    bool sizes_ok = true;
    bool rerun_ok = true;
    double first_run = 0.0;
    std::string ratios;
    std::string global_ratios;
    for (int trial = 0; trial < 10; ++trial) {
        const std::uint64_t seed = opts.seed + static_cast<std::uint64_t>(trial);
        const auto ds = write_synthetic_dataset(opts.work_dir / ("e2e_" + std::to_string(trial)), 5000, seed);
        auto config = PipelineConfig::load(ds.config);
        config.workers = 1;
        fs::remove_all(config.output_dir);

        Timer run_timer;
        auto st = prepare_run(config);
        select_budget(st, config.budget_ratio);
        write_run(st, config.output_dir);
        if (trial == 0) first_run = run_timer.seconds();

        const std::set<std::string> unique(st.manifest.selected_ids.begin(), st.manifest.selected_ids.end());
        sizes_ok = sizes_ok && st.manifest.selected_ids.size() == 500 && unique.size() == 500;

        if (trial == 0) {
            const auto first = detail::read_file(config.output_dir / "manifest.json");
            run_selection(config);  // cache hit
            const auto cached = detail::read_file(config.output_dir / "manifest.json");
            auto fresh_cfg = config;
            fresh_cfg.output_dir = config.output_dir.parent_path() / "run_fresh";
            fs::remove_all(fresh_cfg.output_dir);
            run_selection(fresh_cfg);
            const auto fresh = detail::read_file(fresh_cfg.output_dir / "manifest.json");
            rerun_ok = first == cached && first == fresh;
        }

        // Baseline: same clusters and quotas, random sampler inside each cluster.
        auto baseline = st;
        baseline.config.sampler.kind = SamplerKind::random;
        select_budget(baseline, config.budget_ratio);
        const double ours = mmd_squared(st.features.vectors, st.selected, st.sigma);
        const double base = mmd_squared(st.features.vectors, baseline.selected, st.sigma);
        if (ours <= base) ++wins;
        ratios += (trial ? " " : "") + fmt(ours / base);

        // Reported only: uniform draw over the whole dataset.
        const auto global = random_sample(st.features.size(), st.manifest.budget, derive_seed(seed, 0xba5e));
        const double global_mmd = mmd_squared(st.features.vectors, global, st.sigma);
        if (ours <= global_mmd) ++global_wins;
        global_ratios += (trial ? " " : "") + fmt(ours / global_mmd);
    }
    r.seconds = t.seconds();
    r.passed = sizes_ok && rerun_ok && wins >= 8 && first_run < 60.0;
    r.detail = std::string("sizes ") + (sizes_ok ? "ok" : "WRONG") + ", rerun " + (rerun_ok ? "identical" : "DIFFERS") +
               ", wins " + std::to_string(wins) + "/10 (mmd ratio ours/random sampler: " + ratios +
               "); vs uniform global draw " + std::to_string(global_wins) + "/10 (" + global_ratios + "), single run " +
               fmt(first_run) + " s";
    return r;
}

CheckResult check_stage_isolation(const BenchOptions& opts) {
    Timer t;
    CheckResult r{"stage isolation: svd -> pca changes only selected ids", false, {}, 0.0};
    const auto ds = write_synthetic_dataset(opts.work_dir / "isolation", 2000, opts.seed + 100);
    auto svd_cfg = PipelineConfig::load(ds.config);
    svd_cfg.output_dir = ds.dir / "run_svd";
    auto pca_cfg = svd_cfg;
    pca_cfg.output_dir = ds.dir / "run_pca";
    pca_cfg.sampler.kind = SamplerKind::pca;
    fs::remove_all(svd_cfg.output_dir);
    fs::remove_all(pca_cfg.output_dir);
    const auto a = run_selection(svd_cfg);
    const auto b = run_selection(pca_cfg);

    const bool clusters_same = detail::read_file(svd_cfg.output_dir / "clusters.json") ==
                               detail::read_file(pca_cfg.output_dir / "clusters.json");
    const bool quotas_same = detail::read_file(svd_cfg.output_dir / "quotas.csv") ==
                             detail::read_file(pca_cfg.output_dir / "quotas.csv");
    auto strip = [](json j) {
        j.erase("selected_ids");
        j.erase("sampler");
        j.erase("config_digest");
        return j;
    };
    const bool rest_same = strip(a.to_json()) == strip(b.to_json());
    const bool ids_differ = a.selected_ids != b.selected_ids;
    r.seconds = t.seconds();
    r.passed = clusters_same && quotas_same && rest_same;
    r.detail = std::string("clusters.json ") + (clusters_same ? "identical" : "DIFFERS") + ", quotas.csv " +
               (quotas_same ? "identical" : "DIFFERS") + ", other manifest fields " + (rest_same ? "identical" : "DIFFER") +
               ", selected ids " + (ids_differ ? "differ" : "coincide");
    return r;
}

std::vector<CheckResult> run_all(const BenchOptions& opts) {
    using Fn = CheckResult (*)(const BenchOptions&);
    static constexpr Fn checks[] = {check_density,      check_irs, check_transferability, check_quota,
                                    check_greedy_mmd,   check_svd_leverage, check_pca, check_kmeans,
                                    check_end_to_end,   check_stage_isolation};
    std::vector<CheckResult> out;
    for (Fn fn : checks) {
        try {
            out.push_back(fn(opts));
        } catch (const std::exception& e) {
            out.push_back({"(check threw)", false, e.what(), 0.0});
        }
    }
    return out;
}

std::string format_table(const std::vector<CheckResult>& results) {
    std::string out;
    for (const auto& r : results) {
        char secs[32];
        std::snprintf(secs, sizeof(secs), "%7.2fs", r.seconds);
        out += std::string(r.passed ? "PASS  " : "FAIL  ") + secs + "  " + r.name + "\n        " + r.detail + "\n";
    }
    return out;
}

} // namespace coreselect::bench
