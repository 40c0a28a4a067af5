#include "coreselect/bench.hpp"
#include "coreselect/clustering.hpp"
#include "coreselect/error.hpp"
#include "coreselect/kernel.hpp"
#include "coreselect/metrics.hpp"
#include "coreselect/pipeline.hpp"
#include "coreselect/quota.hpp"
#include "coreselect/samplers.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <nlohmann/json.hpp>

namespace py = pybind11;
using namespace coreselect;

namespace {

RankPolicy make_policy(std::optional<int> rank, double energy) {
    return rank ? RankPolicy::fixed(*rank) : RankPolicy::energy_fraction(energy);
}

PipelineConfig make_config(const std::filesystem::path& config_path, const py::dict& overrides) {
    auto cfg = PipelineConfig::load(config_path);
    for (auto [key, value] : overrides) {
        const auto k = key.cast<std::string>();
        if (k == "budget_ratio") cfg.budget_ratio = value.cast<double>();
        else if (k == "sampler") cfg.sampler.kind = parse_sampler(value.cast<std::string>());
        else if (k == "quota_strategy") cfg.strategy = parse_strategy(value.cast<std::string>(), cfg.strategy.epsilon);
        else if (k == "seed") cfg.seed = value.cast<std::uint64_t>();
        else if (k == "k") cfg.k = value.cast<int>();
        else if (k == "output_dir") cfg.output_dir = std::filesystem::absolute(value.cast<std::string>());
        else if (k == "workers") cfg.workers = value.cast<unsigned>();
        else throw ConfigError("unsupported override '" + k + "'");
    }
    return cfg;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Cluster-based coreset selection";

    py::register_exception<StageError>(m, "StageError", PyExc_RuntimeError);
    py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
    py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

    py::class_<FeatureSpace>(m, "FeatureSpace")
        .def(py::init<>())
        .def(py::init([](std::string name, RowMatrixF vectors, std::vector<std::string> ids) {
                 FeatureSpace s{std::move(name), std::move(vectors), std::move(ids)};
                 s.validate();
                 return s;
             }),
             py::arg("name"), py::arg("vectors"), py::arg("ids"))
        .def_readwrite("name", &FeatureSpace::name)
        .def_readwrite("vectors", &FeatureSpace::vectors)
        .def_readwrite("ids", &FeatureSpace::ids)
        .def("__len__", &FeatureSpace::size);

    m.def("load_feature_space", &load_feature_space, py::arg("path"));
    m.def("write_feature_space", &write_feature_space, py::arg("space"), py::arg("path"));
    m.def(
        "load_sample_meta",
        [](const std::filesystem::path& path) {
            std::vector<std::tuple<std::string, double, double>> out;
            for (const auto& s : load_sample_meta(path)) out.emplace_back(s.id, s.loss_with_q, s.loss_without_q);
            return out;
        },
        py::arg("path"), "Rows of (id, loss_with_q, loss_without_q).");
    m.def(
        "write_sample_meta",
        [](const std::vector<std::tuple<std::string, double, double>>& rows, const std::filesystem::path& path) {
            std::vector<SampleMeta> meta;
            for (const auto& [id, a, b] : rows) meta.push_back({id, a, b});
            write_sample_meta(meta, path);
        },
        py::arg("rows"), py::arg("path"));

    py::class_<ClusterModel>(m, "ClusterModel")
        .def_readonly("k", &ClusterModel::k)
        .def_readonly("centroids", &ClusterModel::centroids)
        .def_readonly("assignments", &ClusterModel::assignments)
        .def_readonly("sizes", &ClusterModel::sizes)
        .def_readonly("inertia", &ClusterModel::inertia)
        .def_readonly("iterations", &ClusterModel::iterations)
        .def_readonly("inertia_trace", &ClusterModel::inertia_trace);

    m.def(
        "kmeans_fit",
        [](const RowMatrix& X, int k, std::uint64_t seed, int max_iter, double tol, unsigned workers) {
            return kmeans_fit(X, {k, seed, max_iter, tol, workers});
        },
        py::arg("X"), py::arg("k"), py::arg("seed") = 0, py::arg("max_iter") = 300, py::arg("tol") = 1e-4,
        py::arg("workers") = 1);

    m.def("median_bandwidth", &median_bandwidth, py::arg("X"), py::arg("seed") = 0);
    m.def(
        "mmd_squared",
        [](const RowMatrix& X, const std::vector<std::size_t>& subset, double sigma) {
            return mmd_squared(X, subset, sigma);
        },
        py::arg("X"), py::arg("subset"), py::arg("sigma"));
    m.def("cluster_density", &cluster_density, py::arg("members"), py::arg("sigma"));
    m.def(
        "cluster_transferability",
        [](const RowMatrix& centroids, double tau, const std::string& filter) {
            return cluster_transferability(centroids, tau, parse_tau_filter(filter)).values;
        },
        py::arg("centroids"), py::arg("tau") = 0.5, py::arg("filter") = "at_most");

    m.def(
        "score_clusters",
        [](const std::map<std::string, std::vector<double>>& metrics, const std::string& strategy, double epsilon) {
            std::vector<ClusterScores> raw;
            for (const auto& [name, values] : metrics) {
                ClusterScores s;
                s.metric = parse_metric(name);
                s.values = values;
                raw.push_back(std::move(s));
            }
            return score_clusters(raw, parse_strategy(strategy, epsilon));
        },
        py::arg("metrics"), py::arg("strategy"), py::arg("epsilon") = 0.1,
        "metrics maps 'density' / 'irs' / 'transferability' / 'text_transferability' to per-cluster values.");
    m.def(
        "allocate_quotas",
        [](const std::vector<double>& scores, const std::vector<std::size_t>& sizes, std::size_t budget) {
            return allocate_quotas(scores, sizes, budget).quotas;
        },
        py::arg("scores"), py::arg("sizes"), py::arg("budget"));

    m.def("greedy_mmd_sample", &greedy_mmd_sample, py::arg("X"), py::arg("quota"), py::arg("sigma"));
    m.def(
        "greedy_mmd_trace",
        [](const RowMatrix& X, std::size_t quota, double sigma) {
            auto t = greedy_mmd_trace(X, quota, sigma);
            return py::make_tuple(t.picks, t.mmd2);
        },
        py::arg("X"), py::arg("quota"), py::arg("sigma"));
    m.def(
        "leverage_scores",
        [](const RowMatrix& X, std::optional<int> rank, double energy) {
            return leverage_scores(X, make_policy(rank, energy));
        },
        py::arg("X"), py::arg("rank") = py::none(), py::arg("energy") = 0.95);
    m.def(
        "svd_leverage_sample",
        [](const RowMatrix& X, std::size_t quota, std::optional<int> rank, double energy) {
            return svd_leverage_sample(X, quota, make_policy(rank, energy));
        },
        py::arg("X"), py::arg("quota"), py::arg("rank") = py::none(), py::arg("energy") = 0.95);
    m.def(
        "pca_energy_sample",
        [](const RowMatrix& X, std::size_t quota, std::optional<int> rank, double energy) {
            return pca_energy_sample(X, quota, make_policy(rank, energy));
        },
        py::arg("X"), py::arg("quota"), py::arg("rank") = py::none(), py::arg("energy") = 0.95);
    m.def("random_sample", &random_sample, py::arg("n"), py::arg("quota"), py::arg("seed"));

    py::class_<SelectionManifest>(m, "Manifest")
        .def_readonly("selected_ids", &SelectionManifest::selected_ids)
        .def_readonly("budget", &SelectionManifest::budget)
        .def_readonly("n_total", &SelectionManifest::n_total)
        .def_readonly("budget_ratio", &SelectionManifest::budget_ratio)
        .def_readonly("config_digest", &SelectionManifest::config_digest)
        .def_readonly("strategy", &SelectionManifest::strategy)
        .def_readonly("sampler", &SelectionManifest::sampler)
        .def_readonly("sigma", &SelectionManifest::sigma)
        .def_property_readonly("quotas",
                               [](const SelectionManifest& s) {
                                   std::vector<std::size_t> q;
                                   for (const auto& c : s.clusters) q.push_back(c.quota);
                                   return q;
                               })
        .def("to_json", [](const SelectionManifest& s) { return s.to_json().dump(); });

    m.def(
        "run_selection",
        [](const std::filesystem::path& config, const py::dict& overrides) {
            return run_selection(make_config(config, overrides));
        },
        py::arg("config"), py::arg("overrides") = py::dict(),
        "Run the full pipeline from a config file. Overrides: budget_ratio, sampler, quota_strategy, seed, k, "
        "output_dir, workers.");
    m.def(
        "sweep",
        [](const std::filesystem::path& config, const std::vector<double>& ratios, const py::dict& overrides) {
            return sweep_ratios(make_config(config, overrides), ratios);
        },
        py::arg("config"), py::arg("ratios"), py::arg("overrides") = py::dict());
    m.def(
        "report",
        [](const std::filesystem::path& run_dir) {
            const auto s = emit_report(load_run(run_dir), run_dir);
            return py::dict(py::arg("budget") = s.budget, py::arg("cluster_count") = s.cluster_count,
                            py::arg("mmd2_selected_vs_full") = s.mmd2_selected_vs_full);
        },
        py::arg("run_dir"));
    m.def(
        "write_synthetic_dataset",
        [](const std::filesystem::path& dir, std::size_t n, std::uint64_t seed) {
            return bench::write_synthetic_dataset(dir, n, seed).config;
        },
        py::arg("dir"), py::arg("n") = 5000, py::arg("seed") = 0, "Returns the path of the generated config.json.");
}
