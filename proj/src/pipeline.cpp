#include "coreselect/pipeline.hpp"

#include "coreselect/error.hpp"
#include "coreselect/kernel.hpp"
#include "coreselect/parallel.hpp"
#include "coreselect/random.hpp"
#include "text_util.hpp"

#include <Eigen/SVD>
#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>

namespace fs = std::filesystem;
using nlohmann::json;

namespace coreselect {

namespace {

// Stream tags for per-stage seeds derived from the config seed.
constexpr std::uint64_t kClusteringStream = 1;
constexpr std::uint64_t kBandwidthStream = 2;
constexpr std::uint64_t kSamplingStream = 3;

template <class Fn>
auto in_stage(const char* stage, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(stage, e.what());
    }
}

std::string_view to_string(Orientation o) {
    return o == Orientation::higher_gets_more ? "higher_gets_more" : "lower_gets_more";
}

Orientation parse_orientation(std::string_view s) {
    if (s == "higher_gets_more" || s == "higher") return Orientation::higher_gets_more;
    if (s == "lower_gets_more" || s == "lower") return Orientation::lower_gets_more;
    throw ConfigError("unknown orientation '" + std::string(s) + "'");
}

json strategy_to_json(const QuotaStrategy& s) {
    json comps = json::array();
    for (const auto& c : s.components)
        comps.push_back({{"metric", to_string(c.metric)}, {"orientation", to_string(c.orientation)}});
    return {{"name", s.name}, {"components", comps}, {"epsilon", s.epsilon}};
}

QuotaStrategy strategy_from_json(const json& j, double epsilon) {
    if (j.is_number_integer()) return catalog_strategy(j.get<int>(), epsilon);
    if (j.is_string()) return parse_strategy(j.get<std::string>(), epsilon);
    if (!j.is_object()) throw ConfigError("quota_strategy must be a number, string or object");
    QuotaStrategy s;
    s.name = j.value("name", std::string("custom"));
    s.epsilon = j.value("epsilon", epsilon);
    for (const auto& c : j.at("components")) {
        StrategyComponent comp;
        if (c.is_array()) {
            comp.metric = parse_metric(c.at(0).get<std::string>());
            comp.orientation = parse_orientation(c.at(1).get<std::string>());
        } else {
            comp.metric = parse_metric(c.at("metric").get<std::string>());
            comp.orientation = parse_orientation(c.at("orientation").get<std::string>());
        }
        s.components.push_back(comp);
    }
    s.validate();
    return s;
}

json rank_policy_to_json(const RankPolicy& p) {
    if (p.kind == RankPolicy::Kind::fixed) return {{"kind", "fixed"}, {"rank", p.rank}};
    return {{"kind", "energy"}, {"energy", p.energy}};
}

SamplerSpec sampler_from_json(const json& j) {
    SamplerSpec spec;
    if (j.is_string()) {
        spec.kind = parse_sampler(j.get<std::string>());
        return spec;
    }
    if (!j.is_object()) throw ConfigError("sampler must be a string or object");
    spec.kind = parse_sampler(j.at("kind").get<std::string>());
    if (j.contains("sigma") && !j.at("sigma").is_null()) spec.sigma = j.at("sigma").get<double>();
    if (j.contains("rank_policy")) {
        const auto& rp = j.at("rank_policy");
        spec.rank_policy = rp.at("kind").get<std::string>() == "fixed"
                               ? RankPolicy::fixed(rp.at("rank").get<int>())
                               : RankPolicy::energy_fraction(rp.at("energy").get<double>());
    } else if (j.contains("rank")) {
        spec.rank_policy = RankPolicy::fixed(j.at("rank").get<int>());
    } else if (j.contains("energy")) {
        spec.rank_policy = RankPolicy::energy_fraction(j.at("energy").get<double>());
    }
    if (j.contains("feature_space") && !j.at("feature_space").is_null())
        spec.feature_space = j.at("feature_space").get<std::string>();
    return spec;
}

fs::path resolve(const fs::path& base, const std::string& p) {
    fs::path path(p);
    return fs::absolute(path.is_absolute() ? path : base / path).lexically_normal();
}

std::string file_digest(const fs::path& p) { return sha256_hex(detail::read_file(p)); }

RowMatrix to_double(const FeatureSpace& s) { return s.vectors.cast<double>(); }

std::vector<std::string> needed_spaces(const PipelineConfig& c) {
    std::vector<std::string> out = c.cluster_features;
    if (c.text_space) out.push_back(*c.text_space);
    if (c.sampler.feature_space) out.push_back(*c.sampler.feature_space);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::string format_ratio(double r) { return detail::format_double(r); }

} // namespace

std::vector<std::string> feature_variant(int number) {
    switch (number) {
    case 1: return {"last_pool"};
    case 2: return {"last_token"};
    case 3: return {"last_pool", "vte"};
    case 4: return {"last_token", "vte"};
    case 5: return {"lmm"};
    case 6: return {"lmm", "vte"};
    case 7: return {"iqa"};
    case 8: return {"dino", "e5"};
    case 9: return {"iqa", "dino", "e5"};
    default: throw ConfigError("feature variant must be 1..9, got " + std::to_string(number));
    }
}

PipelineConfig PipelineConfig::from_json(const json& doc, const fs::path& base_dir) {
    static const std::set<std::string> known = {
        "spaces", "feature_variant", "cluster_features", "normalization", "meta", "k", "seed",
        "budget_ratio", "quota_strategy", "epsilon", "tau", "tau_filter", "sigma", "sampler",
        "text_space", "kmeans", "workers", "output_dir"};
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");
    for (const auto& [key, _] : doc.items())
        if (!known.count(key)) throw ConfigError("unknown config field '" + key + "'");

    PipelineConfig c;
    try {
        if (doc.contains("cluster_features") && doc.contains("feature_variant"))
            throw ConfigError("give either cluster_features or feature_variant, not both");
        if (doc.contains("cluster_features"))
            c.cluster_features = doc.at("cluster_features").get<std::vector<std::string>>();
        else
            c.cluster_features = feature_variant(doc.value("feature_variant", 6));

        if (doc.contains("spaces"))
            for (const auto& [name, path] : doc.at("spaces").items())
                c.spaces[name] = resolve(base_dir, path.get<std::string>());
        if (doc.contains("normalization"))
            c.normalization = parse_normalization(doc.at("normalization").get<std::string>());
        if (doc.contains("meta") && !doc.at("meta").is_null())
            c.meta_path = resolve(base_dir, doc.at("meta").get<std::string>());
        c.k = doc.value("k", c.k);
        c.seed = doc.value("seed", c.seed);
        c.budget_ratio = doc.value("budget_ratio", c.budget_ratio);
        const double epsilon = doc.value("epsilon", 0.1);
        c.strategy = doc.contains("quota_strategy") ? strategy_from_json(doc.at("quota_strategy"), epsilon)
                                                    : catalog_strategy(8, epsilon);
        c.tau = doc.value("tau", c.tau);
        if (doc.contains("tau_filter")) c.tau_filter = parse_tau_filter(doc.at("tau_filter").get<std::string>());
        if (doc.contains("sigma") && !doc.at("sigma").is_null()) c.sigma = doc.at("sigma").get<double>();
        if (doc.contains("sampler")) c.sampler = sampler_from_json(doc.at("sampler"));
        if (doc.contains("text_space") && !doc.at("text_space").is_null())
            c.text_space = doc.at("text_space").get<std::string>();
        if (doc.contains("kmeans")) {
            const auto& km = doc.at("kmeans");
            c.max_iter = km.value("max_iter", c.max_iter);
            c.tol = km.value("tol", c.tol);
        }
        c.workers = doc.value("workers", c.workers);
        c.output_dir = resolve(base_dir, doc.value("output_dir", std::string("run")));
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }

    // Spaces not listed explicitly default to <base_dir>/<name>.feat.
    for (const auto& name : needed_spaces(c))
        if (!c.spaces.count(name)) c.spaces[name] = resolve(base_dir, name + ".feat");
    return c;
}

PipelineConfig PipelineConfig::load(const fs::path& path) {
    json doc;
    try {
        doc = json::parse(detail::read_file(path));
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return from_json(doc, fs::absolute(path).parent_path());
}

json PipelineConfig::to_json() const {
    json spaces_j = json::object();
    for (const auto& [name, path] : spaces) spaces_j[name] = path.string();
    json sampler_j = {{"kind", coreselect::to_string(sampler.kind)},
                      {"rank_policy", rank_policy_to_json(sampler.rank_policy)},
                      {"sigma", sampler.sigma ? json(*sampler.sigma) : json(nullptr)},
                      {"feature_space", sampler.feature_space ? json(*sampler.feature_space) : json(nullptr)}};
    return {
        {"spaces", spaces_j},
        {"cluster_features", cluster_features},
        {"normalization", coreselect::to_string(normalization)},
        {"meta", meta_path ? json(meta_path->string()) : json(nullptr)},
        {"k", k},
        {"seed", seed},
        {"budget_ratio", budget_ratio},
        {"quota_strategy", strategy_to_json(strategy)},
        {"tau", tau},
        {"tau_filter", coreselect::to_string(tau_filter)},
        {"sigma", sigma ? json(*sigma) : json(nullptr)},
        {"sampler", sampler_j},
        {"text_space", text_space ? json(*text_space) : json(nullptr)},
        {"kmeans", {{"max_iter", max_iter}, {"tol", tol}}},
        {"workers", workers},
        {"output_dir", output_dir.string()},
    };
}

void PipelineConfig::validate() const {
    if (!(budget_ratio > 0.0 && budget_ratio <= 1.0))
        throw ConfigError("budget_ratio must lie in (0, 1], got " + detail::format_double(budget_ratio));
    if (k < 1) throw ConfigError("k must be >= 1");
    if (cluster_features.empty()) throw ConfigError("cluster_features is empty");
    for (const auto& name : needed_spaces(*this)) {
        auto it = spaces.find(name);
        if (it == spaces.end()) throw ConfigError("feature space '" + name + "' has no path");
        if (!fs::exists(it->second))
            throw ConfigError("feature space '" + name + "': file " + it->second.string() + " does not exist");
    }
    strategy.validate();
    if (strategy.uses(Metric::irs) && !meta_path)
        throw ConfigError("quota strategy '" + strategy.name + "' uses irs and needs a meta path");
    if (meta_path && !fs::exists(*meta_path))
        throw ConfigError("meta file " + meta_path->string() + " does not exist");
    if (strategy.uses(Metric::text_transferability) && !text_space)
        throw ConfigError("quota strategy '" + strategy.name + "' uses text_transferability and needs text_space");
    if (!(tau >= -1.0 && tau <= 1.0)) throw ConfigError("tau must lie in [-1, 1]");
    if (sigma && !(*sigma > 0.0)) throw ConfigError("sigma must be positive");
    if (sampler.sigma && !(*sampler.sigma > 0.0)) throw ConfigError("sampler sigma must be positive");
    sampler.rank_policy.validate();
    if (max_iter < 1) throw ConfigError("kmeans.max_iter must be >= 1");
    if (!(tol >= 0.0)) throw ConfigError("kmeans.tol must be >= 0");
}

json SelectionManifest::to_json() const {
    json clusters_j = json::array();
    for (std::size_t c = 0; c < clusters.size(); ++c) {
        const auto& r = clusters[c];
        clusters_j.push_back({{"cluster_id", c},
                              {"size", r.size},
                              {"scores", r.scores},
                              {"score", r.score},
                              {"weight", r.weight},
                              {"quota", r.quota},
                              {"selected", r.selected}});
    }
    return {
        {"tool_version", tool_version},
        {"config_digest", config_digest},
        {"seed", seed},
        {"budget_ratio", budget_ratio},
        {"budget", budget},
        {"n_total", n_total},
        {"quota_strategy", strategy},
        {"sampler", sampler},
        {"sigma", sigma},
        {"clusters", clusters_j},
        {"selected_ids", selected_ids},
    };
}

SelectionManifest SelectionManifest::from_json(const json& j) {
    SelectionManifest m;
    m.tool_version = j.at("tool_version").get<std::string>();
    m.config_digest = j.at("config_digest").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.budget_ratio = j.at("budget_ratio").get<double>();
    m.budget = j.at("budget").get<std::size_t>();
    m.n_total = j.at("n_total").get<std::size_t>();
    m.strategy = j.at("quota_strategy").get<std::string>();
    m.sampler = j.at("sampler").get<std::string>();
    m.sigma = j.at("sigma").get<double>();
    for (const auto& c : j.at("clusters")) {
        ClusterRecord r;
        r.size = c.at("size").get<std::size_t>();
        r.scores = c.at("scores").get<std::map<std::string, double>>();
        r.score = c.at("score").get<double>();
        r.weight = c.at("weight").get<double>();
        r.quota = c.at("quota").get<std::size_t>();
        r.selected = c.at("selected").get<std::size_t>();
        m.clusters.push_back(std::move(r));
    }
    m.selected_ids = j.at("selected_ids").get<std::vector<std::string>>();
    return m;
}

std::size_t budget_for(double ratio, std::size_t n) {
    if (!(ratio > 0.0 && ratio <= 1.0))
        throw ConfigError("budget ratio must lie in (0, 1], got " + detail::format_double(ratio));
    // The small slack keeps ratios like 0.29 * 100 from flooring to 28.
    const auto b = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n) + 1e-9));
    return std::min(b, n);
}

RunState prepare_run(const PipelineConfig& config) {
    in_stage("config", [&] { config.validate(); });

    RunState st;
    st.config = config;

    std::map<std::string, FeatureSpace> loaded;
    in_stage("load", [&] {
        for (const auto& name : needed_spaces(config)) {
            const auto& path = config.spaces.at(name);
            auto space = load_feature_space(path);
            space.name = name;
            st.input_hashes["spaces"][name] = {{"features", file_digest(path)},
                                               {"ids", file_digest(ids_path_for(path))}};
            loaded.emplace(name, std::move(space));
        }
        if (config.meta_path) st.input_hashes["meta"] = file_digest(*config.meta_path);
    });

    in_stage("features", [&] {
        std::vector<FeatureSpace> parts;
        for (const auto& name : config.cluster_features) parts.push_back(loaded.at(name));
        st.features = combine_features(parts, config.normalization);
        for (const auto& [name, space] : loaded)
            if (space.ids != st.features.ids)
                throw InvalidArgument("feature space '" + name + "' ids do not match the clustering space");
    });

    if (config.meta_path) {
        in_stage("load", [&] {
            auto meta = load_sample_meta(*config.meta_path);
            std::unordered_map<std::string, std::size_t> index;
            for (std::size_t i = 0; i < meta.size(); ++i) index.emplace(meta[i].id, i);
            if (meta.size() != st.features.size())
                throw InvalidArgument("id mismatch: metadata has " + std::to_string(meta.size()) +
                                      " rows, feature store has " + std::to_string(st.features.size()));
            st.meta.reserve(meta.size());
            for (const auto& id : st.features.ids) {
                auto it = index.find(id);
                if (it == index.end()) throw InvalidArgument("id mismatch: no metadata for id '" + id + "'");
                st.meta.push_back(meta[it->second]);
            }
        });
    }

    const std::uint64_t cluster_seed = derive_seed(config.seed, kClusteringStream);
    json cluster_key = {{"tool_version", kToolVersion},
                        {"cluster_features", config.cluster_features},
                        {"normalization", to_string(config.normalization)},
                        {"k", config.k},
                        {"seed", cluster_seed},
                        {"max_iter", config.max_iter},
                        {"tol", config.tol}};
    for (const auto& name : config.cluster_features) cluster_key["inputs"][name] = st.input_hashes["spaces"][name];
    st.cluster_digest = sha256_hex(cluster_key.dump());

    in_stage("clustering", [&] {
        const auto cache = config.output_dir / "clusters.json";
        if (fs::exists(cache)) {
            try {
                const auto doc = json::parse(detail::read_file(cache));
                if (doc.at("digest").get<std::string>() == st.cluster_digest) {
                    st.model = cluster_model_from_json(doc.at("model"));
                    st.model.validate(st.features.size());
                    st.model_from_cache = true;
                }
            } catch (const std::exception&) {
                st.model_from_cache = false;
            }
        }
        if (!st.model_from_cache) {
            KMeansOptions opts;
            opts.k = config.k;
            opts.seed = cluster_seed;
            opts.max_iter = config.max_iter;
            opts.tol = config.tol;
            opts.workers = config.workers;
            st.model = kmeans_fit(st.features.vectors, opts);
        }
    });

    in_stage("metrics", [&] {
        st.sigma = config.sigma ? *config.sigma
                                : median_bandwidth(st.features.vectors, derive_seed(config.seed, kBandwidthStream));
        st.scores.push_back(cluster_densities(st.features.vectors, st.model, st.sigma, config.workers));
        st.scores.back().source = "clustering";
        if (!st.meta.empty()) {
            st.scores.push_back(cluster_irs(st.model, st.features.ids, st.meta));
        }
        try {
            auto t = cluster_transferability(st.model.centroids, config.tau, config.tau_filter);
            t.source = "clustering";
            st.scores.push_back(std::move(t));
        } catch (const InvalidArgument&) {
            if (config.strategy.uses(Metric::transferability)) throw;
        }
        if (config.text_space) {
            const RowMatrix text = to_double(loaded.at(*config.text_space));
            try {
                auto t = cluster_transferability(cluster_means(text, st.model), config.tau, config.tau_filter);
                t.metric = Metric::text_transferability;
                t.source = *config.text_space;
                st.scores.push_back(std::move(t));
            } catch (const InvalidArgument&) {
                if (config.strategy.uses(Metric::text_transferability)) throw;
            }
        }
    });

    in_stage("quota", [&] { st.strategy_scores = score_clusters(st.scores, config.strategy); });
    return st;
}

void select_budget(RunState& st, double budget_ratio) {
    const auto& config = st.config;
    const std::size_t n = st.features.size();
    const std::size_t budget = in_stage("quota", [&] {
        const auto b = budget_for(budget_ratio, n);
        if (b == 0)
            throw ConfigError("budget ratio " + detail::format_double(budget_ratio) + " selects 0 of " +
                              std::to_string(n) + " samples");
        return b;
    });
    st.plan = in_stage("quota", [&] { return allocate_quotas(st.strategy_scores, st.model.sizes, budget); });

    RowMatrix sampler_space_storage;
    const RowMatrix* sampler_space = &st.features.vectors;
    double sampler_sigma = st.sigma;
    if (config.sampler.feature_space) {
        in_stage("sampling", [&] {
            auto space = load_feature_space(config.spaces.at(*config.sampler.feature_space));
            if (space.ids != st.features.ids)
                throw InvalidArgument("sampler feature space ids do not match the clustering space");
            sampler_space_storage = to_double(space);
            if (config.sampler.kind == SamplerKind::greedy_mmd && !config.sampler.sigma && !config.sigma)
                sampler_sigma = median_bandwidth(sampler_space_storage, derive_seed(config.seed, kBandwidthStream));
        });
        sampler_space = &sampler_space_storage;
    }

    const auto members = st.model.members();
    const std::uint64_t sampling_seed = derive_seed(config.seed, kSamplingStream);
    st.selected_per_cluster.assign(members.size(), {});
    parallel_for(members.size(), config.workers, [&](std::size_t c) {
        try {
            RowMatrix rows(static_cast<Eigen::Index>(members[c].size()), sampler_space->cols());
            for (std::size_t i = 0; i < members[c].size(); ++i)
                rows.row(static_cast<Eigen::Index>(i)) = sampler_space->row(static_cast<Eigen::Index>(members[c][i]));
            const auto local = sample_cluster(rows, st.plan.quotas[c], config.sampler, sampler_sigma,
                                              derive_seed(sampling_seed, c));
            auto& out = st.selected_per_cluster[c];
            out.reserve(local.size());
            for (std::size_t l : local) out.push_back(members[c][l]);
        } catch (const std::exception& e) {
            throw StageError("sampling", e.what(), static_cast<int>(c));
        }
    });

    st.selected.clear();
    for (const auto& sel : st.selected_per_cluster) st.selected.insert(st.selected.end(), sel.begin(), sel.end());

    // Digest of the resolved config with input files replaced by their content hashes.
    json digest_doc = config.to_json();
    digest_doc.erase("output_dir");
    digest_doc.erase("workers");
    digest_doc.erase("spaces");
    digest_doc["meta"] = st.input_hashes.contains("meta") ? st.input_hashes["meta"] : json(nullptr);
    digest_doc["inputs"] = st.input_hashes.value("spaces", json::object());
    digest_doc["budget_ratio"] = budget_ratio;
    digest_doc["tool_version"] = kToolVersion;

    auto& m = st.manifest;
    m = SelectionManifest{};
    m.config_digest = sha256_hex(digest_doc.dump());
    m.seed = config.seed;
    m.budget_ratio = budget_ratio;
    m.budget = budget;
    m.n_total = n;
    m.strategy = config.strategy.name;
    m.sampler = std::string(to_string(config.sampler.kind));
    m.sigma = st.sigma;
    for (std::size_t row : st.selected) m.selected_ids.push_back(st.features.ids[row]);
    m.clusters.resize(members.size());
    for (std::size_t c = 0; c < members.size(); ++c) {
        auto& r = m.clusters[c];
        r.size = st.model.sizes[c];
        for (const auto& s : st.scores) r.scores[std::string(to_string(s.metric))] = s.values[c];
        r.score = st.strategy_scores[c];
        r.weight = st.plan.weights[c];
        r.quota = st.plan.quotas[c];
        r.selected = st.selected_per_cluster[c].size();
    }
}

std::string quotas_csv(const RunState& st) {
    std::string out = "cluster_id,size,score,weight,quota\n";
    for (std::size_t c = 0; c < st.plan.quotas.size(); ++c) {
        out += std::to_string(c) + ',' + std::to_string(st.model.sizes[c]) + ',' +
               detail::format_double(st.strategy_scores[c]) + ',' + detail::format_double(st.plan.weights[c]) + ',' +
               std::to_string(st.plan.quotas[c]) + '\n';
    }
    return out;
}

std::string metrics_csv(const RunState& st) {
    static constexpr Metric order[] = {Metric::density, Metric::irs, Metric::transferability,
                                       Metric::text_transferability};
    std::string out = "cluster_id,size,density,irs,transferability,text_transferability\n";
    for (std::size_t c = 0; c < st.model.sizes.size(); ++c) {
        out += std::to_string(c) + ',' + std::to_string(st.model.sizes[c]);
        for (Metric m : order) {
            out += ',';
            for (const auto& s : st.scores)
                if (s.metric == m) out += detail::format_double(s.values[c]);
        }
        out += '\n';
    }
    return out;
}

void write_run(const RunState& st, const fs::path& dir) {
    fs::create_directories(dir);
    auto resolved = st.config.to_json();
    resolved["budget_ratio"] = st.manifest.budget_ratio;
    resolved["output_dir"] = fs::absolute(dir).lexically_normal().string();
    detail::write_file(dir / "resolved_config.json", resolved.dump(2) + "\n");
    const json clusters = {{"digest", st.cluster_digest}, {"model", cluster_model_to_json(st.model)}};
    detail::write_file(dir / "clusters.json", clusters.dump() + "\n");
    detail::write_file(dir / "quotas.csv", quotas_csv(st));
    detail::write_file(dir / "manifest.json", st.manifest.to_json().dump(2) + "\n");
}

SelectionManifest run_selection(const PipelineConfig& config) {
    auto st = prepare_run(config);
    select_budget(st, config.budget_ratio);
    in_stage("output", [&] { write_run(st, config.output_dir); });
    return st.manifest;
}

std::vector<SelectionManifest> sweep_ratios(const PipelineConfig& config, const std::vector<double>& ratios) {
    for (double r : ratios)
        if (!(r > 0.0 && r <= 1.0))
            throw StageError("config", "sweep ratio " + detail::format_double(r) + " is outside (0, 1]");
    auto st = prepare_run(config);
    std::vector<SelectionManifest> out;
    for (double r : ratios) {
        select_budget(st, r);
        in_stage("output", [&] { write_run(st, config.output_dir / ("ratio_" + format_ratio(r))); });
        out.push_back(st.manifest);
    }
    in_stage("output", [&] {
        const json clusters = {{"digest", st.cluster_digest}, {"model", cluster_model_to_json(st.model)}};
        detail::write_file(config.output_dir / "clusters.json", clusters.dump() + "\n");
    });
    return out;
}

RunState load_run(const fs::path& dir) {
    const auto cfg_path = dir / "resolved_config.json";
    const auto manifest_path = dir / "manifest.json";
    if (!fs::exists(cfg_path) || !fs::exists(manifest_path))
        throw StageError("report", dir.string() + " is not a run directory (missing resolved_config.json or manifest.json)");
    auto config = PipelineConfig::load(cfg_path);
    config.output_dir = fs::absolute(dir);
    const auto recorded = in_stage("report", [&] {
        return SelectionManifest::from_json(json::parse(detail::read_file(manifest_path)));
    });
    auto st = prepare_run(config);
    select_budget(st, recorded.budget_ratio);
    if (st.manifest.selected_ids != recorded.selected_ids)
        throw StageError("report", "manifest in " + dir.string() + " does not match its inputs; rerun select");
    return st;
}

RowMatrix pca_coordinates(const RowMatrix& X) {
    const Eigen::RowVectorXd mean = X.colwise().mean();
    const Eigen::MatrixXd centered = X.rowwise() - mean;
    Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
    RowMatrix out = RowMatrix::Zero(X.rows(), 2);
    const auto r = std::min<Eigen::Index>(2, svd.matrixV().cols());
    for (Eigen::Index j = 0; j < r; ++j) {
        Eigen::VectorXd v = svd.matrixV().col(j);
        Eigen::Index arg = 0;
        v.cwiseAbs().maxCoeff(&arg);
        if (v(arg) < 0) v = -v;
        out.col(j) = centered * v;
    }
    return out;
}

ReportSummary emit_report(const RunState& st, const fs::path& dir) {
    return in_stage("report", [&] {
        fs::create_directories(dir);
        detail::write_file(dir / "metrics.csv", metrics_csv(st));

        const RowMatrix coords = pca_coordinates(st.features.vectors);
        std::vector<char> flag(st.features.size(), 0);
        for (std::size_t row : st.selected) flag[row] = 1;
        std::string csv = "id,x,y,selected\n";
        for (std::size_t i = 0; i < st.features.size(); ++i) {
            const auto r = static_cast<Eigen::Index>(i);
            csv += st.features.ids[i] + ',' + detail::format_double(coords(r, 0)) + ',' +
                   detail::format_double(coords(r, 1)) + ',' + (flag[i] ? "1" : "0") + '\n';
        }
        detail::write_file(dir / "coordinates.csv", csv);

        ReportSummary summary;
        summary.budget = st.manifest.budget;
        summary.cluster_count = st.model.sizes.size();
        summary.mmd2_selected_vs_full = mmd_squared(st.features.vectors, st.selected, st.sigma);
        const json doc = {
            {"budget", summary.budget},
            {"n_total", st.features.size()},
            {"selected_count", st.selected.size()},
            {"cluster_count", summary.cluster_count},
            {"quota_strategy", strategy_to_json(st.config.strategy)},
            {"sampler", to_string(st.config.sampler.kind)},
            {"sigma", st.sigma},
            {"mmd2_selected_vs_full", summary.mmd2_selected_vs_full},
            {"config_digest", st.manifest.config_digest},
        };
        detail::write_file(dir / "summary.json", doc.dump(2) + "\n");
        return summary;
    });
}

std::string sha256_hex(std::string_view data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw Error("SHA-256 computation failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[md[i] >> 4]);
        out.push_back(hex[md[i] & 0xf]);
    }
    return out;
}

} // namespace coreselect
