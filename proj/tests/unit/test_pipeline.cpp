#include "coreselect/bench.hpp"
#include "coreselect/error.hpp"
#include "coreselect/kernel.hpp"
#include "coreselect/pipeline.hpp"
#include "coreselect/synth.hpp"
#include "helpers.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <fstream>
#include <set>

using namespace coreselect;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

std::size_t line_count(const fs::path& p) {
    const auto s = slurp(p);
    return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

PipelineConfig small_config(const std::string& name, std::size_t n, std::uint64_t seed, int k = 16) {
    const auto dir = testutil::scratch_dir(name);
    const auto ds = bench::write_synthetic_dataset(dir, n, seed);
    auto cfg = PipelineConfig::load(ds.config);
    cfg.k = k;
    return cfg;
}

} // namespace

TEST_CASE("budget: floor with slack") {
    CHECK(budget_for(0.1, 1000) == 100);
    CHECK(budget_for(0.29, 100) == 29);
    CHECK(budget_for(1.0, 7) == 7);
    CHECK(budget_for(0.001, 10) == 0);
    CHECK_THROWS_AS(budget_for(0.0, 10), ConfigError);
    CHECK_THROWS_AS(budget_for(1.5, 10), ConfigError);
}

TEST_CASE("feature variants") {
    CHECK(feature_variant(6) == std::vector<std::string>{"lmm", "vte"});
    CHECK(feature_variant(9).size() == 3);
    CHECK_THROWS(feature_variant(10));
}

TEST_CASE("config: defaults, round trip, unknown keys") {
    const auto dir = testutil::scratch_dir("cfg");
    const auto c = PipelineConfig::from_json(nlohmann::json::object(), dir);
    CHECK(c.cluster_features == feature_variant(6));
    CHECK(c.strategy.name == catalog_strategy(8).name);
    CHECK(c.sampler.kind == SamplerKind::svd);
    CHECK(c.k == 64);
    CHECK(c.spaces.at("lmm") == dir / "lmm.feat");
    const auto back = PipelineConfig::from_json(c.to_json(), "/");
    CHECK(back.to_json() == c.to_json());
    CHECK_THROWS_AS(PipelineConfig::from_json({{"bogus", 1}}, dir), ConfigError);
    CHECK_THROWS_AS(PipelineConfig::from_json({{"feature_variant", 6}, {"cluster_features", {"a"}}}, dir), ConfigError);
}

TEST_CASE("pipeline: size contract, determinism and cache reuse") {
    auto cfg = small_config("pipe_size", 1000, 3);
    const auto a = run_selection(cfg);
    CHECK(a.selected_ids.size() == 100);
    CHECK(std::set<std::string>(a.selected_ids.begin(), a.selected_ids.end()).size() == 100);
    const auto first = slurp(cfg.output_dir / "manifest.json");
    const auto again = run_selection(cfg);
    CHECK(slurp(cfg.output_dir / "manifest.json") == first);

    std::size_t quota_sum = 0;
    for (const auto& c : a.clusters) {
        CHECK(c.quota <= c.size);
        CHECK(c.selected == c.quota);
        quota_sum += c.quota;
    }
    CHECK(quota_sum == 100);

    auto other = cfg;
    other.output_dir = cfg.output_dir.parent_path() / "run_b";
    other.workers = 3;
    CHECK(run_selection(other).selected_ids == a.selected_ids);
}

TEST_CASE("pipeline: full budget returns every id for each sampler") {
    for (auto kind : {SamplerKind::greedy_mmd, SamplerKind::svd, SamplerKind::pca, SamplerKind::random}) {
        auto cfg = small_config("pipe_full", 300, 5, 6);
        cfg.budget_ratio = 1.0;
        cfg.sampler.kind = kind;
        const auto m = run_selection(cfg);
        CHECK(m.selected_ids.size() == 300);
        CHECK(std::set<std::string>(m.selected_ids.begin(), m.selected_ids.end()).size() == 300);
    }
}

TEST_CASE("pipeline: every catalogued strategy runs") {
    auto cfg = small_config("pipe_strat", 400, 9, 8);
    for (int s = 1; s <= 11; ++s) {
        cfg.strategy = catalog_strategy(s);
        cfg.output_dir = cfg.output_dir.parent_path() / ("run_s" + std::to_string(s));
        CHECK(run_selection(cfg).selected_ids.size() == 40);
    }
}

TEST_CASE("sweep: sizes, duplicates, nested greedy prefixes") {
    auto cfg = small_config("pipe_sweep", 1000, 11);
    cfg.sampler.kind = SamplerKind::greedy_mmd;
    const auto ms = sweep_ratios(cfg, {0.05, 0.1, 0.1});
    REQUIRE(ms.size() == 3);
    CHECK(ms[0].selected_ids.size() == 50);
    CHECK(ms[1].selected_ids.size() == 100);
    CHECK(ms[1].to_json() == ms[2].to_json());

    // Per cluster, greedy picks at the smaller budget are a prefix of the larger one.
    auto st = prepare_run(cfg);
    select_budget(st, 0.05);
    const auto small = st.selected_per_cluster;
    select_budget(st, 0.1);
    for (std::size_t c = 0; c < small.size(); ++c) {
        if (small[c].size() > st.selected_per_cluster[c].size()) continue;  // quotas need not grow
        CHECK(std::equal(small[c].begin(), small[c].end(), st.selected_per_cluster[c].begin()));
    }
    CHECK_THROWS_AS(sweep_ratios(cfg, {0.1, 0.0}), StageError);
}

TEST_CASE("report: row counts, selected flags and MMD") {
    auto cfg = small_config("pipe_report", 600, 13, 3);
    run_selection(cfg);
    const auto st = load_run(cfg.output_dir);
    const auto s = emit_report(st, cfg.output_dir);
    CHECK(line_count(cfg.output_dir / "metrics.csv") == 1 + 3);
    CHECK(line_count(cfg.output_dir / "coordinates.csv") == 1 + 600);
    const auto coords = slurp(cfg.output_dir / "coordinates.csv");
    std::size_t flagged = 0;
    for (std::size_t pos = 0; (pos = coords.find(",1\n", pos)) != std::string::npos; ++pos) ++flagged;
    CHECK(flagged == 60);
    CHECK(s.budget == 60);
    CHECK(std::abs(s.mmd2_selected_vs_full -
                   synth::mmd2_oracle(st.features.vectors, st.selected, st.sigma)) < 1e-10);
    const auto summary = nlohmann::json::parse(slurp(cfg.output_dir / "summary.json"));
    CHECK(summary.at("selected_count").get<std::size_t>() == 60);
}

TEST_CASE("pipeline: stage isolation between samplers") {
    auto svd = small_config("pipe_iso", 800, 17);
    auto pca = svd;
    pca.sampler.kind = SamplerKind::pca;
    pca.output_dir = svd.output_dir.parent_path() / "run_pca";
    run_selection(svd);
    run_selection(pca);
    CHECK(slurp(svd.output_dir / "clusters.json") == slurp(pca.output_dir / "clusters.json"));
    CHECK(slurp(svd.output_dir / "quotas.csv") == slurp(pca.output_dir / "quotas.csv"));
}

TEST_CASE("pipeline: errors are tagged with their stage") {
    auto cfg = small_config("pipe_err", 200, 19, 4);

    SUBCASE("metadata id mismatch") {
        auto meta = load_sample_meta(*cfg.meta_path);
        meta.back().id = "stranger";
        write_sample_meta(meta, *cfg.meta_path);
        try {
            prepare_run(cfg);
            FAIL("expected a stage error");
        } catch (const StageError& e) {
            CHECK(e.stage() == "load");
            CHECK(std::string(e.what()).find("id mismatch") != std::string::npos);
        }
    }
    SUBCASE("missing feature file") {
        fs::remove(cfg.spaces.at("vte"));
        try {
            prepare_run(cfg);
            FAIL("expected a stage error");
        } catch (const StageError& e) {
            CHECK(e.stage() == "config");
        }
    }
    SUBCASE("k larger than N") {
        cfg.k = 500;
        try {
            prepare_run(cfg);
            FAIL("expected a stage error");
        } catch (const StageError& e) {
            CHECK(e.stage() == "clustering");
        }
    }
}
