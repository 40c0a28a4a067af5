// coreselect: cluster-based coreset selection from precomputed features.
//
//   coreselect select --config cfg.json [--ratio R] [--sampler S] [--quota-strategy Q] [--seed X] [--out DIR]
//   coreselect report --run DIR
//   coreselect sweep  --config cfg.json --ratios 0.01,0.03,0.1
//   coreselect bench  [--work-dir DIR]
//   coreselect synth  --out DIR [--n 5000] [--seed S]

#include "coreselect/bench.hpp"
#include "coreselect/error.hpp"
#include "coreselect/pipeline.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using namespace coreselect;

namespace {

struct Overrides {
    std::optional<double> ratio;
    std::optional<std::string> sampler;
    std::optional<std::string> strategy;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<unsigned> workers;
};

void add_overrides(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--ratio", o.ratio, "Budget ratio in (0, 1]");
    cmd->add_option("--sampler", o.sampler, "greedy_mmd | svd | pca | random");
    cmd->add_option("--quota-strategy", o.strategy, "Catalogued quota strategy 1..11");
    cmd->add_option("--seed", o.seed, "Global seed");
    cmd->add_option("--out", o.out, "Output directory");
    cmd->add_option("--workers", o.workers, "Worker threads");
}

PipelineConfig resolve_config(const std::string& path, const Overrides& o) {
    auto cfg = PipelineConfig::load(path);
    if (o.ratio) cfg.budget_ratio = *o.ratio;
    if (o.sampler) cfg.sampler.kind = parse_sampler(*o.sampler);
    if (o.strategy) cfg.strategy = parse_strategy(*o.strategy, cfg.strategy.epsilon);
    if (o.seed) cfg.seed = *o.seed;
    if (o.out) cfg.output_dir = fs::absolute(*o.out);
    if (o.workers) cfg.workers = *o.workers;
    return cfg;
}

std::vector<double> parse_ratios(const std::string& text) {
    std::vector<double> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto end = std::min(text.find(',', start), text.size());
        const auto item = text.substr(start, end - start);
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != item.size()) throw ConfigError("bad ratio '" + item + "' in --ratios");
        out.push_back(v);
        start = end + 1;
    }
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cluster-based coreset selection for instruction-tuning data"};
    app.require_subcommand(1);

    std::string config_path;
    Overrides overrides;
    auto* select = app.add_subcommand("select", "Run the full selection pipeline");
    select->add_option("--config", config_path, "Pipeline config (JSON)")->required()->check(CLI::ExistingFile);
    add_overrides(select, overrides);

    std::string run_dir;
    auto* report = app.add_subcommand("report", "Write metrics, 2-D coordinates and a summary for a run");
    report->add_option("--run", run_dir, "Run directory produced by select")->required();

    std::string ratios_text;
    auto* sweep = app.add_subcommand("sweep", "Select at several budget ratios from one clustering");
    sweep->add_option("--config", config_path, "Pipeline config (JSON)")->required()->check(CLI::ExistingFile);
    sweep->add_option("--ratios", ratios_text, "Comma-separated ratios, e.g. 0.01,0.05,0.1")->required();
    add_overrides(sweep, overrides);

    bench::BenchOptions bench_opts;
    std::string work_dir = "bench_work";
    auto* bench_cmd = app.add_subcommand("bench", "Run the oracle suite and print a pass/fail table");
    bench_cmd->add_option("--work-dir", work_dir, "Scratch directory");
    bench_cmd->add_option("--seed", bench_opts.seed, "Base seed");

    std::string synth_out;
    std::size_t synth_n = 5000;
    std::uint64_t synth_seed = 0;
    auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic 5-component dataset with a default config");
    synth_cmd->add_option("--out", synth_out, "Output directory")->required();
    synth_cmd->add_option("--n", synth_n, "Number of samples")->check(CLI::Range(std::size_t{10}, std::size_t{100000000}));
    synth_cmd->add_option("--seed", synth_seed, "Seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*select) {
            const auto cfg = resolve_config(config_path, overrides);
            const auto m = run_selection(cfg);
            std::cout << "selected " << m.selected_ids.size() << " of " << m.n_total << " samples across "
                      << m.clusters.size() << " clusters -> " << (cfg.output_dir / "manifest.json").string() << "\n"
                      << "config digest " << m.config_digest << "\n";
        } else if (*report) {
            const auto st = load_run(run_dir);
            const auto s = emit_report(st, run_dir);
            std::cout << "report for " << s.budget << " selected samples in " << s.cluster_count
                      << " clusters written to " << run_dir << " (MMD^2 selected vs full " << s.mmd2_selected_vs_full
                      << ")\n";
        } else if (*sweep) {
            const auto cfg = resolve_config(config_path, overrides);
            const auto manifests = sweep_ratios(cfg, parse_ratios(ratios_text));
            for (const auto& m : manifests)
                std::cout << "ratio " << m.budget_ratio << ": " << m.selected_ids.size() << " samples\n";
        } else if (*bench_cmd) {
            bench_opts.work_dir = work_dir;
            const auto results = bench::run_all(bench_opts);
            std::cout << bench::format_table(results);
            for (const auto& r : results)
                if (!r.passed) return 1;
        } else if (*synth_cmd) {
            const auto ds = bench::write_synthetic_dataset(synth_out, synth_n, synth_seed);
            std::cout << "wrote " << ds.n << " samples to " << ds.dir.string() << " (config " << ds.config.string()
                      << ")\n";
        }
    } catch (const StageError& e) {
        std::cerr << "error " << e.what() << "\n";
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "error [stage=config] " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error [stage=cli] " << e.what() << "\n";
        return 1;
    }
    return 0;
}
