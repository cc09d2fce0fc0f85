#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rlab/config.hpp"
#include "rlab/report.hpp"
#include "rlab/studies.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitDiverged = 3;

struct CliOptions {
    std::string config_path;
    std::vector<std::string> sets;
    std::string out_dir;
    uint64_t seed_root = 0;
    bool seed_root_given = false;
    int workers = -1;
};

rlab::StudyConfig resolve_config(const CliOptions& opts, const std::string& kind) {
    rlab::StudyConfig cfg;
    if (!opts.config_path.empty()) cfg = rlab::parse_config_file(opts.config_path);
    cfg.kind = kind;
    for (const std::string& s : opts.sets) rlab::apply_override(cfg, s);
    if (!opts.out_dir.empty()) cfg.out_dir = opts.out_dir;
    if (opts.seed_root_given) cfg.seed_root = opts.seed_root;
    if (opts.workers >= 0) cfg.workers = opts.workers;
    rlab::validate_config(cfg);
    return cfg;
}

void print_summary(const rlab::StudyOutput& out) {
    for (const rlab::ComparisonRow& row : out.summary) {
        if (row.skipped) {
            std::printf("  %-28s skipped (replay ratio below cutoff)\n", row.label.c_str());
            continue;
        }
        std::printf("  %-28s median %+8.2f%%  [p25 %+8.2f%%, p75 %+8.2f%%]  CI95 [%+.2f%%, %+.2f%%]\n",
                    row.label.c_str(), row.stats.median, row.stats.p25, row.stats.p75,
                    row.stats.boot.ci_lo, row.stats.boot.ci_hi);
        for (const std::string& e : row.stats.excluded_envs)
            std::printf("  %-28s   (env %s excluded: baseline score below floor)\n", "",
                        e.c_str());
    }
}

int finish(const rlab::StudyConfig& cfg, const rlab::StudyOutput& out) {
    rlab::write_study_output(cfg.out_dir, out);
    print_summary(out);
    int failed = 0;
    for (const rlab::RunResult& r : out.runs)
        if (r.failed) ++failed;
    std::printf("%s study: %zu runs (%d failed) -> %s\n", out.study.c_str(),
                out.runs.size(), failed, cfg.out_dir.c_str());
    return failed > 0 ? kExitDiverged : kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"replay-lab: replay-capacity experiments on toy environments"};
    app.require_subcommand(1);
    app.fallthrough();

    CliOptions opts;
    app.add_option("--config", opts.config_path, "config file (key = value lines)");
    app.add_option("--set", opts.sets, "override, e.g. --set replay.ratio=0.5")
        ->take_all();
    app.add_option("--out", opts.out_dir, "output directory (overrides study.out_dir)");
    auto* seed_opt =
        app.add_option("--seed-root", opts.seed_root, "root seed for all derived streams");
    app.add_option("--workers", opts.workers, "worker threads (default: RLAB_WORKERS/cores)");

    auto* cmd_train = app.add_subcommand("train", "run one agent variant per env setting");
    cmd_train->fallthrough();
    auto* cmd_grid = app.add_subcommand("grid", "capacity x oldest-age grid study");
    cmd_grid->fallthrough();
    auto* cmd_additive = app.add_subcommand("additive", "DQN plus one component at a time");
    cmd_additive->fallthrough();
    auto* cmd_ablate = app.add_subcommand("ablate", "Rainbow minus one component at a time");
    cmd_ablate->fallthrough();
    auto* cmd_offline = app.add_subcommand("offline", "offline batch training on a fixed dataset");
    cmd_offline->fallthrough();
    auto* cmd_sticky = app.add_subcommand("sticky", "n-step capacity gains with/without sticky actions");
    cmd_sticky->fallthrough();
    auto* cmd_report = app.add_subcommand("report", "re-emit charts from an output directory");
    cmd_report->fallthrough();
    std::string report_dir = "out";
    cmd_report->add_option("--in", report_dir, "directory with runs.csv/summary.csv/runs.jsonl");

    CLI11_PARSE(app, argc, argv);
    opts.seed_root_given = seed_opt->count() > 0;

    try {
        if (cmd_report->parsed()) {
            rlab::emit_report(report_dir);
            std::printf("report: charts refreshed in %s\n", report_dir.c_str());
            return kExitOk;
        }
        std::string kind = "train";
        if (cmd_grid->parsed()) kind = "grid";
        else if (cmd_additive->parsed()) kind = "additive";
        else if (cmd_ablate->parsed()) kind = "ablate";
        else if (cmd_offline->parsed()) kind = "offline";
        else if (cmd_sticky->parsed()) kind = "sticky";
        else if (cmd_train->parsed()) kind = "train";

        const rlab::StudyConfig cfg = resolve_config(opts, kind);
        const rlab::StudyParams params = rlab::config_params(cfg, kind);

        rlab::StudyOutput out;
        if (kind == "train") {
            out = rlab::train_study(params, rlab::config_variant(cfg));
        } else if (kind == "grid") {
            out = rlab::capacity_oldest_grid(params, cfg.grid_capacities,
                                             cfg.grid_oldest_ages, rlab::config_variant(cfg),
                                             cfg.grid_baseline_capacity,
                                             cfg.grid_baseline_oldest_age, cfg.grid_min_ratio);
        } else if (kind == "additive") {
            out = rlab::additive_study(params, cfg.n > 1 ? cfg.n : 3,
                                       cfg.include_contraction);
        } else if (kind == "ablate") {
            out = rlab::ablative_study(params);
        } else if (kind == "offline") {
            rlab::OfflineStudyConfig ocfg;
            ocfg.n_values = cfg.offline_n;
            ocfg.behavior_budget = cfg.behavior_budget;
            ocfg.max_dataset_size = cfg.max_dataset_size;
            ocfg.dataset_dir =
                cfg.dataset_dir.empty() ? cfg.out_dir + "/datasets" : cfg.dataset_dir;
            out = rlab::offline_study(params, ocfg);
        } else if (kind == "sticky") {
            // Sticky pairs are generated inside the study; strip any sticky
            // suffixes from the configured env list.
            rlab::StudyParams sp = params;
            std::vector<std::string> bases;
            for (const std::string& e : sp.envs) {
                std::string b = e;
                const std::string suffix = "_sticky";
                if (b.size() > suffix.size() &&
                    b.compare(b.size() - suffix.size(), suffix.size(), suffix) == 0)
                    b = b.substr(0, b.size() - suffix.size());
                if (std::find(bases.begin(), bases.end(), b) == bases.end())
                    bases.push_back(b);
            }
            sp.envs = bases;
            out = rlab::sticky_study(sp, cfg.sticky_n);
        }
        return finish(cfg, out);
    } catch (const rlab::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
