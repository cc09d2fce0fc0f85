#include "rlab/studies.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <stdexcept>
#include <thread>

namespace rlab {

EnvConfig env_setting(const std::string& label, double sticky_prob, double noise_sigma) {
    EnvConfig cfg;
    std::string base = label;
    const std::string suffix = "_sticky";
    if (base.size() > suffix.size() &&
        base.compare(base.size() - suffix.size(), suffix.size(), suffix) == 0) {
        cfg.sticky = sticky_prob;
        base = base.substr(0, base.size() - suffix.size());
    }
    const std::string noise_suffix = "_noise";
    if (base.size() > noise_suffix.size() &&
        base.compare(base.size() - noise_suffix.size(), noise_suffix.size(),
                     noise_suffix) == 0) {
        cfg.reward_noise = noise_sigma;
        base = base.substr(0, base.size() - noise_suffix.size());
    }
    if (base != "chain" && base != "gridworld" && base != "sparse_maze")
        throw std::invalid_argument("unknown environment setting: " + label);
    cfg.name = base;
    return cfg;
}

std::vector<std::string> default_env_set() {
    return {"gridworld",   "gridworld_sticky",   "gridworld_noise",
            "gridworld_noise_sticky", "sparse_maze", "sparse_maze_sticky"};
}

uint64_t derive_run_seed(uint64_t root_seed, const std::string& study,
                         const std::string& variant, const std::string& env_label,
                         int64_t capacity, int64_t oldest_age, int seed_index) {
    const std::string key = study + "/" + variant + "/" + env_label + "/cap" +
                            std::to_string(capacity) + "/age" + std::to_string(oldest_age) +
                            "/seed" + std::to_string(seed_index);
    return Rng::mix(root_seed, Rng::hash_label(key));
}

int resolve_workers(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("RLAB_WORKERS")) {
        const int w = std::atoi(env);
        if (w > 0) return w;
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

std::vector<RunResult> run_jobs(const std::vector<StudyJob>& jobs, int workers,
                                const std::function<void(size_t, size_t)>& progress) {
    std::vector<RunResult> results(jobs.size());
    if (jobs.empty()) return results;
    workers = std::min<int>(resolve_workers(workers), static_cast<int>(jobs.size()));
    std::atomic<size_t> next{0};
    std::atomic<size_t> done{0};
    auto worker = [&]() {
        while (true) {
            const size_t i = next.fetch_add(1);
            if (i >= jobs.size()) return;
            const StudyJob& job = jobs[i];
            results[i] = job.dataset != nullptr ? offline_train(*job.dataset, job.spec)
                                                : run_agent(job.spec);
            const size_t d = done.fetch_add(1) + 1;
            if (progress) progress(d, jobs.size());
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
    return results;
}

ScoreTable scores_for(const std::vector<RunResult>& results, const std::string& variant,
                      int64_t capacity, int64_t oldest_age) {
    // Preserve first-seen env order; seeds ordered by seed_index.
    ScoreTable table;
    std::vector<std::vector<std::pair<int, double>>> rows;
    for (const RunResult& r : results) {
        if (r.variant != variant || r.capacity != capacity) continue;
        if (oldest_age >= 0 && r.oldest_age != oldest_age) continue;
        if (r.failed) continue;
        size_t e = 0;
        while (e < table.size() && table[e].env != r.env) ++e;
        if (e == table.size()) {
            table.push_back({r.env, {}});
            rows.emplace_back();
        }
        rows[e].emplace_back(r.seed_index, r.final_score);
    }
    for (size_t e = 0; e < table.size(); ++e) {
        std::sort(rows[e].begin(), rows[e].end());
        for (const auto& [seed, score] : rows[e]) table[e].scores.push_back(score);
    }
    return table;
}

namespace {

struct SpecFactory {
    const StudyParams& p;
    std::string study;

    RunSpec make(const VariantSpec& variant, const std::string& env_label,
                 int64_t capacity, int seed_index) const {
        RunSpec s;
        s.variant = variant;
        s.env = env_setting(env_label, p.sticky_prob, p.noise_sigma);
        s.env_label = env_label;
        s.replay = p.replay;
        s.replay.capacity = capacity;
        if (s.replay.mode == ReplayMode::fixed_oldest) {
            // Keep the configured age; ratio follows from the capacity.
        }
        s.learn = p.learn;
        s.eps = p.eps;
        s.budget = p.budget;
        s.seed_index = seed_index;
        s.study = study;
        const int64_t age_key = s.replay.mode == ReplayMode::fixed_oldest
                                    ? s.replay.oldest_age
                                    : static_cast<int64_t>(s.replay.ratio * 1e6);
        s.rng_seed = derive_run_seed(p.seed_root, study, variant.label(), env_label,
                                     capacity, age_key, seed_index);
        return s;
    }
};

ImprovementStats capacity_improvement(const std::vector<RunResult>& runs,
                                      const std::string& variant, int64_t cap_small,
                                      int64_t cap_large, const StudyParams& p,
                                      uint64_t stat_seed) {
    const ScoreTable base = scores_for(runs, variant, cap_small);
    const ScoreTable big = scores_for(runs, variant, cap_large);
    Rng rng(stat_seed);
    return improvement_stats(base, big, p.resamples, rng, p.score_floor);
}

} // namespace

StudyOutput train_study(const StudyParams& p, const VariantSpec& variant) {
    SpecFactory f{p, "train"};
    std::vector<StudyJob> jobs;
    for (const std::string& env : p.envs)
        for (int seed = 0; seed < p.seeds; ++seed)
            jobs.push_back({f.make(variant, env, p.replay.capacity, seed), nullptr});
    StudyOutput out;
    out.study = "train";
    out.runs = run_jobs(jobs, p.workers);
    return out;
}

StudyOutput additive_study(const StudyParams& p, int nstep_n, bool include_contraction) {
    SpecFactory f{p, "additive"};
    std::vector<VariantSpec> variants;
    variants.push_back(VariantSpec::dqn());
    {
        VariantSpec v;
        v.use_per = true;
        variants.push_back(v);
    }
    {
        VariantSpec v;
        v.use_adam = true;
        variants.push_back(v);
    }
    {
        VariantSpec v;
        v.use_c51 = true;
        variants.push_back(v);
    }
    {
        VariantSpec v;
        v.n = nstep_n;
        variants.push_back(v);
    }
    if (include_contraction) {
        VariantSpec v;
        v.n = nstep_n;
        v.target = TargetKind::contraction_matched;
        variants.push_back(v);
    }
    std::vector<StudyJob> jobs;
    for (const VariantSpec& v : variants)
        for (const std::string& env : p.envs)
            for (int64_t cap : {p.capacity_small, p.capacity_large})
                for (int seed = 0; seed < p.seeds; ++seed)
                    jobs.push_back({f.make(v, env, cap, seed), nullptr});
    StudyOutput out;
    out.study = "additive";
    out.runs = run_jobs(jobs, p.workers);
    for (const VariantSpec& v : variants) {
        ComparisonRow row;
        row.label = v.label();
        row.capacity = p.capacity_large;
        row.ratio = p.replay.ratio;
        row.stats = capacity_improvement(out.runs, v.label(), p.capacity_small,
                                         p.capacity_large, p,
                                         Rng::mix(p.seed_root, Rng::hash_label(v.label())));
        out.summary.push_back(std::move(row));
    }
    return out;
}

StudyOutput ablative_study(const StudyParams& p) {
    SpecFactory f{p, "ablative"};
    std::vector<VariantSpec> variants;
    variants.push_back(VariantSpec::rainbow());
    {
        VariantSpec v = VariantSpec::rainbow();
        v.use_per = false;
        variants.push_back(v);
    }
    {
        VariantSpec v = VariantSpec::rainbow();
        v.use_adam = false;
        variants.push_back(v);
    }
    {
        VariantSpec v = VariantSpec::rainbow();
        v.use_c51 = false;
        variants.push_back(v);
    }
    {
        VariantSpec v = VariantSpec::rainbow();
        v.n = 1;
        variants.push_back(v);
    }
    std::vector<StudyJob> jobs;
    for (const VariantSpec& v : variants)
        for (const std::string& env : p.envs)
            for (int64_t cap : {p.capacity_small, p.capacity_large})
                for (int seed = 0; seed < p.seeds; ++seed)
                    jobs.push_back({f.make(v, env, cap, seed), nullptr});
    StudyOutput out;
    out.study = "ablative";
    out.runs = run_jobs(jobs, p.workers);
    for (const VariantSpec& v : variants) {
        ComparisonRow row;
        row.label = v.label();
        row.capacity = p.capacity_large;
        row.ratio = p.replay.ratio;
        row.stats = capacity_improvement(out.runs, v.label(), p.capacity_small,
                                         p.capacity_large, p,
                                         Rng::mix(p.seed_root, Rng::hash_label(v.label())));
        out.summary.push_back(std::move(row));
    }
    return out;
}

StudyOutput capacity_oldest_grid(const StudyParams& p,
                                 const std::vector<int64_t>& capacities,
                                 const std::vector<int64_t>& oldest_ages,
                                 const VariantSpec& variant, int64_t baseline_capacity,
                                 int64_t baseline_oldest_age, double min_ratio) {
    StudyParams gp = p;
    gp.replay.mode = ReplayMode::fixed_oldest;

    auto cell_ok = [&](int64_t cap, int64_t age) {
        return ratio_from(static_cast<double>(cap), static_cast<double>(age)) >= min_ratio;
    };

    std::vector<StudyJob> jobs;
    std::vector<std::pair<int64_t, int64_t>> cells;
    for (int64_t cap : capacities)
        for (int64_t age : oldest_ages) cells.emplace_back(cap, age);
    if (std::find(cells.begin(), cells.end(),
                  std::make_pair(baseline_capacity, baseline_oldest_age)) == cells.end())
        cells.emplace_back(baseline_capacity, baseline_oldest_age);

    for (const auto& [cap, age] : cells) {
        if (!cell_ok(cap, age)) continue;
        StudyParams cp = gp;
        cp.replay.oldest_age = age;
        SpecFactory cf{cp, "grid"};
        for (const std::string& env : p.envs)
            for (int seed = 0; seed < p.seeds; ++seed)
                jobs.push_back({cf.make(variant, env, cap, seed), nullptr});
    }
    StudyOutput out;
    out.study = "grid";
    out.runs = run_jobs(jobs, p.workers);

    const ScoreTable base =
        scores_for(out.runs, variant.label(), baseline_capacity, baseline_oldest_age);
    for (const auto& [cap, age] : cells) {
        ComparisonRow row;
        row.label = "cap" + std::to_string(cap) + "_age" + std::to_string(age);
        row.capacity = cap;
        row.oldest_age = age;
        row.ratio = ratio_from(static_cast<double>(cap), static_cast<double>(age));
        if (!cell_ok(cap, age)) {
            row.skipped = true;
            out.summary.push_back(std::move(row));
            continue;
        }
        const ScoreTable cell = scores_for(out.runs, variant.label(), cap, age);
        Rng rng(Rng::mix(p.seed_root, Rng::hash_label(row.label)));
        row.stats = improvement_stats(base, cell, p.resamples, rng, p.score_floor);
        out.summary.push_back(std::move(row));
    }
    return out;
}

StudyOutput sticky_study(const StudyParams& p, const std::vector<int>& n_values) {
    SpecFactory f{p, "sticky"};
    std::vector<StudyJob> jobs;
    std::vector<std::string> all_envs;
    for (const std::string& env : p.envs) {
        all_envs.push_back(env);
        all_envs.push_back(env + "_sticky");
    }
    for (int n : n_values) {
        VariantSpec v;
        v.n = n;
        for (const std::string& env : all_envs)
            for (int64_t cap : {p.capacity_small, p.capacity_large})
                for (int seed = 0; seed < p.seeds; ++seed)
                    jobs.push_back({f.make(v, env, cap, seed), nullptr});
    }
    StudyOutput out;
    out.study = "sticky";
    out.runs = run_jobs(jobs, p.workers);
    for (int n : n_values) {
        VariantSpec v;
        v.n = n;
        for (const bool sticky : {false, true}) {
            // Improvement restricted to the plain or sticky halves.
            std::vector<RunResult> filtered;
            for (const RunResult& r : out.runs) {
                const bool is_sticky = r.env.size() > 7 &&
                                       r.env.compare(r.env.size() - 7, 7, "_sticky") == 0;
                if (is_sticky == sticky && r.variant == v.label()) filtered.push_back(r);
            }
            ComparisonRow row;
            row.label = v.label() + (sticky ? "_sticky" : "_plain");
            row.capacity = p.capacity_large;
            row.ratio = p.replay.ratio;
            row.stats = capacity_improvement(filtered, v.label(), p.capacity_small,
                                             p.capacity_large, p,
                                             Rng::mix(p.seed_root, Rng::hash_label(row.label)));
            out.summary.push_back(std::move(row));
        }
    }
    return out;
}

StudyOutput offline_study(const StudyParams& p, const OfflineStudyConfig& cfg) {
    namespace fs = std::filesystem;
    if (!cfg.dataset_dir.empty()) fs::create_directories(cfg.dataset_dir);

    // Behavior runs: one DQN per env setting, logging every transition.
    std::vector<Dataset> datasets(p.envs.size());
    StudyOutput out;
    out.study = "offline";
    {
        std::vector<StudyJob> behavior_jobs;
        SpecFactory f{p, "offline_behavior"};
        for (const std::string& env : p.envs) {
            RunSpec s = f.make(VariantSpec::dqn(), env, p.replay.capacity, 0);
            s.budget.gradient_steps = cfg.behavior_budget;
            behavior_jobs.push_back({s, nullptr});
        }
        // Capture runs sequentially per env but in parallel across envs:
        // run_jobs cannot capture, so do it here with a small pool.
        std::atomic<size_t> next{0};
        std::vector<RunResult> behavior_results(behavior_jobs.size());
        auto worker = [&]() {
            while (true) {
                const size_t i = next.fetch_add(1);
                if (i >= behavior_jobs.size()) return;
                Dataset& ds = datasets[i];
                behavior_results[i] = run_agent(behavior_jobs[i].spec,
                                                [&ds](const Transition& t) {
                                                    ds.transitions.push_back(t);
                                                });
            }
        };
        const int workers = std::min<int>(resolve_workers(p.workers),
                                          static_cast<int>(behavior_jobs.size()));
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
        for (size_t i = 0; i < p.envs.size(); ++i) {
            const EnvConfig ec = env_setting(p.envs[i], p.sticky_prob, p.noise_sigma);
            Rng probe(0);
            auto env = make_env(ec, probe);
            datasets[i].obs_dim = env->obs_dim();
            datasets[i].action_count = env->action_count();
            if (cfg.max_dataset_size > 0 &&
                static_cast<int64_t>(datasets[i].transitions.size()) > cfg.max_dataset_size)
                datasets[i].transitions.resize(static_cast<size_t>(cfg.max_dataset_size));
            if (!cfg.dataset_dir.empty()) {
                const std::string path = cfg.dataset_dir + "/" + p.envs[i] + ".rlds";
                write_dataset_binary(datasets[i], path);
            }
            out.runs.push_back(behavior_results[i]);
        }
    }

    // Offline variants on the frozen datasets.
    std::vector<StudyJob> jobs;
    SpecFactory f{p, "offline"};
    for (int n : cfg.n_values) {
        VariantSpec v;
        v.n = n;
        v.use_adam = cfg.use_adam;
        for (size_t e = 0; e < p.envs.size(); ++e)
            for (int seed = 0; seed < p.seeds; ++seed) {
                RunSpec s = f.make(v, p.envs[e],
                                   static_cast<int64_t>(datasets[e].transitions.size()),
                                   seed);
                jobs.push_back({s, &datasets[e]});
            }
    }
    std::vector<RunResult> offline_runs = run_jobs(jobs, p.workers);
    out.runs.insert(out.runs.end(), offline_runs.begin(), offline_runs.end());

    // Each n compared against the n = 1 offline baseline.
    VariantSpec base_v;
    base_v.n = cfg.n_values.front();
    base_v.use_adam = cfg.use_adam;
    for (int n : cfg.n_values) {
        if (n == cfg.n_values.front()) continue;
        VariantSpec v;
        v.n = n;
        v.use_adam = cfg.use_adam;
        ScoreTable base;
        ScoreTable now;
        // Offline capacities differ per env (dataset sizes), so group by env
        // across all capacities.
        auto collect = [&](const std::string& variant) {
            ScoreTable t;
            std::vector<std::vector<std::pair<int, double>>> rows;
            for (const RunResult& r : offline_runs) {
                if (r.variant != variant || r.failed) continue;
                size_t e = 0;
                while (e < t.size() && t[e].env != r.env) ++e;
                if (e == t.size()) {
                    t.push_back({r.env, {}});
                    rows.emplace_back();
                }
                rows[e].emplace_back(r.seed_index, r.final_score);
            }
            for (size_t e = 0; e < t.size(); ++e) {
                std::sort(rows[e].begin(), rows[e].end());
                for (const auto& [seed, score] : rows[e]) t[e].scores.push_back(score);
            }
            return t;
        };
        base = collect(base_v.label());
        now = collect(v.label());
        ComparisonRow row;
        row.label = v.label() + "_vs_" + base_v.label();
        Rng rng(Rng::mix(p.seed_root, Rng::hash_label(row.label)));
        row.stats = improvement_stats(base, now, p.resamples, rng, p.score_floor);
        out.summary.push_back(std::move(row));
    }
    return out;
}

BootstrapSummary bootstrap_composite(const CellMap& cells, const CompositeStat& stat,
                                     int resamples, Rng& rng) {
    std::vector<double> values;
    values.reserve(static_cast<size_t>(resamples));
    for (int r = 0; r < resamples; ++r) {
        CellDraws draws;
        for (const auto& [name, table] : cells)
            draws[name] = random_resample_draw(table, table, rng);
        bool valid = true;
        const double v = stat(cells, draws, &valid);
        if (valid) values.push_back(v);
    }
    return summarize_bootstrap(std::move(values));
}

double cell_median_improvement(const CellMap& cells, const CellDraws& draws,
                               const std::string& base_cell, const std::string& new_cell,
                               double score_floor, bool* valid) {
    const ScoreTable& base = cells.at(base_cell);
    const ScoreTable& now = cells.at(new_cell);
    // Combine: base indices from the base cell's draw, new indices from the
    // new cell's draw.
    ResampleDraw combined;
    combined.base_idx = draws.at(base_cell).base_idx;
    combined.new_idx = draws.at(new_cell).new_idx;
    return median_improvement_for_draw(base, now, combined, score_floor, valid);
}

} // namespace rlab
