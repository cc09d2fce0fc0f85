#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "rlab/agent.hpp"
#include "rlab/stats.hpp"

namespace rlab {

/// Canonical environment-setting labels: base names chain | gridworld |
/// gridworld_noise | sparse_maze, each optionally suffixed "_sticky".
EnvConfig env_setting(const std::string& label, double sticky_prob, double noise_sigma);

/// The six desk-scale settings: {gridworld, gridworld_noise, sparse_maze} x
/// {plain, sticky}.
std::vector<std::string> default_env_set();

/// Deterministic per-run seed: mixes the root seed with the run coordinates,
/// so results are independent of scheduling and of which other runs exist.
uint64_t derive_run_seed(uint64_t root_seed, const std::string& study,
                         const std::string& variant, const std::string& env_label,
                         int64_t capacity, int64_t oldest_age, int seed_index);

/// Executes runs on a worker pool; results come back in spec order. Online
/// specs use run_agent; specs with a dataset attached use offline_train.
struct StudyJob {
    RunSpec spec;
    const Dataset* dataset = nullptr; // offline when non-null
};
std::vector<RunResult> run_jobs(const std::vector<StudyJob>& jobs, int workers,
                                const std::function<void(size_t, size_t)>& progress = nullptr);

/// Per-study knobs shared by the builders below.
struct StudyParams {
    std::vector<std::string> envs;           // env-setting labels
    int seeds = 20;
    uint64_t seed_root = 1;
    double sticky_prob = 0.25;
    double noise_sigma = 0.5;
    int64_t capacity_small = 5000;
    int64_t capacity_large = 50000;
    LearnConfig learn;
    EpsilonConfig eps;
    BudgetConfig budget;
    ReplayConfig replay; // base replay settings (mode/ratio/warmup)
    int resamples = 1000;
    double score_floor = 1e-6;
    int workers = 0; // 0: RLAB_WORKERS env var, else hardware concurrency
};

int resolve_workers(int requested);

/// Scores grouped per env (seed-index order) for one (variant, capacity[,
/// oldest_age]) cell of a result set.
ScoreTable scores_for(const std::vector<RunResult>& results, const std::string& variant,
                      int64_t capacity, int64_t oldest_age = -1);

struct ComparisonRow {
    std::string label;        // e.g. component or cell name
    int64_t capacity = 0;     // "new" side capacity (grid: cell capacity)
    int64_t oldest_age = 0;   // grid cells only
    double ratio = 0.0;
    bool skipped = false;     // grid cells below the ratio cutoff
    ImprovementStats stats;
};

struct StudyOutput {
    std::string study;
    std::vector<RunResult> runs;
    std::vector<ComparisonRow> summary;
};

/// Single-variant training runs (one per env setting x seed).
StudyOutput train_study(const StudyParams& p, const VariantSpec& variant);

/// Additive study: DQN plus one component at a time, each at the small and
/// large capacity; summary rows report large-over-small improvement for the
/// base agent and each addition. include_contraction adds the gamma^n
/// 1-step control variant.
StudyOutput additive_study(const StudyParams& p, int nstep_n = 3,
                           bool include_contraction = false);

/// Ablative study: Rainbow minus one component at a time.
StudyOutput ablative_study(const StudyParams& p);

/// Capacity x oldest-age grid under fixed-oldest control; each cell is
/// compared against the baseline cell. Cells whose implied replay ratio
/// falls below min_ratio are skipped (they need too many env steps).
StudyOutput capacity_oldest_grid(const StudyParams& p,
                                 const std::vector<int64_t>& capacities,
                                 const std::vector<int64_t>& oldest_ages,
                                 const VariantSpec& variant, int64_t baseline_capacity,
                                 int64_t baseline_oldest_age, double min_ratio);

/// n-step DQN capacity gains with and without sticky actions, for each n.
/// Env labels must be base (non-sticky) settings; the study runs both the
/// plain and sticky counterpart of each.
StudyOutput sticky_study(const StudyParams& p, const std::vector<int>& n_values);

/// Offline batch study: collect one dataset per env setting with a behavior
/// DQN run, then train offline variants for each n in n_values. Datasets are
/// written under dataset_dir (binary format) and kept.
struct OfflineStudyConfig {
    std::vector<int> n_values = {1, 3};
    int64_t behavior_budget = 10000;
    int64_t max_dataset_size = 0; // 0: keep the full behavior log
    std::string dataset_dir;
    bool use_adam = true; // offline agents use Adam
};
StudyOutput offline_study(const StudyParams& p, const OfflineStudyConfig& cfg);

/// Bootstrap machinery for composite statistics (differences of medians
/// across cells). Cells are keyed by caller-chosen names.
using CellMap = std::map<std::string, ScoreTable>;
using CellDraws = std::map<std::string, ResampleDraw>;
using CompositeStat = std::function<double(const CellMap&, const CellDraws&, bool* valid)>;

BootstrapSummary bootstrap_composite(const CellMap& cells, const CompositeStat& stat,
                                     int resamples, Rng& rng);

/// Median improvement of `new_cell` over `base_cell` under a draw set.
double cell_median_improvement(const CellMap& cells, const CellDraws& draws,
                               const std::string& base_cell, const std::string& new_cell,
                               double score_floor, bool* valid);

} // namespace rlab
