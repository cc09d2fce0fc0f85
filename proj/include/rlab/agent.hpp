#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "rlab/dataset.hpp"
#include "rlab/envs.hpp"
#include "rlab/nstep.hpp"
#include "rlab/optim.hpp"
#include "rlab/qfunction.hpp"
#include "rlab/schedule.hpp"

namespace rlab {

/// Which Rainbow components are switched on. n = 1 means the n-step
/// component is off; target may be swapped for the contraction-matched
/// 1-step control (same gamma^n weight on the bootstrap, one reward).
struct VariantSpec {
    bool use_per = false;
    bool use_adam = false; // otherwise RMSProp
    bool use_c51 = false;
    int n = 1;
    TargetKind target = TargetKind::n_step;

    static VariantSpec dqn() { return VariantSpec{}; }
    static VariantSpec rainbow() {
        VariantSpec v;
        v.use_per = v.use_adam = v.use_c51 = true;
        v.n = 3;
        return v;
    }

    std::string label() const;
};

struct LearnConfig {
    QKind kind = QKind::mlp;
    /// Normally the variant picks Adam or RMSProp; tests and sanity checks
    /// may force a specific optimizer (SGD gives exact tabular backups).
    std::optional<OptKind> optimizer_override;
    int hidden = 64;
    double gamma = 0.99;
    int batch = 32;
    double huber_delta = 1.0;
    int sync_period = 200;
    double lr_adam = 1e-3;
    double lr_rmsprop = 2.5e-3;
    double lr_sgd = 0.1;
    double rms_rho = 0.95;
    double rms_eps = 1e-5;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    int c51_atoms = 51;
    // NaN = derive the support from the environment's known return range.
    double c51_vmin = std::numeric_limits<double>::quiet_NaN();
    double c51_vmax = std::numeric_limits<double>::quiet_NaN();
    double per_alpha = 0.5;
    double per_beta = 0.5;
    double per_floor = 1e-3;
};

struct ReplayConfig {
    ReplayMode mode = ReplayMode::fixed_ratio;
    double ratio = 0.25;
    int64_t capacity = 5000;
    int64_t oldest_age = 1250; // fixed_oldest mode only
    int64_t warmup = -1;       // -1: max(500, 4 * batch)
};

struct EpsilonConfig {
    double eps0 = 1.0;
    double eps_final = 0.05;
    double decay_fraction = 0.1; // fraction of expected env steps
};

struct BudgetConfig {
    int64_t gradient_steps = 40000;
    int64_t eval_every = 800; // gradient steps per evaluation point
    int eval_episodes = 4;
    double final_window = 0.1; // fraction of evaluation points in the final score
};

struct RunSpec {
    VariantSpec variant;
    EnvConfig env;
    ReplayConfig replay;
    LearnConfig learn;
    EpsilonConfig eps;
    BudgetConfig budget;
    uint64_t rng_seed = 1;
    int seed_index = 0;
    std::string study = "train";
    std::string env_label; // canonical env-setting name for reports
};

struct RunResult {
    std::string study;
    std::string variant;
    std::string env;
    int seed_index = 0;
    uint64_t rng_seed = 0;
    int64_t capacity = 0;
    int64_t oldest_age = 0; // target (fixed_oldest) or steady-state rho*N
    double ratio = 0.0;
    std::vector<double> eval_returns;
    double final_score = 0.0;
    int64_t env_steps = 0;
    int64_t gradient_steps = 0;
    int64_t episodes = 0;
    bool failed = false;
    std::string diagnostic;
};

using TransitionSink = std::function<void(const Transition&)>;

/// Optional capture of run internals for oracles and diagnostics.
struct RunProbe {
    std::vector<double> final_params;
};

/// Full act/insert/sample/learn loop under the replay controller; periodic
/// greedy evaluation builds the return series. Deterministic given the spec.
/// Divergence is reported in the result, not thrown. `sink`, when given,
/// receives every inserted transition (dataset capture).
RunResult run_agent(const RunSpec& spec, const TransitionSink& sink = nullptr,
                    RunProbe* probe = nullptr);

/// Offline batch mode: the buffer holds the whole dataset read-only, training
/// samples from it with no environment interaction; evaluation runs greedy
/// episodes against the live environment. The evaluation series starts with
/// the initial network.
RunResult offline_train(const Dataset& dataset, const RunSpec& spec);
RunResult offline_train_file(const std::string& dataset_path, const RunSpec& spec);

/// Return-range support for the categorical head when the config leaves it
/// automatic: [min(0, 1-4*sigma), max(1, 1+4*sigma)].
CategoricalSupport auto_support(const EnvConfig& env, const LearnConfig& learn);

/// Mean undiscounted return of `episodes` greedy episodes on a fresh env.
double evaluate_greedy(const QFunction& qf, const EnvConfig& env_cfg, Rng rng,
                       int episodes);

} // namespace rlab
