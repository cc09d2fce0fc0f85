#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rlab/studies.hpp"

namespace rlab {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Flat study configuration behind the plain-text dotted-key format. Every
/// key round-trips: parse(serialize(cfg)) == cfg.
struct StudyConfig {
    // study.*
    std::string kind = "train"; // train|grid|additive|ablate|offline|sticky
    std::vector<std::string> envs = default_env_set();
    int seeds = 20;
    uint64_t seed_root = 1;
    std::string out_dir = "out";
    int resamples = 1000;
    double score_floor = 1e-6;
    int workers = 0; // 0: RLAB_WORKERS env var, else hardware concurrency
    bool include_contraction = false;

    // env.*
    double sticky_prob = 0.25;
    double noise_sigma = 0.5;

    // agent.*
    std::string variant = "dqn"; // dqn|rainbow|custom
    bool use_per = false;
    bool use_adam = false;
    bool use_c51 = false;
    int n = 1;
    std::string target = "n_step"; // n_step|contraction_matched

    // learn.*
    std::string learn_kind = "mlp"; // tabular|linear|mlp
    std::string optimizer = "auto"; // auto|sgd|rmsprop|adam (auto: variant decides)
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
    std::optional<double> c51_vmin; // unset = derive from the env return range
    std::optional<double> c51_vmax;
    double per_alpha = 0.5;
    double per_beta = 0.5;
    double per_floor = 1e-3;

    // replay.*
    std::string replay_mode = "fixed_ratio"; // fixed_ratio|fixed_oldest
    double ratio = 0.25;
    int64_t capacity = 5000;
    int64_t oldest_age = 1250;
    int64_t warmup = -1; // -1: max(500, 4*batch)
    int64_t capacity_small = 5000;
    int64_t capacity_large = 50000;

    // sched.*
    double eps0 = 1.0;
    double eps_final = 0.05;
    double eps_fraction = 0.1;

    // budget.*
    int64_t gradient_steps = 40000;
    int64_t eval_every = 800;
    int eval_episodes = 4;
    double final_window = 0.1;

    // grid.*
    std::vector<int64_t> grid_capacities = {2500, 5000, 25000};
    std::vector<int64_t> grid_oldest_ages = {625, 1250, 2500};
    int64_t grid_baseline_capacity = 5000;
    int64_t grid_baseline_oldest_age = 1250;
    double grid_min_ratio = 0.05;

    // sticky.*
    std::vector<int> sticky_n = {3, 5, 7};

    // offline.*
    std::vector<int> offline_n = {1, 3};
    int64_t behavior_budget = 10000;
    int64_t max_dataset_size = 25000;
    std::string dataset_dir; // empty: <out_dir>/datasets

    bool operator==(const StudyConfig&) const = default;
};

/// Parses a config file of `key = value` lines (# comments, blank lines ok).
StudyConfig parse_config_file(const std::string& path);

/// Applies a single `key=value` override.
void apply_override(StudyConfig& cfg, const std::string& assignment);

/// Every key in a stable order; parse(serialize(cfg)) == cfg.
std::string serialize_config(const StudyConfig& cfg);

/// Range/consistency checks; throws ConfigError naming the offending key.
void validate_config(const StudyConfig& cfg);

/// Lowers to the structures the studies run on.
VariantSpec config_variant(const StudyConfig& cfg);
StudyParams config_params(const StudyConfig& cfg, const std::string& study_kind);

} // namespace rlab
