#include "rlab/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

namespace rlab {

namespace {

std::string fmt_double(double v) {
    if (std::isnan(v)) return "auto";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing characters");
        return d;
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected a number, got '" + v + "'");
    }
}

int64_t parse_int(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        const int64_t i = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing characters");
        return i;
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected an integer, got '" + v + "'");
    }
}

uint64_t parse_uint(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        const uint64_t i = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing characters");
        return i;
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(key + ": expected true/false, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : v) {
        if (c == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else if (!std::isspace(static_cast<unsigned char>(c))) {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

std::string join_list(const std::vector<std::string>& v) {
    std::string out;
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += v[i];
    }
    return out;
}

struct Field {
    std::string key;
    std::function<std::string(const StudyConfig&)> get;
    std::function<void(StudyConfig&, const std::string&)> set;
};

std::vector<Field> field_registry() {
    std::vector<Field> f;
    auto str = [&](const char* key, std::string StudyConfig::* m) {
        f.push_back({key, [m](const StudyConfig& c) { return c.*m; },
                     [m](StudyConfig& c, const std::string& v) { c.*m = v; }});
    };
    auto dbl = [&](const char* key, double StudyConfig::* m) {
        f.push_back({key, [m](const StudyConfig& c) { return fmt_double(c.*m); },
                     [m, key](StudyConfig& c, const std::string& v) {
                         c.*m = parse_double(key, v);
                     }});
    };
    auto odbl = [&](const char* key, std::optional<double> StudyConfig::* m) {
        f.push_back({key,
                     [m](const StudyConfig& c) {
                         return (c.*m).has_value() ? fmt_double(*(c.*m))
                                                   : std::string("auto");
                     },
                     [m, key](StudyConfig& c, const std::string& v) {
                         if (v == "auto")
                             c.*m = std::nullopt;
                         else
                             c.*m = parse_double(key, v);
                     }});
    };
    auto i32 = [&](const char* key, int StudyConfig::* m) {
        f.push_back({key, [m](const StudyConfig& c) { return std::to_string(c.*m); },
                     [m, key](StudyConfig& c, const std::string& v) {
                         c.*m = static_cast<int>(parse_int(key, v));
                     }});
    };
    auto i64 = [&](const char* key, int64_t StudyConfig::* m) {
        f.push_back({key, [m](const StudyConfig& c) { return std::to_string(c.*m); },
                     [m, key](StudyConfig& c, const std::string& v) {
                         c.*m = parse_int(key, v);
                     }});
    };
    auto u64 = [&](const char* key, uint64_t StudyConfig::* m) {
        f.push_back({key, [m](const StudyConfig& c) { return std::to_string(c.*m); },
                     [m, key](StudyConfig& c, const std::string& v) {
                         c.*m = parse_uint(key, v);
                     }});
    };
    auto bln = [&](const char* key, bool StudyConfig::* m) {
        f.push_back({key, [m](const StudyConfig& c) { return c.*m ? "true" : "false"; },
                     [m, key](StudyConfig& c, const std::string& v) {
                         c.*m = parse_bool(key, v);
                     }});
    };
    auto strlist = [&](const char* key, std::vector<std::string> StudyConfig::* m) {
        f.push_back({key, [m](const StudyConfig& c) { return join_list(c.*m); },
                     [m, key](StudyConfig& c, const std::string& v) {
                         if (v == "default6")
                             c.*m = default_env_set();
                         else
                             c.*m = split_list(v);
                     }});
    };
    auto i64list = [&](const char* key, std::vector<int64_t> StudyConfig::* m) {
        f.push_back({key,
                     [m](const StudyConfig& c) {
                         std::string out;
                         for (size_t i = 0; i < (c.*m).size(); ++i) {
                             if (i) out += ',';
                             out += std::to_string((c.*m)[i]);
                         }
                         return out;
                     },
                     [m, key](StudyConfig& c, const std::string& v) {
                         (c.*m).clear();
                         for (const std::string& s : split_list(v))
                             (c.*m).push_back(parse_int(key, s));
                     }});
    };
    auto i32list = [&](const char* key, std::vector<int> StudyConfig::* m) {
        f.push_back({key,
                     [m](const StudyConfig& c) {
                         std::string out;
                         for (size_t i = 0; i < (c.*m).size(); ++i) {
                             if (i) out += ',';
                             out += std::to_string((c.*m)[i]);
                         }
                         return out;
                     },
                     [m, key](StudyConfig& c, const std::string& v) {
                         (c.*m).clear();
                         for (const std::string& s : split_list(v))
                             (c.*m).push_back(static_cast<int>(parse_int(key, s)));
                     }});
    };

    str("study.kind", &StudyConfig::kind);
    strlist("study.envs", &StudyConfig::envs);
    i32("study.seeds", &StudyConfig::seeds);
    u64("study.seed_root", &StudyConfig::seed_root);
    str("study.out_dir", &StudyConfig::out_dir);
    i32("study.resamples", &StudyConfig::resamples);
    dbl("study.score_floor", &StudyConfig::score_floor);
    i32("study.workers", &StudyConfig::workers);
    bln("study.include_contraction", &StudyConfig::include_contraction);
    dbl("env.sticky_prob", &StudyConfig::sticky_prob);
    dbl("env.reward_noise_sigma", &StudyConfig::noise_sigma);
    str("agent.variant", &StudyConfig::variant);
    bln("agent.use_per", &StudyConfig::use_per);
    bln("agent.use_adam", &StudyConfig::use_adam);
    bln("agent.use_c51", &StudyConfig::use_c51);
    i32("agent.n", &StudyConfig::n);
    str("agent.target", &StudyConfig::target);
    str("learn.kind", &StudyConfig::learn_kind);
    str("learn.optimizer", &StudyConfig::optimizer);
    i32("learn.hidden", &StudyConfig::hidden);
    dbl("learn.gamma", &StudyConfig::gamma);
    i32("learn.batch", &StudyConfig::batch);
    dbl("learn.huber_delta", &StudyConfig::huber_delta);
    i32("learn.sync_period", &StudyConfig::sync_period);
    dbl("learn.lr_adam", &StudyConfig::lr_adam);
    dbl("learn.lr_rmsprop", &StudyConfig::lr_rmsprop);
    dbl("learn.lr_sgd", &StudyConfig::lr_sgd);
    dbl("learn.rms_rho", &StudyConfig::rms_rho);
    dbl("learn.rms_eps", &StudyConfig::rms_eps);
    dbl("learn.adam_beta1", &StudyConfig::adam_beta1);
    dbl("learn.adam_beta2", &StudyConfig::adam_beta2);
    dbl("learn.adam_eps", &StudyConfig::adam_eps);
    i32("learn.c51_atoms", &StudyConfig::c51_atoms);
    odbl("learn.c51_vmin", &StudyConfig::c51_vmin);
    odbl("learn.c51_vmax", &StudyConfig::c51_vmax);
    dbl("learn.per_alpha", &StudyConfig::per_alpha);
    dbl("learn.per_beta", &StudyConfig::per_beta);
    dbl("learn.per_floor", &StudyConfig::per_floor);
    str("replay.mode", &StudyConfig::replay_mode);
    dbl("replay.ratio", &StudyConfig::ratio);
    i64("replay.capacity", &StudyConfig::capacity);
    i64("replay.oldest_age", &StudyConfig::oldest_age);
    i64("replay.warmup", &StudyConfig::warmup);
    i64("replay.capacity_small", &StudyConfig::capacity_small);
    i64("replay.capacity_large", &StudyConfig::capacity_large);
    dbl("sched.eps0", &StudyConfig::eps0);
    dbl("sched.eps_final", &StudyConfig::eps_final);
    dbl("sched.eps_fraction", &StudyConfig::eps_fraction);
    i64("budget.gradient_steps", &StudyConfig::gradient_steps);
    i64("budget.eval_every", &StudyConfig::eval_every);
    i32("budget.eval_episodes", &StudyConfig::eval_episodes);
    dbl("budget.final_window", &StudyConfig::final_window);
    i64list("grid.capacities", &StudyConfig::grid_capacities);
    i64list("grid.oldest_ages", &StudyConfig::grid_oldest_ages);
    i64("grid.baseline_capacity", &StudyConfig::grid_baseline_capacity);
    i64("grid.baseline_oldest_age", &StudyConfig::grid_baseline_oldest_age);
    dbl("grid.min_ratio", &StudyConfig::grid_min_ratio);
    i32list("sticky.n_values", &StudyConfig::sticky_n);
    i32list("offline.n_values", &StudyConfig::offline_n);
    i64("offline.behavior_budget", &StudyConfig::behavior_budget);
    i64("offline.max_dataset_size", &StudyConfig::max_dataset_size);
    str("offline.dataset_dir", &StudyConfig::dataset_dir);
    return f;
}

const std::vector<Field>& fields() {
    static const std::vector<Field> f = field_registry();
    return f;
}

void set_key(StudyConfig& cfg, const std::string& key, const std::string& value) {
    for (const Field& f : fields()) {
        if (f.key == key) {
            f.set(cfg, value);
            return;
        }
    }
    throw ConfigError("unknown config key: " + key);
}

std::string trim(const std::string& s) {
    size_t b = 0;
    size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

} // namespace

StudyConfig parse_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file: " + path);
    StudyConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(lineno) +
                              ": expected 'key = value', got '" + line + "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        set_key(cfg, key, value);
    }
    return cfg;
}

void apply_override(StudyConfig& cfg, const std::string& assignment) {
    const size_t eq = assignment.find('=');
    if (eq == std::string::npos)
        throw ConfigError("override must look like key=value, got '" + assignment + "'");
    set_key(cfg, trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

std::string serialize_config(const StudyConfig& cfg) {
    std::ostringstream out;
    for (const Field& f : fields()) out << f.key << " = " << f.get(cfg) << "\n";
    return out.str();
}

void validate_config(const StudyConfig& cfg) {
    auto must = [](bool ok, const std::string& msg) {
        if (!ok) throw ConfigError(msg);
    };
    must(cfg.kind == "train" || cfg.kind == "grid" || cfg.kind == "additive" ||
             cfg.kind == "ablate" || cfg.kind == "offline" || cfg.kind == "sticky",
         "study.kind: must be one of train/grid/additive/ablate/offline/sticky");
    must(!cfg.envs.empty(), "study.envs: must name at least one environment setting");
    for (const std::string& e : cfg.envs)
        env_setting(e, cfg.sticky_prob, cfg.noise_sigma); // throws on bad labels
    must(cfg.seeds >= 1, "study.seeds: must be >= 1");
    must(cfg.resamples >= 1, "study.resamples: must be >= 1");
    must(cfg.score_floor > 0, "study.score_floor: must be > 0");
    must(cfg.workers >= 0, "study.workers: must be >= 0");
    must(cfg.sticky_prob >= 0 && cfg.sticky_prob <= 1,
         "env.sticky_prob: must be in [0, 1]");
    must(cfg.noise_sigma >= 0, "env.reward_noise_sigma: must be >= 0");
    must(cfg.variant == "dqn" || cfg.variant == "rainbow" || cfg.variant == "custom",
         "agent.variant: must be dqn, rainbow or custom");
    must(cfg.n >= 1, "agent.n: must be >= 1");
    must(cfg.target == "n_step" || cfg.target == "contraction_matched",
         "agent.target: must be n_step or contraction_matched");
    must(cfg.learn_kind == "tabular" || cfg.learn_kind == "linear" ||
             cfg.learn_kind == "mlp",
         "learn.kind: must be tabular, linear or mlp");
    must(cfg.optimizer == "auto" || cfg.optimizer == "sgd" || cfg.optimizer == "rmsprop" ||
             cfg.optimizer == "adam",
         "learn.optimizer: must be auto, sgd, rmsprop or adam");
    must(cfg.hidden >= 1, "learn.hidden: must be >= 1");
    must(cfg.gamma >= 0 && cfg.gamma < 1, "learn.gamma: must be in [0, 1)");
    must(cfg.batch >= 1, "learn.batch: must be >= 1");
    must(cfg.huber_delta > 0, "learn.huber_delta: must be > 0");
    must(cfg.sync_period >= 1, "learn.sync_period: must be >= 1");
    must(cfg.lr_adam > 0, "learn.lr_adam: must be > 0");
    must(cfg.lr_rmsprop > 0, "learn.lr_rmsprop: must be > 0");
    must(cfg.lr_sgd > 0, "learn.lr_sgd: must be > 0");
    must(cfg.rms_rho > 0 && cfg.rms_rho < 1, "learn.rms_rho: must be in (0, 1)");
    must(cfg.c51_atoms >= 2, "learn.c51_atoms: must be >= 2");
    must(cfg.per_alpha >= 0, "learn.per_alpha: must be >= 0");
    must(cfg.per_beta >= 0 && cfg.per_beta <= 1, "learn.per_beta: must be in [0, 1]");
    must(cfg.per_floor >= 0, "learn.per_floor: must be >= 0");
    must(cfg.replay_mode == "fixed_ratio" || cfg.replay_mode == "fixed_oldest",
         "replay.mode: must be fixed_ratio or fixed_oldest");
    must(cfg.ratio > 0, "replay.ratio: must be > 0");
    must(cfg.capacity > 1, "replay.capacity: must be > 1");
    must(cfg.oldest_age > 0, "replay.oldest_age: must be > 0");
    must(cfg.capacity_small > 1, "replay.capacity_small: must be > 1");
    must(cfg.capacity_large > cfg.capacity_small,
         "replay.capacity_large: must exceed replay.capacity_small");
    must(cfg.capacity > cfg.n, "replay.capacity: must exceed agent.n");
    must(cfg.eps0 >= 0 && cfg.eps0 <= 1, "sched.eps0: must be in [0, 1]");
    must(cfg.eps_final >= 0 && cfg.eps_final <= 1, "sched.eps_final: must be in [0, 1]");
    must(cfg.eps_fraction > 0 && cfg.eps_fraction <= 1,
         "sched.eps_fraction: must be in (0, 1]");
    must(cfg.gradient_steps >= 0, "budget.gradient_steps: must be >= 0");
    must(cfg.eval_every >= 1, "budget.eval_every: must be >= 1");
    must(cfg.eval_episodes >= 1, "budget.eval_episodes: must be >= 1");
    must(cfg.final_window > 0 && cfg.final_window <= 1,
         "budget.final_window: must be in (0, 1]");
    must(!cfg.grid_capacities.empty(), "grid.capacities: must be non-empty");
    must(!cfg.grid_oldest_ages.empty(), "grid.oldest_ages: must be non-empty");
    for (int64_t c : cfg.grid_capacities)
        must(c > 1, "grid.capacities: entries must be > 1");
    for (int64_t a : cfg.grid_oldest_ages)
        must(a > 0, "grid.oldest_ages: entries must be > 0");
    must(cfg.grid_min_ratio >= 0, "grid.min_ratio: must be >= 0");
    must(!cfg.sticky_n.empty(), "sticky.n_values: must be non-empty");
    for (int n : cfg.sticky_n) must(n >= 1, "sticky.n_values: entries must be >= 1");
    must(cfg.offline_n.size() >= 2, "offline.n_values: need a baseline and a variant");
    for (int n : cfg.offline_n) must(n >= 1, "offline.n_values: entries must be >= 1");
    must(cfg.behavior_budget > 0, "offline.behavior_budget: must be > 0");
    must(cfg.max_dataset_size >= 0, "offline.max_dataset_size: must be >= 0");
}

VariantSpec config_variant(const StudyConfig& cfg) {
    VariantSpec v;
    if (cfg.variant == "dqn") {
        v = VariantSpec::dqn();
    } else if (cfg.variant == "rainbow") {
        v = VariantSpec::rainbow();
    } else {
        v.use_per = cfg.use_per;
        v.use_adam = cfg.use_adam;
        v.use_c51 = cfg.use_c51;
        v.n = cfg.n;
        if (cfg.target == "contraction_matched") v.target = TargetKind::contraction_matched;
    }
    return v;
}

StudyParams config_params(const StudyConfig& cfg, const std::string& study_kind) {
    StudyParams p;
    p.envs = cfg.envs;
    p.seeds = cfg.seeds;
    p.seed_root = cfg.seed_root;
    p.sticky_prob = cfg.sticky_prob;
    p.noise_sigma = cfg.noise_sigma;
    p.capacity_small = cfg.capacity_small;
    p.capacity_large = cfg.capacity_large;
    p.resamples = cfg.resamples;
    p.score_floor = cfg.score_floor;
    p.workers = cfg.workers;

    p.learn.kind = cfg.learn_kind == "tabular"
                       ? QKind::tabular
                       : (cfg.learn_kind == "linear" ? QKind::linear : QKind::mlp);
    if (cfg.optimizer == "sgd") p.learn.optimizer_override = OptKind::sgd;
    else if (cfg.optimizer == "rmsprop") p.learn.optimizer_override = OptKind::rmsprop;
    else if (cfg.optimizer == "adam") p.learn.optimizer_override = OptKind::adam;
    p.learn.hidden = cfg.hidden;
    p.learn.gamma = cfg.gamma;
    p.learn.batch = cfg.batch;
    p.learn.huber_delta = cfg.huber_delta;
    p.learn.sync_period = cfg.sync_period;
    p.learn.lr_adam = cfg.lr_adam;
    p.learn.lr_rmsprop = cfg.lr_rmsprop;
    p.learn.lr_sgd = cfg.lr_sgd;
    p.learn.rms_rho = cfg.rms_rho;
    p.learn.rms_eps = cfg.rms_eps;
    p.learn.adam_beta1 = cfg.adam_beta1;
    p.learn.adam_beta2 = cfg.adam_beta2;
    p.learn.adam_eps = cfg.adam_eps;
    p.learn.c51_atoms = cfg.c51_atoms;
    p.learn.c51_vmin = cfg.c51_vmin.value_or(std::numeric_limits<double>::quiet_NaN());
    p.learn.c51_vmax = cfg.c51_vmax.value_or(std::numeric_limits<double>::quiet_NaN());
    p.learn.per_alpha = cfg.per_alpha;
    p.learn.per_beta = cfg.per_beta;
    p.learn.per_floor = cfg.per_floor;

    p.eps.eps0 = cfg.eps0;
    p.eps.eps_final = cfg.eps_final;
    p.eps.decay_fraction = cfg.eps_fraction;

    p.budget.gradient_steps = cfg.gradient_steps;
    p.budget.eval_every = cfg.eval_every;
    p.budget.eval_episodes = cfg.eval_episodes;
    p.budget.final_window = cfg.final_window;

    p.replay.mode = cfg.replay_mode == "fixed_oldest" ? ReplayMode::fixed_oldest
                                                      : ReplayMode::fixed_ratio;
    p.replay.ratio = cfg.ratio;
    p.replay.capacity = cfg.capacity;
    p.replay.oldest_age = cfg.oldest_age;
    p.replay.warmup = cfg.warmup;
    (void)study_kind;
    return p;
}

} // namespace rlab
