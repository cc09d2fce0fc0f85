// Acceptance suite: runs every acceptance criterion and prints one
// PASS/FAIL line per item. Statistical desk-scale replications (criterion 4)
// that end with a confidence interval overlapping zero are reported as
// "NOT REPRODUCED AT THIS SCALE"; they do not affect the exit code, which
// reflects the exact-oracle, controller, learning-sanity and
// reproducibility criteria only.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "rlab/agent.hpp"
#include "rlab/config.hpp"
#include "rlab/dataset.hpp"
#include "rlab/envs.hpp"
#include "rlab/learner.hpp"
#include "rlab/nstep.hpp"
#include "rlab/optim.hpp"
#include "rlab/replay_buffer.hpp"
#include "rlab/report.hpp"
#include "rlab/sampler.hpp"
#include "rlab/schedule.hpp"
#include "rlab/stats.hpp"
#include "rlab/studies.hpp"
#include "rlab/sum_tree.hpp"

using namespace rlab;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int hard_failures = 0;
int soft_failures = 0;

void report(const char* id, bool pass, const std::string& detail, bool hard = true) {
    std::printf("[%s] %-4s %s\n", pass ? "PASS" : (hard ? "FAIL" : "NOT REPRODUCED"), id,
                detail.c_str());
    std::fflush(stdout);
    if (!pass) {
        if (hard)
            ++hard_failures;
        else
            ++soft_failures;
    }
}

double elapsed_s(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

// ---------------------------------------------------------------------------
// Criterion 1: exact oracles.

void criterion_1a_nstep() {
    // Brute-force direct-summation oracle over random episode logs.
    Rng rng(20240101);
    int checked = 0;
    bool ok = true;
    double max_err = 0.0;
    while (checked < 10000) {
        ReplayBuffer buf(64);
        struct Ep {
            std::vector<double> rewards;
            bool terminal;
        };
        std::vector<Ep> eps;
        const int n_eps = 1 + static_cast<int>(rng.uniform_int(3));
        int64_t id = 0;
        std::vector<std::pair<int, int>> origin(64, {-1, -1});
        for (int e = 0; e < n_eps; ++e) {
            Ep ep;
            const int len = 1 + static_cast<int>(rng.uniform_int(7));
            ep.terminal = rng.uniform() < 0.7;
            for (int k = 0; k < len; ++k) ep.rewards.push_back(rng.uniform(-2.0, 2.0));
            for (int k = 0; k < len; ++k) {
                Transition t;
                t.state = Obs::one_hot(3, static_cast<int>(id % 3));
                t.next_state = Obs::one_hot(3, static_cast<int>((id + 1) % 3));
                t.reward = ep.rewards[static_cast<size_t>(k)];
                t.episode_id = e;
                t.env_step = id;
                const bool last = k + 1 == len;
                t.terminal = last && ep.terminal;
                t.truncated = last && !ep.terminal;
                origin[static_cast<size_t>(buf.insert(std::move(t)))] = {e, k};
                ++id;
            }
            eps.push_back(std::move(ep));
        }
        const double gamma = rng.uniform(0.0, 0.999);
        const double boot = rng.uniform(-3.0, 3.0);
        for (int n = 1; n <= 5 && checked < 10000; ++n) {
            const TargetSpec spec{TargetKind::n_step, n, gamma};
            for (int slot : buf.valid_nstep_indices(n)) {
                const auto [e, k] = origin[static_cast<size_t>(slot)];
                const Ep& ep = eps[static_cast<size_t>(e)];
                double expect = 0.0;
                double disc = 1.0;
                int steps = 0;
                for (int i = k; i < static_cast<int>(ep.rewards.size()) && steps < n;
                     ++i, ++steps) {
                    expect += disc * ep.rewards[static_cast<size_t>(i)];
                    disc *= gamma;
                }
                const bool hit_term =
                    ep.terminal && k + steps == static_cast<int>(ep.rewards.size());
                if (!hit_term) expect += disc * boot;
                const double got =
                    target_value(buf, slot, spec, [&](const Obs&) { return boot; });
                max_err = std::max(max_err, std::abs(got - expect));
                ok = ok && got == expect;
                ++checked;
            }
        }
    }
    // Terminal-truncation example: r = [1, 2], gamma = 0.5, n = 3 -> 2.0.
    ReplayBuffer buf(8);
    Transition t1;
    t1.state = Obs::one_hot(2, 0);
    t1.next_state = Obs::one_hot(2, 1);
    t1.reward = 1.0;
    ReplayBuffer* b = &buf;
    b->insert(t1);
    Transition t2 = t1;
    t2.reward = 2.0;
    t2.terminal = true;
    b->insert(t2);
    const double y = target_value(buf, 0, TargetSpec{TargetKind::n_step, 3, 0.5},
                                  [](const Obs&) { return 1e9; });
    ok = ok && y == 2.0;
    report("1a", ok,
           "n-step targets equal brute-force episode summation on 10000 instances "
           "(max abs err " + fmt_value(max_err) + "); terminal case r=[1,2] -> " +
               fmt_value(y));
}

void criterion_1b_sumtree() {
    Rng rng(77001);
    bool find_ok = true;
    int checked = 0;
    while (checked < 10000) {
        const int n = 1 + static_cast<int>(rng.uniform_int(300));
        SumTree t(n);
        std::vector<double> p(static_cast<size_t>(n), 0.0);
        double total = 0.0;
        for (int i = 0; i < n; ++i) {
            const double v = rng.uniform() < 0.25 ? 0.0 : rng.uniform(0.0, 8.0);
            p[static_cast<size_t>(i)] = v;
            t.set(i, v);
            total += v;
        }
        if (total <= 0.0) continue;
        for (int q = 0; q < 50 && checked < 10000; ++q, ++checked) {
            const double u = rng.uniform(0.0, t.total() * 0.999999);
            double c = 0.0;
            int expect = n - 1;
            for (int i = 0; i < n; ++i) {
                c += p[static_cast<size_t>(i)];
                if (u < c) {
                    expect = i;
                    break;
                }
            }
            find_ok = find_ok && t.find(u) == expect;
        }
    }
    // Internal-node invariant after 1e5 random updates.
    SumTree t(1000);
    std::vector<double> p(1000, 0.0);
    for (int i = 0; i < 100000; ++i) {
        const int leaf = static_cast<int>(rng.uniform_int(1000));
        const double v = rng.uniform(0.0, 3.0);
        p[static_cast<size_t>(leaf)] = v;
        t.set(leaf, v);
    }
    double total = 0.0;
    for (double v : p) total += v;
    const double rel = std::abs(t.total() - total) / std::max(1.0, total);
    report("1b", find_ok && rel < 1e-9,
           "sum-tree find equals linear prefix scan on 10000 instances; total after 1e5 "
           "updates within " + fmt_value(rel) + " relative");
}

void criterion_1c_optimizers() {
    bool ok = true;
    std::string detail;
    {
        OptimConfig c;
        c.kind = OptKind::adam;
        c.lr = 0.1;
        Optimizer opt(c, 1);
        std::vector<double> params{0.0};
        opt.step(params, std::vector<double>{1.0});
        const double expect = -0.1 / (1.0 + 1e-8);
        ok = ok && std::abs(params[0] - expect) < 1e-12;
        detail += "adam delta " + fmt_value(params[0]);
    }
    {
        OptimConfig c;
        c.kind = OptKind::sgd;
        c.lr = 0.5;
        Optimizer opt(c, 1);
        std::vector<double> params{1.0};
        opt.step(params, std::vector<double>{2.0});
        ok = ok && std::abs(params[0] - 0.0) < 1e-12;
    }
    {
        OptimConfig c;
        c.kind = OptKind::rmsprop;
        c.lr = 0.01;
        c.rho = 0.95;
        c.rms_eps = 1e-5;
        Optimizer opt(c, 1);
        std::vector<double> params{1.0};
        opt.step(params, std::vector<double>{2.0});
        const double expect = 1.0 - 0.01 * 2.0 / std::sqrt(0.05 * 4.0 + 1e-5);
        ok = ok && std::abs(params[0] - expect) < 1e-12;
    }
    report("1c", ok, "Adam/RMSProp/SGD single-step closed forms match to 1e-12 (" +
                         detail + ")");
}

void criterion_1d_projection() {
    CategoricalSupport sup{0.0, 2.0, 3};
    std::vector<double> out(3);
    bool ok = true;
    c51_project(sup, std::vector<double>{0.2, 0.5, 0.3}, 0.0, 1.0, out);
    ok = ok && out[0] == 0.2 && out[1] == 0.5 && out[2] == 0.3;
    c51_project(sup, std::vector<double>{1.0, 0.0, 0.0}, 1.0, 1.0, out);
    ok = ok && out[0] == 0.0 && out[1] == 1.0 && out[2] == 0.0;
    c51_project(sup, std::vector<double>{1.0, 0.0, 0.0}, 0.5, 1.0, out);
    ok = ok && out[0] == 0.5 && out[1] == 0.5 && out[2] == 0.0;

    Rng rng(5150);
    CategoricalSupport s51{-2.0, 3.0, 51};
    std::vector<double> probs(51), proj(51);
    double worst = 0.0;
    for (int trial = 0; trial < 2000; ++trial) {
        double sum = 0.0;
        for (double& p : probs) {
            p = rng.uniform(0.0, 1.0);
            sum += p;
        }
        for (double& p : probs) p /= sum;
        c51_project(s51, probs, rng.uniform(-4.0, 4.0), rng.uniform(0.0, 1.0), proj);
        double mass = 0.0;
        for (double p : proj) {
            mass += p;
            ok = ok && p >= 0.0;
        }
        worst = std::max(worst, std::abs(mass - 1.0));
    }
    ok = ok && worst < 1e-9;
    report("1d", ok, "C51 projection: identity/atom-hit/split examples exact; mass "
                     "conserved to " + fmt_value(worst) + " over 2000 random cases");
}

void criterion_1e_gradients() {
    bool ok = true;
    double worst = 0.0;
    for (QHead head : {QHead::scalar, QHead::categorical}) {
        for (QKind kind : {QKind::tabular, QKind::linear, QKind::mlp}) {
            QArch arch;
            arch.kind = kind;
            arch.head = head;
            arch.obs_dim = 5;
            arch.hidden = 6;
            arch.actions = 3;
            arch.support = {-1.0, 1.0, 7};
            Rng rng(900 + static_cast<int>(head) * 10 + static_cast<int>(kind));
            for (int draw = 0; draw < 100; ++draw) {
                QFunction qf(arch, rng);
                QWorkspace ws;
                const int B = 3;
                std::vector<Obs> states;
                std::vector<int> actions;
                std::vector<double> weights;
                for (int i = 0; i < B; ++i) {
                    if (kind == QKind::tabular)
                        states.push_back(Obs::one_hot(5, static_cast<int>(rng.uniform_int(5))));
                    else {
                        std::vector<double> v(5);
                        for (double& x : v) x = rng.uniform(-1.0, 1.0);
                        states.push_back(Obs::dense(std::move(v)));
                    }
                    actions.push_back(static_cast<int>(rng.uniform_int(3)));
                    weights.push_back(rng.uniform(0.25, 1.0));
                }
                std::vector<const Obs*> sp;
                for (const Obs& s : states) sp.push_back(&s);
                // Keep ReLU pre-activations off their kink.
                if (kind == QKind::mlp) {
                    for (int pass = 0; pass < 8; ++pass) {
                        bool clean = true;
                        for (const Obs* s : sp) {
                            qf.forward(*s, ws);
                            for (double h : ws.h_pre)
                                if (std::abs(h) < 1e-3) clean = false;
                        }
                        if (clean) break;
                        for (int i = 0; i < arch.hidden; ++i)
                            qf.params()[static_cast<size_t>(arch.hidden * 5 + i)] += 3e-3;
                    }
                }
                std::vector<double> targets;
                std::vector<double> projected;
                if (head == QHead::scalar) {
                    std::vector<double> q;
                    for (int i = 0; i < B; ++i) {
                        qf.q_values(states[static_cast<size_t>(i)], q);
                        double y = q[static_cast<size_t>(actions[static_cast<size_t>(i)])] +
                                   rng.uniform(-0.8, 0.8);
                        const double e =
                            q[static_cast<size_t>(actions[static_cast<size_t>(i)])] - y;
                        if (std::abs(std::abs(e) - 1.0) < 0.05) y += 0.1;
                        targets.push_back(y);
                    }
                } else {
                    for (int i = 0; i < B; ++i) {
                        std::vector<double> m(7);
                        double sum = 0.0;
                        for (double& v : m) {
                            v = rng.uniform(0.0, 1.0);
                            sum += v;
                        }
                        for (double& v : m) projected.push_back(v / sum);
                    }
                }
                auto loss_fn = [&](std::span<double> grad) {
                    std::fill(grad.begin(), grad.end(), 0.0);
                    std::span<double> none;
                    if (head == QHead::scalar)
                        return td_loss_and_grad(qf, sp, actions, targets, weights, 1.0,
                                                grad, none, ws);
                    return c51_loss_and_grad(qf, sp, actions, projected, weights, grad,
                                             none, ws);
                };
                std::vector<double> grad(static_cast<size_t>(qf.param_count()), 0.0);
                loss_fn(grad);
                std::vector<double> scratch(grad.size());
                const double h = 1e-5;
                for (int p = 0; p < qf.param_count(); ++p) {
                    const double saved = qf.params()[static_cast<size_t>(p)];
                    qf.params()[static_cast<size_t>(p)] = saved + h;
                    const double lp = loss_fn(scratch);
                    qf.params()[static_cast<size_t>(p)] = saved - h;
                    const double lm = loss_fn(scratch);
                    qf.params()[static_cast<size_t>(p)] = saved;
                    const double fd = (lp - lm) / (2.0 * h);
                    const double scale = std::max(
                        {std::abs(fd), std::abs(grad[static_cast<size_t>(p)]), 1e-6});
                    worst = std::max(
                        worst, std::abs(fd - grad[static_cast<size_t>(p)]) / scale);
                }
            }
        }
    }
    ok = worst < 1e-4;
    report("1e", ok,
           "gradients match central finite differences over 100 draws per head x "
           "approximator (worst relative error " + fmt_value(worst) + ")");
}

void criterion_1f_statistics() {
    bool ok = true;
    ok = ok && percentile({-50, 0, 50}, 25) == -25.0;
    ok = ok && percentile({-50, 0, 50}, 50) == 0.0;
    ok = ok && percentile({-50, 0, 50}, 75) == 25.0;
    const PercentileSummary one = percentile_summary({3.25});
    ok = ok && one.p25 == 3.25 && one.p50 == 3.25 && one.p75 == 3.25;

    // Exhaustive enumeration oracle (2 seeds x 2 envs).
    const ScoreTable base{{"a", {10, 20}}, {"b", {40, 80}}};
    const ScoreTable now{{"a", {30, 60}}, {"b", {50, 100}}};
    const std::vector<std::vector<int>> pairs{{0, 0}, {0, 1}, {1, 0}, {1, 1}};
    std::vector<double> medians;
    for (const auto& ba : pairs)
        for (const auto& bb : pairs)
            for (const auto& na : pairs)
                for (const auto& nb : pairs) {
                    ResampleDraw d;
                    d.base_idx = {ba, bb};
                    d.new_idx = {na, nb};
                    bool valid = false;
                    medians.push_back(median_improvement_for_draw(base, now, d, 1e-6,
                                                                  &valid));
                    ok = ok && valid;
                }
    const BootstrapSummary enumerated = summarize_bootstrap(medians);
    ok = ok && enumerated.resamples == 256;
    // Spot value: the all-identity draw reproduces the plain median.
    ResampleDraw identity;
    identity.base_idx = {{0, 1}, {0, 1}};
    identity.new_idx = {{0, 1}, {0, 1}};
    bool valid = false;
    const double ident = median_improvement_for_draw(base, now, identity, 1e-6, &valid);
    const RelativeImprovement rel = relative_improvement(now, base);
    std::vector<double> vals;
    for (const auto& [env, v] : rel.per_env) vals.push_back(v);
    ok = ok && valid && ident == percentile(vals, 50);

    // Single seed per side: bootstrap std is exactly zero.
    Rng rng(31);
    const BootstrapSummary single = bootstrap_median({{"a", {10}}, {"b", {20}}},
                                                     {{"a", {12}}, {"b", {26}}}, 128, rng);
    ok = ok && single.stddev == 0.0;
    report("1f", ok,
           "median/percentiles/bootstrap match enumeration oracles exactly; single-seed "
           "bootstrap std = " + fmt_value(single.stddev));
}

// ---------------------------------------------------------------------------
// Criterion 2: controllers.

void criterion_2a_ratio() {
    ReplayControl c = ReplayControl::fixed_ratio(0.25, 0);
    bool ok = true;
    int64_t total = 0;
    for (int64_t step = 1; step <= 100000; ++step) {
        total += c.updates_due(step);
        ok = ok && total == step / 4;
    }
    ok = ok && total == 25000;
    const double rho = ratio_from(1e6, 2.5e5);
    ok = ok && rho == 0.25;
    report("2a", ok,
           "rho=0.25 pays exactly one update per four env steps over 1e5 steps; "
           "ratio_from(1e6, 2.5e5) = " + fmt_value(rho));
}

void criterion_2b_fixed_oldest() {
    const int64_t capacity = 5000;
    const int64_t target = 1250;
    ReplayControl c = ReplayControl::fixed_oldest(target, capacity, 0);
    ReplayBuffer buf(static_cast<int>(capacity));
    int64_t grad = 0;
    int64_t worst = 0;
    for (int64_t step = 0; step < 4 * capacity; ++step) {
        Transition t;
        t.state = Obs::one_hot(2, 0);
        t.next_state = Obs::one_hot(2, 1);
        t.policy_stamp = grad;
        t.env_step = step;
        buf.insert(std::move(t));
        grad += c.updates_due(buf.size());
        if (step > 2 * capacity)
            worst = std::max(worst, std::abs(buf.oldest_policy_age(grad) - target));
    }
    // One controller period (1/rho env steps) corresponds to one gradient
    // step of age, plus the insertion-boundary rounding.
    report("2b", worst <= 2,
           "fixed-oldest (capacity 5000, target 1250): steady-state age within " +
               std::to_string(worst) + " gradient steps of target");
}

void criterion_2c_epsilon_coverage() {
    Rng rng(424242);
    const int64_t n = 2000;
    int64_t randoms = 0;
    for (int64_t i = 0; i < n; ++i)
        if (rng.bernoulli(0.1)) ++randoms;
    const double sigma = std::sqrt(2000 * 0.1 * 0.9);
    const bool ok = std::abs(static_cast<double>(randoms) - 200.0) <= 3.0 * sigma;
    report("2c", ok, "epsilon-greedy coverage: " + std::to_string(randoms) +
                         " random actions among 2000 at eps=0.1 (expected 200 +- " +
                         fmt_value(3.0 * sigma) + ")");
}

// ---------------------------------------------------------------------------
// Criterion 3: learning sanity.

RunSpec sanity_spec(const std::string& env, int64_t budget) {
    RunSpec s;
    s.variant = VariantSpec::dqn();
    s.env = env_setting(env, 0.0, 0.0);
    s.env_label = env;
    s.learn.kind = QKind::tabular;
    s.learn.gamma = 0.95;
    s.learn.batch = 1;
    s.learn.sync_period = 1;
    s.learn.optimizer_override = OptKind::sgd;
    s.learn.lr_sgd = 1.0; // every update is an exact Bellman backup
    s.eps.eps0 = 1.0;
    s.eps.eps_final = 1.0;
    s.replay.ratio = 4.0;
    s.replay.capacity = 20000;
    s.replay.warmup = 64;
    s.budget.gradient_steps = budget;
    s.budget.eval_every = budget;
    s.budget.eval_episodes = 1;
    s.rng_seed = 1234;
    s.study = "acceptance";
    return s;
}

void criterion_3_sanity(const std::string& env, int64_t budget, const char* id) {
    RunSpec s = sanity_spec(env, budget);
    RunProbe probe;
    const RunResult r = run_agent(s, nullptr, &probe);
    if (r.failed) {
        report(id, false, env + " sanity run failed: " + r.diagnostic);
        return;
    }
    Rng er(1);
    auto e = make_env(s.env, er);
    const EnvModel m = e->model();
    const std::vector<double> q_star = value_iteration(m, s.learn.gamma);
    const std::vector<char> reach = reachable_states(m);
    // The learned table lives in the captured parameters.
    QArch arch;
    arch.kind = QKind::tabular;
    arch.obs_dim = m.states;
    arch.actions = m.actions;
    QFunction qf(arch);
    qf.params() = probe.final_params;
    double max_err = 0.0;
    std::vector<double> q;
    for (int st = 0; st < m.states; ++st) {
        if (!reach[static_cast<size_t>(st)] || m.terminal[static_cast<size_t>(st)]) continue;
        qf.q_values(Obs::one_hot(m.states, st), q);
        for (int a = 0; a < m.actions; ++a)
            max_err = std::max(max_err,
                               std::abs(q[static_cast<size_t>(a)] -
                                        q_star[static_cast<size_t>(st * m.actions + a)]));
    }
    // Greedy policy from the learned table, judged on the model.
    std::vector<double> learned(static_cast<size_t>(m.states) * m.actions, 0.0);
    for (int st = 0; st < m.states; ++st) {
        qf.q_values(Obs::one_hot(m.states, st), q);
        for (int a = 0; a < m.actions; ++a)
            learned[static_cast<size_t>(st * m.actions + a)] = q[static_cast<size_t>(a)];
    }
    const double got = greedy_rollout_return(m, learned, e->episode_cap());
    const double optimal = greedy_rollout_return(m, q_star, e->episode_cap());
    const bool ok = max_err < 1e-6 && got == optimal;
    report(id, ok, env + ": tabular Q-learning vs value iteration, max |dQ| = " +
                       fmt_value(max_err) + "; greedy return " + fmt_value(got) +
                       " (optimal " + fmt_value(optimal) + ")");
}

// ---------------------------------------------------------------------------
// Criterion 4: desk-scale directional replications.

struct AcceptParams {
    int seeds = 20;
    uint64_t seed_root = 20240810;
    int resamples = 2000;
    std::string out_dir = "acceptance_out";
    int workers = 0;
    int64_t budget = 40000;
};

StudyParams study_params(const AcceptParams& ap) {
    StudyParams p;
    p.envs = default_env_set();
    p.seeds = ap.seeds;
    p.seed_root = ap.seed_root;
    p.capacity_small = 2000;
    p.capacity_large = 20000;
    p.eps.eps_final = 0.1;
    p.budget.gradient_steps = ap.budget;
    p.resamples = ap.resamples;
    p.workers = ap.workers;
    return p;
}

ScoreTable cell_scores(const std::vector<RunResult>& runs, const std::string& variant,
                       int64_t capacity, const std::vector<std::string>& envs) {
    ScoreTable t;
    for (const std::string& env : envs) {
        EnvScores es;
        es.env = env;
        std::vector<std::pair<int, double>> rows;
        for (const RunResult& r : runs)
            if (r.variant == variant && r.capacity == capacity && r.env == env && !r.failed)
                rows.emplace_back(r.seed_index, r.final_score);
        std::sort(rows.begin(), rows.end());
        for (const auto& [seed, score] : rows) es.scores.push_back(score);
        if (!es.scores.empty()) t.push_back(std::move(es));
    }
    return t;
}

struct GainCI {
    double median = 0.0;
    BootstrapSummary boot;
    int envs_used = 0;
};

/// Median capacity improvement of a variant plus its bootstrap CI.
GainCI capacity_gain(const std::vector<RunResult>& runs, const std::string& variant,
                     int64_t cap_small, int64_t cap_large,
                     const std::vector<std::string>& envs, int resamples, uint64_t seed) {
    GainCI g;
    const ScoreTable base = cell_scores(runs, variant, cap_small, envs);
    const ScoreTable big = cell_scores(runs, variant, cap_large, envs);
    Rng rng(seed);
    const ImprovementStats s = improvement_stats(base, big, resamples, rng);
    g.median = s.median;
    g.boot = s.boot;
    g.envs_used = static_cast<int>(s.per_env.size());
    return g;
}

/// Bootstrap CI of the difference of two variants' median capacity gains.
BootstrapSummary gain_difference(const std::vector<RunResult>& runs,
                                 const std::string& variant_a,
                                 const std::string& variant_b, int64_t cap_small,
                                 int64_t cap_large, const std::vector<std::string>& envs_a,
                                 const std::vector<std::string>& envs_b, int resamples,
                                 uint64_t seed) {
    CellMap cells;
    cells["a_small"] = cell_scores(runs, variant_a, cap_small, envs_a);
    cells["a_large"] = cell_scores(runs, variant_a, cap_large, envs_a);
    cells["b_small"] = cell_scores(runs, variant_b, cap_small, envs_b);
    cells["b_large"] = cell_scores(runs, variant_b, cap_large, envs_b);
    Rng rng(seed);
    return bootstrap_composite(
        cells,
        [](const CellMap& c, const CellDraws& d, bool* valid) {
            bool va = false, vb = false;
            const double ga = cell_median_improvement(c, d, "a_small", "a_large", 1e-6, &va);
            const double gb = cell_median_improvement(c, d, "b_small", "b_large", 1e-6, &vb);
            *valid = va && vb;
            return ga - gb;
        },
        resamples, rng);
}

std::string ci_str(const BootstrapSummary& b) {
    return "CI95 [" + fmt_value(b.ci_lo) + "%, " + fmt_value(b.ci_hi) + "%]";
}

void criterion_4(const AcceptParams& ap) {
    const StudyParams p = study_params(ap);
    const std::vector<std::string> envs = p.envs;

    // --- 4a + 4c: additive study with the contraction-matched control.
    std::printf("... running additive study (criteria 4a, 4c)\n");
    std::fflush(stdout);
    auto t0 = Clock::now();
    StudyOutput additive = additive_study(p, 3, /*include_contraction=*/true);
    write_study_output(ap.out_dir + "/additive", additive);
    std::printf("    additive: %zu runs in %.0f s\n", additive.runs.size(), elapsed_s(t0));

    {
        const GainCI n3 = capacity_gain(additive.runs, "dqn+n3", p.capacity_small,
                                        p.capacity_large, envs, ap.resamples, 11);
        const GainCI dqn = capacity_gain(additive.runs, "dqn", p.capacity_small,
                                         p.capacity_large, envs, ap.resamples, 12);
        const BootstrapSummary diff =
            gain_difference(additive.runs, "dqn+n3", "dqn", p.capacity_small,
                            p.capacity_large, envs, envs, ap.resamples, 13);
        const bool n3_up = n3.boot.ci_lo > 0.0;
        const bool delta_up = diff.ci_lo > 0.0;
        report("4a", n3_up && delta_up,
               "DQN+n3 capacity gain median " + fmt_value(n3.median) + "% " +
                   ci_str(n3.boot) + " over " + std::to_string(n3.envs_used) +
                   " envs; DQN median " + fmt_value(dqn.median) + "%; delta " +
                   ci_str(diff),
               /*hard=*/false);
    }
    {
        const GainCI g = capacity_gain(additive.runs, "dqn+gamma3", p.capacity_small,
                                       p.capacity_large, envs, ap.resamples, 14);
        // "No capacity gain": the CI must not sit strictly above zero.
        const bool ok = !(g.boot.ci_lo > 0.0);
        report("4c", ok,
               "contraction-matched gamma^3 1-step capacity gain median " +
                   fmt_value(g.median) + "% " + ci_str(g.boot) +
                   " (must not be significantly positive)",
               /*hard=*/false);
    }

    // --- 4b: ablative study.
    std::printf("... running ablative study (criterion 4b)\n");
    std::fflush(stdout);
    t0 = Clock::now();
    StudyOutput ablative = ablative_study(p);
    write_study_output(ap.out_dir + "/ablative", ablative);
    std::printf("    ablative: %zu runs in %.0f s\n", ablative.runs.size(), elapsed_s(t0));
    {
        const GainCI no_nstep = capacity_gain(ablative.runs, "rainbow-nstep",
                                              p.capacity_small, p.capacity_large, envs,
                                              ap.resamples, 21);
        const GainCI no_per = capacity_gain(ablative.runs, "rainbow-per", p.capacity_small,
                                            p.capacity_large, envs, ap.resamples, 22);
        const GainCI no_adam = capacity_gain(ablative.runs, "rainbow-adam",
                                             p.capacity_small, p.capacity_large, envs,
                                             ap.resamples, 23);
        const GainCI no_c51 = capacity_gain(ablative.runs, "rainbow-c51", p.capacity_small,
                                            p.capacity_large, envs, ap.resamples, 24);
        const bool ok = !(no_nstep.boot.ci_lo > 0.0) && no_per.boot.ci_lo > 0.0 &&
                        no_adam.boot.ci_lo > 0.0 && no_c51.boot.ci_lo > 0.0;
        report("4b", ok,
               "rainbow-nstep gain " + fmt_value(no_nstep.median) + "% " +
                   ci_str(no_nstep.boot) + " (must not be positive); -per " +
                   fmt_value(no_per.median) + "% " + ci_str(no_per.boot) + "; -adam " +
                   fmt_value(no_adam.median) + "% " + ci_str(no_adam.boot) + "; -c51 " +
                   fmt_value(no_c51.median) + "% " + ci_str(no_c51.boot),
               /*hard=*/false);
    }

    // --- 4d: sticky-action variance study over n in {3, 5, 7}.
    std::printf("... running sticky study (criterion 4d)\n");
    std::fflush(stdout);
    t0 = Clock::now();
    StudyParams sp = p;
    sp.envs = {"gridworld", "gridworld_noise", "sparse_maze"};
    StudyOutput sticky = sticky_study(sp, {3, 5, 7});
    write_study_output(ap.out_dir + "/sticky", sticky);
    std::printf("    sticky: %zu runs in %.0f s\n", sticky.runs.size(), elapsed_s(t0));
    {
        const std::vector<std::string> plain = sp.envs;
        std::vector<std::string> stick;
        for (const std::string& e : plain) stick.push_back(e + "_sticky");
        bool all_gaps_positive = true;
        std::string detail;
        std::map<int, BootstrapSummary> gap;
        for (int n : {3, 5, 7}) {
            const std::string v = "dqn+n" + std::to_string(n);
            gap[n] = gain_difference(sticky.runs, v, v, p.capacity_small, p.capacity_large,
                                     stick, plain, ap.resamples, 30 + n);
            all_gaps_positive = all_gaps_positive && gap[n].ci_lo > 0.0;
            detail += "n=" + std::to_string(n) + " gap mean " + fmt_value(gap[n].mean) +
                      "% " + ci_str(gap[n]) + "; ";
        }
        // Gap growth: sticky-minus-plain difference at n=7 exceeds n=3.
        CellMap cells;
        for (int n : {3, 7}) {
            const std::string v = "dqn+n" + std::to_string(n);
            cells["s_small_" + std::to_string(n)] =
                cell_scores(sticky.runs, v, p.capacity_small, stick);
            cells["s_large_" + std::to_string(n)] =
                cell_scores(sticky.runs, v, p.capacity_large, stick);
            cells["p_small_" + std::to_string(n)] =
                cell_scores(sticky.runs, v, p.capacity_small, plain);
            cells["p_large_" + std::to_string(n)] =
                cell_scores(sticky.runs, v, p.capacity_large, plain);
        }
        Rng rng(39);
        const BootstrapSummary growth = bootstrap_composite(
            cells,
            [](const CellMap& c, const CellDraws& d, bool* valid) {
                bool v1 = false, v2 = false, v3 = false, v4 = false;
                const double g7s = cell_median_improvement(c, d, "s_small_7", "s_large_7",
                                                           1e-6, &v1);
                const double g7p = cell_median_improvement(c, d, "p_small_7", "p_large_7",
                                                           1e-6, &v2);
                const double g3s = cell_median_improvement(c, d, "s_small_3", "s_large_3",
                                                           1e-6, &v3);
                const double g3p = cell_median_improvement(c, d, "p_small_3", "p_large_3",
                                                           1e-6, &v4);
                *valid = v1 && v2 && v3 && v4;
                return (g7s - g7p) - (g3s - g3p);
            },
            ap.resamples, rng);
        const bool ok = all_gaps_positive && growth.ci_lo > 0.0;
        report("4d", ok,
               detail + "gap growth n=7 vs n=3 mean " + fmt_value(growth.mean) + "% " +
                   ci_str(growth),
               /*hard=*/false);
    }

    // --- 4e: offline batch study.
    std::printf("... running offline study (criterion 4e)\n");
    std::fflush(stdout);
    t0 = Clock::now();
    OfflineStudyConfig ocfg;
    ocfg.n_values = {1, 3};
    ocfg.behavior_budget = 10000;
    ocfg.max_dataset_size = 0;
    ocfg.dataset_dir = ap.out_dir + "/datasets";
    StudyOutput offline = offline_study(p, ocfg);
    write_study_output(ap.out_dir + "/offline", offline);
    std::printf("    offline: %zu runs in %.0f s\n", offline.runs.size(), elapsed_s(t0));
    {
        // n=3 vs n=1 on the fixed datasets (capacities vary per env; compare
        // pooled per-env seed scores).
        auto collect = [&](const std::string& variant) {
            ScoreTable t;
            for (const std::string& env : envs) {
                EnvScores es;
                es.env = env;
                std::vector<std::pair<int, double>> rows;
                for (const RunResult& r : offline.runs)
                    if (r.variant == variant && r.study == "offline" && r.env == env &&
                        !r.failed)
                        rows.emplace_back(r.seed_index, r.final_score);
                std::sort(rows.begin(), rows.end());
                for (const auto& [s, sc] : rows) es.scores.push_back(sc);
                if (!es.scores.empty()) t.push_back(std::move(es));
            }
            return t;
        };
        const ScoreTable n1 = collect("dqn+adam");
        const ScoreTable n3 = collect("dqn+adam+n3");
        Rng rng(55);
        const ImprovementStats s = improvement_stats(n1, n3, ap.resamples, rng);
        const bool ok = s.boot.ci_lo > 0.0;
        report("4e", ok,
               "offline n=3 over n=1 median " + fmt_value(s.median) + "% " +
                   ci_str(s.boot) + " across " + std::to_string(s.per_env.size()) +
                   " envs",
               /*hard=*/false);
    }
}

// ---------------------------------------------------------------------------
// Criterion 5: byte-identical reproducibility.

void criterion_5(const AcceptParams& ap) {
    StudyParams p;
    p.envs = {"chain", "gridworld"};
    p.seeds = 2;
    p.seed_root = 9001;
    p.learn.kind = QKind::tabular;
    p.learn.batch = 4;
    p.replay.warmup = 64;
    p.capacity_small = 300;
    p.capacity_large = 900;
    p.budget.gradient_steps = 1500;
    p.budget.eval_every = 500;
    p.budget.eval_episodes = 2;
    p.resamples = 64;
    p.workers = ap.workers;
    const std::string dir_a = ap.out_dir + "/repro_a";
    const std::string dir_b = ap.out_dir + "/repro_b";
    write_study_output(dir_a, additive_study(p, 3, false));
    write_study_output(dir_b, additive_study(p, 3, false));
    auto slurp = [](const std::string& path) {
        std::ifstream f(path, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(f), {});
    };
    bool ok = true;
    for (const char* name : {"/runs.csv", "/summary.csv", "/runs.jsonl"}) {
        const std::string a = slurp(dir_a + name);
        const std::string b = slurp(dir_b + name);
        ok = ok && !a.empty() && a == b;
    }
    report("5", ok, "two invocations with identical config and seed root produce "
                    "byte-identical result CSVs");
}

} // namespace

int main(int argc, char** argv) {
    AcceptParams ap;
    if (const char* s = std::getenv("RLAB_ACCEPT_SEEDS")) ap.seeds = std::atoi(s);
    if (const char* s = std::getenv("RLAB_ACCEPT_OUT")) ap.out_dir = s;
    if (const char* s = std::getenv("RLAB_ACCEPT_WORKERS")) ap.workers = std::atoi(s);
    bool skip_studies = false;
    for (int i = 1; i < argc; ++i)
        if (std::strcmp(argv[i], "--skip-studies") == 0) skip_studies = true;
    fs::create_directories(ap.out_dir);

    const auto t_start = Clock::now();
    std::printf("== exact-oracle suite (criterion 1)\n");
    auto t0 = Clock::now();
    criterion_1a_nstep();
    criterion_1b_sumtree();
    criterion_1c_optimizers();
    criterion_1d_projection();
    criterion_1e_gradients();
    criterion_1f_statistics();
    std::printf("   criterion 1 wall time: %.1f s (budget 120 s)\n", elapsed_s(t0));

    std::printf("== controller suite (criterion 2)\n");
    t0 = Clock::now();
    criterion_2a_ratio();
    criterion_2b_fixed_oldest();
    criterion_2c_epsilon_coverage();
    std::printf("   criterion 2 wall time: %.1f s (budget 120 s)\n", elapsed_s(t0));

    std::printf("== learning sanity (criterion 3)\n");
    t0 = Clock::now();
    criterion_3_sanity("chain", 100000, "3a");
    criterion_3_sanity("gridworld", 3000000, "3b");
    std::printf("   criterion 3 wall time: %.1f s (budget 300 s)\n", elapsed_s(t0));

    if (!skip_studies) {
        std::printf("== desk-scale directional replications (criterion 4, %d seeds)\n",
                    ap.seeds);
        t0 = Clock::now();
        criterion_4(ap);
        std::printf("   criterion 4 wall time: %.1f s\n", elapsed_s(t0));
    } else {
        std::printf("== criterion 4 skipped (--skip-studies)\n");
    }

    std::printf("== reproducibility (criterion 5)\n");
    t0 = Clock::now();
    criterion_5(ap);
    std::printf("   criterion 5 wall time: %.1f s\n", elapsed_s(t0));

    std::printf("== total wall time: %.1f s; hard failures: %d; not reproduced: %d\n",
                elapsed_s(t_start), hard_failures, soft_failures);
    return hard_failures == 0 ? 0 : 1;
}
