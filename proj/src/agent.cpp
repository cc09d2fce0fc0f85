#include "rlab/agent.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "rlab/learner.hpp"
#include "rlab/replay_buffer.hpp"
#include "rlab/sampler.hpp"

namespace rlab {

std::string VariantSpec::label() const {
    if (target == TargetKind::contraction_matched) return "dqn+gamma" + std::to_string(n);
    const int on = int(use_per) + int(use_adam) + int(use_c51);
    if (on == 3 && n == 3) return "rainbow";
    if (on == 3) return n == 1 ? "rainbow-nstep" : "rainbow_n" + std::to_string(n);
    if (on == 2 && n > 1) {
        // Partial rainbow (ablation): name the missing component.
        const std::string missing = !use_per ? "per" : (!use_adam ? "adam" : "c51");
        return "rainbow-" + missing;
    }
    std::string s = "dqn";
    if (use_per) s += "+per";
    if (use_adam) s += "+adam";
    if (use_c51) s += "+c51";
    if (n > 1) s += "+n" + std::to_string(n);
    return s;
}

CategoricalSupport auto_support(const EnvConfig& env, const LearnConfig& learn) {
    CategoricalSupport s;
    s.atoms = learn.c51_atoms;
    if (std::isnan(learn.c51_vmin) || std::isnan(learn.c51_vmax)) {
        const double sigma = env.reward_noise;
        s.v_min = std::min(0.0, 1.0 - 4.0 * sigma);
        s.v_max = std::max(1.0, 1.0 + 4.0 * sigma);
    } else {
        s.v_min = learn.c51_vmin;
        s.v_max = learn.c51_vmax;
    }
    return s;
}

namespace {

OptimConfig make_optim(const VariantSpec& v, const LearnConfig& l) {
    OptimConfig o;
    if (l.optimizer_override.has_value()) {
        o.kind = *l.optimizer_override;
        switch (o.kind) {
            case OptKind::sgd: o.lr = l.lr_sgd; break;
            case OptKind::rmsprop:
                o.lr = l.lr_rmsprop;
                o.rho = l.rms_rho;
                o.rms_eps = l.rms_eps;
                break;
            case OptKind::adam:
                o.lr = l.lr_adam;
                o.beta1 = l.adam_beta1;
                o.beta2 = l.adam_beta2;
                o.adam_eps = l.adam_eps;
                break;
        }
        return o;
    }
    if (v.use_adam) {
        o.kind = OptKind::adam;
        o.lr = l.lr_adam;
        o.beta1 = l.adam_beta1;
        o.beta2 = l.adam_beta2;
        o.adam_eps = l.adam_eps;
    } else {
        o.kind = OptKind::rmsprop;
        o.lr = l.lr_rmsprop;
        o.rho = l.rms_rho;
        o.rms_eps = l.rms_eps;
    }
    return o;
}

QArch make_arch(const VariantSpec& v, const LearnConfig& l, const EnvConfig& env_cfg,
                int obs_dim, int actions) {
    QArch a;
    a.kind = l.kind;
    a.head = v.use_c51 ? QHead::categorical : QHead::scalar;
    a.obs_dim = obs_dim;
    a.hidden = l.hidden;
    a.actions = actions;
    if (a.head == QHead::categorical) a.support = auto_support(env_cfg, l);
    return a;
}

/// Target-network outputs memoized per one-hot state between syncs. The
/// toy envs have at most a few hundred states, so almost every bootstrap
/// lookup inside a sync window is a cache hit.
struct TargetCache {
    int64_t epoch = -1;
    std::vector<char> valid;
    std::vector<double> max_q;  // scalar head
    std::vector<int> greedy;    // categorical head
    std::vector<double> probs;  // categorical head, K per state

    void resize(int states, int atoms) {
        valid.assign(static_cast<size_t>(states), 0);
        max_q.assign(static_cast<size_t>(states), 0.0);
        greedy.assign(static_cast<size_t>(states), 0);
        probs.assign(static_cast<size_t>(states) * static_cast<size_t>(atoms), 0.0);
    }
};

/// Per-run machinery shared by the online and offline loops.
struct TrainContext {
    const RunSpec& spec;
    ReplayBuffer buffer;
    std::unique_ptr<Sampler> sampler;
    Learner learner;
    int gate_n;
    Rng agent_rng;
    Rng eval_rng;
    QWorkspace ws;
    QWorkspace target_ws;
    std::vector<const Obs*> states;
    std::vector<int> actions;
    std::vector<double> targets;
    std::vector<double> weights;
    std::vector<double> signal;    // |td| or cross-entropy, drives PER
    std::vector<double> projected; // batch x atoms
    std::vector<double> probs;
    std::vector<double> uniform_dist;
    std::vector<double> grad;
    TargetCache tcache;
    int64_t act_epoch = -1;
    std::vector<int> act_cache; // greedy action per state under the current online params
    RunResult result;

    TrainContext(const RunSpec& s, int capacity, int obs_dim, int actions_n, Rng init_rng)
        : spec(s),
          buffer(capacity),
          learner(make_arch(s.variant, s.learn, s.env, obs_dim, actions_n),
                  make_optim(s.variant, s.learn), s.learn.sync_period, init_rng),
          gate_n(s.variant.target == TargetKind::contraction_matched ? 1 : s.variant.n),
          agent_rng(0),
          eval_rng(0) {
        if (s.variant.n < 1) throw std::invalid_argument("variant.n must be >= 1");
        if (capacity <= gate_n)
            throw std::invalid_argument("replay capacity must exceed the n-step horizon");
        if (s.variant.use_per)
            sampler = std::make_unique<PrioritizedSampler>(gate_n, capacity, s.learn.per_alpha,
                                                           s.learn.per_beta, s.learn.per_floor);
        else
            sampler = std::make_unique<UniformSampler>(gate_n, capacity);
        buffer.attach(sampler.get());
        grad.assign(static_cast<size_t>(learner.online().param_count()), 0.0);
        uniform_dist.assign(static_cast<size_t>(learner.online().arch().support.atoms),
                            1.0 / learner.online().arch().support.atoms);
        tcache.resize(obs_dim, learner.online().arch().support.atoms);
        act_cache.assign(static_cast<size_t>(obs_dim), -1);
    }

    int greedy_online(const Obs& s) {
        if (!s.is_one_hot()) return learner.online().greedy_action(s, ws);
        if (act_epoch != learner.gradient_steps()) {
            act_epoch = learner.gradient_steps();
            std::fill(act_cache.begin(), act_cache.end(), -1);
        }
        int& slot = act_cache[static_cast<size_t>(s.hot())];
        if (slot < 0) slot = learner.online().greedy_action(s, ws);
        return slot;
    }

    void refresh_target_cache() {
        const int64_t epoch = learner.gradient_steps() / learner.sync_period();
        if (epoch != tcache.epoch) {
            tcache.epoch = epoch;
            std::fill(tcache.valid.begin(), tcache.valid.end(), 0);
        }
    }

    double target_max_q(const Obs& s) {
        if (!s.is_one_hot()) return learner.target().max_q(s, target_ws);
        const size_t h = static_cast<size_t>(s.hot());
        if (!tcache.valid[h]) {
            tcache.max_q[h] = learner.target().max_q(s, target_ws);
            tcache.valid[h] = 1;
        }
        return tcache.max_q[h];
    }

    /// Greedy action and its distribution under the target network.
    std::pair<int, const double*> target_dist(const Obs& s) {
        const int K = learner.online().arch().support.atoms;
        if (!s.is_one_hot()) {
            const int a = learner.target().greedy_action(s, target_ws);
            learner.target().action_probs(target_ws, a, probs);
            return {a, probs.data()};
        }
        const size_t h = static_cast<size_t>(s.hot());
        if (!tcache.valid[h]) {
            const int a = learner.target().greedy_action(s, target_ws);
            learner.target().action_probs(target_ws, a, probs);
            tcache.greedy[h] = a;
            std::copy(probs.begin(), probs.end(),
                      tcache.probs.begin() + h * static_cast<size_t>(K));
            tcache.valid[h] = 1;
        }
        return {tcache.greedy[h], tcache.probs.data() + h * static_cast<size_t>(K)};
    }

    /// One gradient update from a sampled batch. False when there is not
    /// enough sampleable data yet.
    bool update_once() {
        const int B = spec.learn.batch;
        if (sampler->sampleable_count() < B) return false;
        SampleBatch batch = sampler->sample(B, agent_rng);
        refresh_target_cache();
        states.resize(static_cast<size_t>(B));
        actions.resize(static_cast<size_t>(B));
        weights = batch.is_weights;
        signal.assign(static_cast<size_t>(B), 0.0);
        const QFunction& tnet = learner.target();
        if (spec.variant.use_c51) {
            const int K = learner.online().arch().support.atoms;
            projected.resize(static_cast<size_t>(B) * static_cast<size_t>(K));
            for (int i = 0; i < B; ++i) {
                const int slot = batch.indices[static_cast<size_t>(i)];
                const Transition& tr = buffer.at_slot(slot);
                states[static_cast<size_t>(i)] = &tr.state;
                actions[static_cast<size_t>(i)] = tr.action;
                const NstepWindow w = window_for(slot, tr);
                std::span<double> row(projected.data() + static_cast<size_t>(i) * K,
                                      static_cast<size_t>(K));
                if (w.terminal) {
                    c51_project(tnet.arch().support, uniform_dist, w.reward_sum, 0.0, row);
                } else {
                    const auto [a, dist] = target_dist(*w.bootstrap);
                    (void)a;
                    c51_project(tnet.arch().support,
                                std::span<const double>(dist, static_cast<size_t>(
                                                                  tnet.arch().support.atoms)),
                                w.reward_sum, w.effective_discount, row);
                }
            }
            std::fill(grad.begin(), grad.end(), 0.0);
            c51_loss_and_grad(learner.online(), states, actions, projected, weights, grad,
                              signal, ws);
        } else {
            targets.resize(static_cast<size_t>(B));
            for (int i = 0; i < B; ++i) {
                const int slot = batch.indices[static_cast<size_t>(i)];
                const Transition& tr = buffer.at_slot(slot);
                states[static_cast<size_t>(i)] = &tr.state;
                actions[static_cast<size_t>(i)] = tr.action;
                const NstepWindow w = window_for(slot, tr);
                double y = w.reward_sum;
                if (!w.terminal) y += w.effective_discount * target_max_q(*w.bootstrap);
                targets[static_cast<size_t>(i)] = y;
            }
            std::fill(grad.begin(), grad.end(), 0.0);
            td_loss_and_grad(learner.online(), states, actions, targets, weights,
                             spec.learn.huber_delta, grad, signal, ws);
        }
        learner.apply_gradient(grad);
        if (spec.variant.use_per) sampler->update_priorities(batch.indices, signal);
        if (learner.gradient_steps() % spec.budget.eval_every == 0) evaluate_point();
        return true;
    }

    NstepWindow window_for(int slot, const Transition& tr) const {
        if (spec.variant.target == TargetKind::contraction_matched)
            return assemble_contraction_matched(tr, spec.variant.n, spec.learn.gamma);
        return assemble_window(buffer, slot, spec.variant.n, spec.learn.gamma);
    }

    void evaluate_point() {
        const double ret = evaluate_greedy(
            learner.online(), spec.env,
            eval_rng.child("point", static_cast<uint64_t>(result.eval_returns.size())),
            spec.budget.eval_episodes);
        result.eval_returns.push_back(ret);
    }

    void finalize() {
        result.gradient_steps = learner.gradient_steps();
        if (result.eval_returns.empty()) {
            result.final_score = 0.0;
            return;
        }
        const auto n = static_cast<int64_t>(result.eval_returns.size());
        int64_t window = std::max<int64_t>(
            1, static_cast<int64_t>(std::llround(spec.budget.final_window *
                                                 static_cast<double>(n))));
        window = std::min(window, n);
        double acc = 0.0;
        for (int64_t i = n - window; i < n; ++i)
            acc += result.eval_returns[static_cast<size_t>(i)];
        result.final_score = acc / static_cast<double>(window);
    }
};

RunResult make_base_result(const RunSpec& spec, int64_t capacity) {
    RunResult r;
    r.study = spec.study;
    r.variant = spec.variant.label();
    r.env = spec.env_label.empty() ? spec.env.name : spec.env_label;
    r.seed_index = spec.seed_index;
    r.rng_seed = spec.rng_seed;
    r.capacity = capacity;
    if (spec.replay.mode == ReplayMode::fixed_oldest) {
        r.oldest_age = spec.replay.oldest_age;
        r.ratio = ratio_from(static_cast<double>(capacity),
                             static_cast<double>(spec.replay.oldest_age));
    } else {
        r.ratio = spec.replay.ratio;
        r.oldest_age = static_cast<int64_t>(
            std::llround(spec.replay.ratio * static_cast<double>(capacity)));
    }
    return r;
}

} // namespace

double evaluate_greedy(const QFunction& qf, const EnvConfig& env_cfg, Rng rng,
                       int episodes) {
    if (episodes <= 0) return 0.0;
    std::unique_ptr<Env> env = make_env(env_cfg, rng);
    QWorkspace ws;
    // The policy is frozen for the whole evaluation, so each one-hot state's
    // greedy action is computed once.
    std::vector<int> memo(static_cast<size_t>(qf.arch().obs_dim), -1);
    double total = 0.0;
    for (int e = 0; e < episodes; ++e) {
        Obs obs = env->reset();
        while (true) {
            int a;
            if (obs.is_one_hot()) {
                int& slot = memo[static_cast<size_t>(obs.hot())];
                if (slot < 0) slot = qf.greedy_action(obs, ws);
                a = slot;
            } else {
                a = qf.greedy_action(obs, ws);
            }
            StepResult sr = env->step(a);
            total += sr.reward;
            if (sr.terminal || sr.truncated) break;
            obs = std::move(sr.obs);
        }
    }
    return total / static_cast<double>(episodes);
}

RunResult run_agent(const RunSpec& spec, const TransitionSink& sink, RunProbe* probe) {
    Rng root(spec.rng_seed);
    RunResult result = make_base_result(spec, spec.replay.capacity);
    try {
        std::unique_ptr<Env> env = make_env(spec.env, root.child("env"));
        TrainContext ctx(spec, static_cast<int>(spec.replay.capacity), env->obs_dim(),
                         env->action_count(), root.child("init"));
        ctx.agent_rng = root.child("agent");
        ctx.eval_rng = root.child("eval");
        ctx.result = std::move(result);

        const int64_t warmup = spec.replay.warmup >= 0
                                   ? spec.replay.warmup
                                   : std::max<int64_t>(500, 4 * spec.learn.batch);
        ReplayControl control =
            spec.replay.mode == ReplayMode::fixed_oldest
                ? ReplayControl::fixed_oldest(spec.replay.oldest_age, spec.replay.capacity,
                                              warmup)
                : ReplayControl::fixed_ratio(spec.replay.ratio, warmup);
        ctx.result.ratio = control.ratio();

        EpsilonSchedule eps;
        eps.eps0 = spec.eps.eps0;
        eps.eps_final = spec.eps.eps_final;
        const double expected_env_steps =
            static_cast<double>(spec.budget.gradient_steps) / control.ratio();
        eps.horizon = std::max<int64_t>(
            1, static_cast<int64_t>(std::llround(
                   spec.eps.decay_fraction *
                   (expected_env_steps + static_cast<double>(warmup)))));

        const int64_t budget = spec.budget.gradient_steps;
        const int64_t max_env_steps =
            warmup + static_cast<int64_t>(expected_env_steps) +
            20 * static_cast<int64_t>(env->episode_cap()) + 10000;

        Obs obs = env->reset();
        int64_t env_steps = 0;
        int64_t episode = 0;
        const int action_count = env->action_count();
        while (ctx.learner.gradient_steps() < budget) {
            if (env_steps >= max_env_steps) {
                ctx.result.failed = true;
                ctx.result.diagnostic =
                    "gradient budget unreachable within the environment-step bound";
                break;
            }
            const double e = eps.at(env_steps);
            int action;
            if (ctx.agent_rng.bernoulli(e))
                action = static_cast<int>(
                    ctx.agent_rng.uniform_int(static_cast<uint64_t>(action_count)));
            else
                action = ctx.greedy_online(obs);
            StepResult sr = env->step(action);
            Transition tr;
            tr.state = std::move(obs);
            tr.action = action;
            tr.reward = sr.reward;
            tr.next_state = sr.obs;
            tr.terminal = sr.terminal;
            tr.truncated = sr.truncated;
            tr.policy_stamp = ctx.learner.gradient_steps();
            tr.env_step = env_steps;
            tr.episode_id = episode;
            if (sink) sink(tr);
            ctx.buffer.insert(std::move(tr));
            ++env_steps;
            if (sr.terminal || sr.truncated) {
                obs = env->reset();
                ++episode;
            } else {
                obs = std::move(sr.obs);
            }
            int due = control.updates_due(ctx.buffer.size());
            while (due-- > 0 && ctx.learner.gradient_steps() < budget) {
                if (!ctx.update_once()) break;
            }
        }
        ctx.result.env_steps = env_steps;
        ctx.result.episodes = episode;
        ctx.finalize();
        if (probe != nullptr) probe->final_params = ctx.learner.online().params();
        return ctx.result;
    } catch (const DivergenceError& e) {
        result.failed = true;
        result.diagnostic = std::string("divergence: ") + e.what();
        return result;
    } catch (const std::exception& e) {
        result.failed = true;
        result.diagnostic = e.what();
        return result;
    }
}

RunResult offline_train(const Dataset& dataset, const RunSpec& spec) {
    Rng root(spec.rng_seed);
    RunResult result =
        make_base_result(spec, static_cast<int64_t>(dataset.transitions.size()));
    result.oldest_age = 0;
    result.ratio = 0.0;
    try {
        if (dataset.transitions.empty())
            throw std::invalid_argument("offline_train: dataset is empty");
        RunSpec local = spec;
        local.replay.capacity = static_cast<int64_t>(dataset.transitions.size());
        TrainContext ctx(local, static_cast<int>(dataset.transitions.size()),
                         dataset.obs_dim, dataset.action_count, root.child("init"));
        ctx.agent_rng = root.child("agent");
        ctx.eval_rng = root.child("eval");
        ctx.result = std::move(result);
        ctx.result.ratio = 0.0;
        ctx.result.oldest_age = 0;
        for (const Transition& t : dataset.transitions) ctx.buffer.insert(t);

        ctx.evaluate_point(); // initial network
        const int64_t budget = spec.budget.gradient_steps;
        while (ctx.learner.gradient_steps() < budget) {
            if (!ctx.update_once())
                throw std::runtime_error(
                    "offline_train: dataset has too few sampleable transitions for the batch");
        }
        ctx.result.env_steps = 0;
        ctx.finalize();
        return ctx.result;
    } catch (const DivergenceError& e) {
        result.failed = true;
        result.diagnostic = std::string("divergence: ") + e.what();
        return result;
    } catch (const std::exception& e) {
        result.failed = true;
        result.diagnostic = e.what();
        return result;
    }
}

RunResult offline_train_file(const std::string& dataset_path, const RunSpec& spec) {
    const Dataset ds = read_dataset_binary(dataset_path);
    return offline_train(ds, spec);
}

} // namespace rlab
