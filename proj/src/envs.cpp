#include "rlab/envs.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

namespace rlab {

namespace {

// Grid movement shared by the gridworld and the maze. Walls keep the agent
// in place; stepping onto the goal pays +1 (plus optional Gaussian noise)
// and terminates.
class GridEnv : public Env {
public:
    GridEnv(std::string name, int width, int height, std::vector<char> wall,
            int start, int goal, int cap, double reward_noise, Rng rng)
        : name_(std::move(name)), width_(width), height_(height), wall_(std::move(wall)),
          start_(start), goal_(goal), cap_(cap), noise_(reward_noise), rng_(rng) {}

    int obs_dim() const override { return width_ * height_; }
    int action_count() const override { return 4; }
    int state_count() const override { return width_ * height_; }
    int episode_cap() const override { return cap_; }
    std::string name() const override { return name_; }

    Obs reset() override {
        pos_ = start_;
        steps_ = 0;
        done_ = false;
        return Obs::one_hot(obs_dim(), pos_);
    }

    StepResult step(int action) override {
        if (done_) throw std::logic_error(name_ + ": step after episode end without reset");
        if (action < 0 || action >= 4)
            throw std::invalid_argument(name_ + ": action out of range");
        pos_ = move(pos_, action);
        ++steps_;
        StepResult r;
        r.obs = Obs::one_hot(obs_dim(), pos_);
        if (pos_ == goal_) {
            r.reward = 1.0 + (noise_ > 0.0 ? rng_.normal(0.0, noise_) : 0.0);
            r.terminal = true;
        } else if (steps_ >= cap_) {
            r.truncated = true;
        }
        done_ = r.terminal || r.truncated;
        return r;
    }

    EnvModel model() const override {
        EnvModel m;
        m.states = state_count();
        m.actions = 4;
        m.start = start_;
        m.next.resize(static_cast<size_t>(m.states) * 4);
        m.reward.assign(static_cast<size_t>(m.states) * 4, 0.0);
        m.terminal.assign(static_cast<size_t>(m.states), 0);
        m.terminal[static_cast<size_t>(goal_)] = 1;
        for (int s = 0; s < m.states; ++s) {
            for (int a = 0; a < 4; ++a) {
                const int ns = m.terminal[static_cast<size_t>(s)] ? s : move(s, a);
                m.next[static_cast<size_t>(s) * 4 + a] = ns;
                if (!m.terminal[static_cast<size_t>(s)] && ns == goal_)
                    m.reward[static_cast<size_t>(s) * 4 + a] = 1.0;
            }
        }
        return m;
    }

private:
    int move(int pos, int action) const {
        const int r = pos / width_;
        const int c = pos % width_;
        int nr = r, nc = c;
        switch (action) {
            case 0: nr = r - 1; break; // up
            case 1: nr = r + 1; break; // down
            case 2: nc = c - 1; break; // left
            case 3: nc = c + 1; break; // right
        }
        if (nr < 0 || nr >= height_ || nc < 0 || nc >= width_) return pos;
        const int np = nr * width_ + nc;
        if (wall_[static_cast<size_t>(np)]) return pos;
        return np;
    }

    std::string name_;
    int width_, height_;
    std::vector<char> wall_;
    int start_, goal_, cap_;
    double noise_;
    Rng rng_;
    int pos_ = 0;
    int steps_ = 0;
    bool done_ = true; // must reset first
};

// 1-D chain, actions {0: left, 1: right}; the right end is the goal.
class ChainEnv : public Env {
public:
    static constexpr int kStates = 5;
    static constexpr int kCap = 100;

    ChainEnv(double reward_noise, Rng rng) : noise_(reward_noise), rng_(rng) {}

    int obs_dim() const override { return kStates; }
    int action_count() const override { return 2; }
    int state_count() const override { return kStates; }
    int episode_cap() const override { return kCap; }
    std::string name() const override { return "chain"; }

    Obs reset() override {
        pos_ = 0;
        steps_ = 0;
        done_ = false;
        return Obs::one_hot(kStates, pos_);
    }

    StepResult step(int action) override {
        if (done_) throw std::logic_error("chain: step after episode end without reset");
        if (action < 0 || action >= 2)
            throw std::invalid_argument("chain: action out of range");
        pos_ = action == 1 ? std::min(pos_ + 1, kStates - 1) : std::max(pos_ - 1, 0);
        ++steps_;
        StepResult r;
        r.obs = Obs::one_hot(kStates, pos_);
        if (pos_ == kStates - 1) {
            r.reward = 1.0 + (noise_ > 0.0 ? rng_.normal(0.0, noise_) : 0.0);
            r.terminal = true;
        } else if (steps_ >= kCap) {
            r.truncated = true;
        }
        done_ = r.terminal || r.truncated;
        return r;
    }

    EnvModel model() const override {
        EnvModel m;
        m.states = kStates;
        m.actions = 2;
        m.start = 0;
        m.next.resize(kStates * 2);
        m.reward.assign(kStates * 2, 0.0);
        m.terminal.assign(kStates, 0);
        m.terminal[kStates - 1] = 1;
        for (int s = 0; s < kStates; ++s) {
            for (int a = 0; a < 2; ++a) {
                int ns = a == 1 ? std::min(s + 1, kStates - 1) : std::max(s - 1, 0);
                if (m.terminal[static_cast<size_t>(s)]) ns = s;
                m.next[static_cast<size_t>(s) * 2 + a] = ns;
                if (!m.terminal[static_cast<size_t>(s)] && ns == kStates - 1)
                    m.reward[static_cast<size_t>(s) * 2 + a] = 1.0;
            }
        }
        return m;
    }

private:
    double noise_;
    Rng rng_;
    int pos_ = 0;
    int steps_ = 0;
    bool done_ = true;
};

class StickyEnv : public Env {
public:
    StickyEnv(std::unique_ptr<Env> inner, double stickiness, Rng rng)
        : inner_(std::move(inner)), sticky_(stickiness), rng_(rng) {
        if (stickiness < 0.0 || stickiness > 1.0)
            throw std::invalid_argument("sticky: stickiness must be in [0, 1]");
    }

    int obs_dim() const override { return inner_->obs_dim(); }
    int action_count() const override { return inner_->action_count(); }
    int state_count() const override { return inner_->state_count(); }
    int episode_cap() const override { return inner_->episode_cap(); }
    std::string name() const override { return inner_->name() + "_sticky"; }

    Obs reset() override {
        last_action_ = -1;
        return inner_->reset();
    }

    StepResult step(int action) override {
        int executed = action;
        if (last_action_ >= 0 && sticky_ > 0.0 && rng_.bernoulli(sticky_))
            executed = last_action_;
        last_action_ = executed;
        return inner_->step(executed);
    }

    EnvModel model() const override { return inner_->model(); }

private:
    std::unique_ptr<Env> inner_;
    double sticky_;
    Rng rng_;
    int last_action_ = -1;
};

std::vector<char> grid_walls(int width, int height) {
    std::vector<char> wall(static_cast<size_t>(width * height), 0);
    for (int r = 0; r < height; ++r)
        for (int c = 0; c < width; ++c)
            if (r == 0 || r == height - 1 || c == 0 || c == width - 1)
                wall[static_cast<size_t>(r * width + c)] = 1;
    return wall;
}

} // namespace

std::unique_ptr<Env> make_chain(double reward_noise, Rng rng) {
    return std::make_unique<ChainEnv>(reward_noise, rng);
}

std::unique_ptr<Env> make_gridworld(double reward_noise, Rng rng) {
    constexpr int W = 11, H = 11;
    std::vector<char> wall = grid_walls(W, H);
    for (int c = 1; c < W - 1; ++c)
        if (c != 2 && c != 8) wall[static_cast<size_t>(5 * W + c)] = 1;
    for (int r = 1; r < H - 1; ++r)
        if (r != 2 && r != 8) wall[static_cast<size_t>(r * W + 5)] = 1;
    const int start = 1 * W + 1;
    const int goal = 9 * W + 9;
    return std::make_unique<GridEnv>("gridworld", W, H, std::move(wall), start, goal,
                                     /*cap=*/60, reward_noise, rng);
}

std::unique_ptr<Env> make_sparse_maze(double reward_noise, Rng rng) {
    constexpr int W = 15, H = 15;
    std::vector<char> wall = grid_walls(W, H);
    // Two shelf walls force an S-shaped route; the goal sits just past the
    // second passage, far from the start in path terms but still reachable
    // by a lucky random walk.
    for (int c = 1; c <= 11; ++c) wall[static_cast<size_t>(4 * W + c)] = 1;
    for (int c = 3; c <= 13; ++c) wall[static_cast<size_t>(8 * W + c)] = 1;
    const int start = 1 * W + 1;
    const int goal = 10 * W + 4;
    return std::make_unique<GridEnv>("sparse_maze", W, H, std::move(wall), start, goal,
                                     /*cap=*/400, reward_noise, rng);
}

std::unique_ptr<Env> make_sticky(std::unique_ptr<Env> inner, double stickiness, Rng rng) {
    return std::make_unique<StickyEnv>(std::move(inner), stickiness, rng);
}

std::unique_ptr<Env> make_env(const EnvConfig& cfg, Rng rng) {
    std::unique_ptr<Env> env;
    Rng env_rng = rng.child("env");
    if (cfg.name == "chain") {
        env = make_chain(cfg.reward_noise, env_rng);
    } else if (cfg.name == "gridworld") {
        env = make_gridworld(cfg.reward_noise, env_rng);
    } else if (cfg.name == "sparse_maze") {
        env = make_sparse_maze(cfg.reward_noise, env_rng);
    } else {
        throw std::invalid_argument("unknown environment: " + cfg.name);
    }
    if (cfg.sticky > 0.0) env = make_sticky(std::move(env), cfg.sticky, rng.child("sticky"));
    return env;
}

std::vector<double> value_iteration(const EnvModel& m, double gamma, double tol) {
    std::vector<double> q(static_cast<size_t>(m.states) * m.actions, 0.0);
    std::vector<double> next_q(q.size(), 0.0);
    for (int iter = 0; iter < 2000000; ++iter) {
        double delta = 0.0;
        for (int s = 0; s < m.states; ++s) {
            for (int a = 0; a < m.actions; ++a) {
                const size_t idx = static_cast<size_t>(s) * m.actions + a;
                if (m.terminal[static_cast<size_t>(s)]) {
                    next_q[idx] = 0.0;
                    continue;
                }
                const int ns = m.next_state(s, a);
                double boot = 0.0;
                if (!m.terminal[static_cast<size_t>(ns)]) {
                    boot = q[static_cast<size_t>(ns) * m.actions];
                    for (int b = 1; b < m.actions; ++b)
                        boot = std::max(boot, q[static_cast<size_t>(ns) * m.actions + b]);
                }
                next_q[idx] = m.mean_reward(s, a) + gamma * boot;
                delta = std::max(delta, std::abs(next_q[idx] - q[idx]));
            }
        }
        q.swap(next_q);
        if (delta < tol) break;
    }
    return q;
}

std::vector<char> reachable_states(const EnvModel& m) {
    std::vector<char> seen(static_cast<size_t>(m.states), 0);
    std::deque<int> frontier{m.start};
    seen[static_cast<size_t>(m.start)] = 1;
    while (!frontier.empty()) {
        const int s = frontier.front();
        frontier.pop_front();
        if (m.terminal[static_cast<size_t>(s)]) continue;
        for (int a = 0; a < m.actions; ++a) {
            const int ns = m.next_state(s, a);
            if (!seen[static_cast<size_t>(ns)]) {
                seen[static_cast<size_t>(ns)] = 1;
                frontier.push_back(ns);
            }
        }
    }
    return seen;
}

int bfs_distance_to_goal(const EnvModel& m) {
    std::vector<int> dist(static_cast<size_t>(m.states), -1);
    std::deque<int> frontier{m.start};
    dist[static_cast<size_t>(m.start)] = 0;
    while (!frontier.empty()) {
        const int s = frontier.front();
        frontier.pop_front();
        if (m.terminal[static_cast<size_t>(s)]) return dist[static_cast<size_t>(s)];
        for (int a = 0; a < m.actions; ++a) {
            const int ns = m.next_state(s, a);
            if (dist[static_cast<size_t>(ns)] < 0) {
                dist[static_cast<size_t>(ns)] = dist[static_cast<size_t>(s)] + 1;
                frontier.push_back(ns);
            }
        }
    }
    return -1;
}

double greedy_rollout_return(const EnvModel& m, const std::vector<double>& q, int cap) {
    int s = m.start;
    double ret = 0.0;
    for (int t = 0; t < cap; ++t) {
        if (m.terminal[static_cast<size_t>(s)]) break;
        int best = 0;
        for (int a = 1; a < m.actions; ++a)
            if (q[static_cast<size_t>(s) * m.actions + a] >
                q[static_cast<size_t>(s) * m.actions + best])
                best = a;
        ret += m.mean_reward(s, best);
        s = m.next_state(s, best);
    }
    return ret;
}

} // namespace rlab
