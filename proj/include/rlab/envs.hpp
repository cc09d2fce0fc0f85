#pragma once

#include <memory>
#include <string>
#include <vector>

#include "rlab/observation.hpp"
#include "rlab/rng.hpp"

namespace rlab {

struct StepResult {
    Obs obs;
    double reward = 0.0;
    bool terminal = false;
    bool truncated = false;
};

/// Explicit deterministic MDP extracted from a toy environment (noise mean
/// zero, stickiness off). Substrate for value iteration and BFS oracles.
struct EnvModel {
    int states = 0;
    int actions = 0;
    int start = 0;
    std::vector<int> next;        // states x actions
    std::vector<double> reward;   // states x actions (mean reward)
    std::vector<char> terminal;   // per state: absorbing goal
    std::vector<char> reachable;  // filled by value_iteration/bfs helpers

    int next_state(int s, int a) const { return next[static_cast<size_t>(s) * actions + a]; }
    double mean_reward(int s, int a) const { return reward[static_cast<size_t>(s) * actions + a]; }
};

/// Toy environment with enumerable states and one-hot observations.
/// step() after a terminal without reset() is an error.
class Env {
public:
    virtual ~Env() = default;
    virtual int obs_dim() const = 0;
    virtual int action_count() const = 0;
    virtual int state_count() const = 0;
    virtual Obs reset() = 0;
    virtual StepResult step(int action) = 0;
    virtual EnvModel model() const = 0;
    virtual std::string name() const = 0;
    /// Steps after which an episode is truncated (time limit).
    virtual int episode_cap() const = 0;
};

struct EnvConfig {
    std::string name = "gridworld"; // chain | gridworld | sparse_maze
    double sticky = 0.0;            // action-repeat probability
    double reward_noise = 0.0;      // stddev of Gaussian noise on the goal reward
};

/// Deterministic 5-state chain: action 1 moves right, action 0 moves left
/// (clamped at 0). Reaching the last state pays +1 and terminates.
std::unique_ptr<Env> make_chain(double reward_noise, Rng rng);

/// 11x11 four-room gridworld: border walls plus a cross wall with four
/// doorways; start in the top-left room, +1 terminal goal in the
/// bottom-right room; moves into walls keep the position.
std::unique_ptr<Env> make_gridworld(double reward_noise, Rng rng);

/// 15x15 corridor maze with a single distant +1 goal and a 400-step episode
/// cap; hard for a random policy, no reward shaping.
std::unique_ptr<Env> make_sparse_maze(double reward_noise, Rng rng);

/// Repeats the previous action with probability `stickiness` instead of the
/// requested one. The first action of an episode is never replaced.
std::unique_ptr<Env> make_sticky(std::unique_ptr<Env> inner, double stickiness, Rng rng);

/// Builds from config; sticky > 0 wraps the base environment.
std::unique_ptr<Env> make_env(const EnvConfig& cfg, Rng rng);

/// Q* for the deterministic model: Q(s,a) = r(s,a) + gamma * max_a' Q(s',a')
/// with terminal states worth zero. Iterates until the sup-norm change is
/// below tol. Returns a states x actions table.
std::vector<double> value_iteration(const EnvModel& m, double gamma, double tol = 1e-12);

/// Shortest path length in steps from the start to any terminal state;
/// -1 when unreachable.
int bfs_distance_to_goal(const EnvModel& m);

/// States reachable from the start under any action sequence.
std::vector<char> reachable_states(const EnvModel& m);

/// Undiscounted return of the greedy policy w.r.t. q (states x actions) from
/// the model's start state, following deterministic dynamics for at most
/// `cap` steps.
double greedy_rollout_return(const EnvModel& m, const std::vector<double>& q, int cap);

} // namespace rlab
