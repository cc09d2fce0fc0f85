#pragma once

#include <functional>
#include <span>

#include "rlab/replay_buffer.hpp"

namespace rlab {

enum class TargetKind { one_step, n_step, monte_carlo, contraction_matched };

struct TargetSpec {
    TargetKind kind = TargetKind::n_step;
    int n = 1;
    double gamma = 0.99;
};

/// Everything a learner needs to build a target from a sampled slot:
/// discounted reward sum over the m consumed steps, the bootstrap
/// observation (next_state of the last consumed transition) and the
/// effective discount gamma^m (or n for the contraction-matched control).
struct NstepWindow {
    double reward_sum = 0.0;
    int steps = 0;                    // m = min(n, steps to terminal)
    bool terminal = false;            // window ended inside the episode: no bootstrap
    double effective_discount = 0.0;  // gamma^m, 0 when terminal
    const Obs* bootstrap = nullptr;   // null when terminal
};

/// Walks the stored successor chain. The slot must satisfy
/// buffer.nstep_ready(slot, n); throws std::out_of_range otherwise.
NstepWindow assemble_window(const ReplayBuffer& buffer, int slot, int n, double gamma);

/// Same shape for the contraction-matched 1-step control: one reward, one
/// bootstrap state, discount gamma^n.
NstepWindow assemble_contraction_matched(const Transition& t, int n, double gamma);

using QMax = std::function<double(const Obs&)>;

/// Scalar target for any TargetSpec kind except monte_carlo.
double target_value(const ReplayBuffer& buffer, int slot, const TargetSpec& spec,
                    const QMax& q_max);

/// Full discounted return of a complete episode suffix; no bootstrap.
double mc_return(std::span<const double> rewards, double gamma);

double contraction_matched_target(const Transition& t, int n, double gamma,
                                  const QMax& q_max);

} // namespace rlab
