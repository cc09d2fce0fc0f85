#pragma once

#include <cstdint>

#include "rlab/observation.hpp"

namespace rlab {

/// One environment step. policy_stamp is the learner's gradient-step count
/// at action-selection time; it is what makes transition age measurable in
/// gradient steps rather than wall time.
struct Transition {
    Obs state;
    int action = 0;
    double reward = 0.0;
    Obs next_state;
    bool terminal = false;
    /// Episode ended by environment time limit, not by the MDP. Targets may
    /// bootstrap from next_state here but never extend past it.
    bool truncated = false;
    int64_t policy_stamp = 0;
    int64_t env_step = 0;
    int64_t episode_id = 0;
};

} // namespace rlab
