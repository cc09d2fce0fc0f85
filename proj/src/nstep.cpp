#include "rlab/nstep.hpp"

#include <stdexcept>

namespace rlab {

NstepWindow assemble_window(const ReplayBuffer& buffer, int slot, int n, double gamma) {
    if (n < 1) throw std::invalid_argument("assemble_window: n must be >= 1");
    if (!buffer.nstep_ready(slot, n))
        throw std::out_of_range("assemble_window: slot has no complete n-step window");
    NstepWindow w;
    const int64_t start = buffer.insert_number_at(slot);
    double discount = 1.0;
    const Transition* last = nullptr;
    for (int k = 0; k < n; ++k) {
        const Transition& t = buffer.get(start + k);
        w.reward_sum += discount * t.reward;
        discount *= gamma;
        ++w.steps;
        last = &t;
        if (t.terminal) {
            w.terminal = true;
            break;
        }
    }
    if (!w.terminal) {
        w.effective_discount = discount; // gamma^m
        w.bootstrap = &last->next_state;
    }
    return w;
}

NstepWindow assemble_contraction_matched(const Transition& t, int n, double gamma) {
    if (n < 1) throw std::invalid_argument("assemble_contraction_matched: n must be >= 1");
    NstepWindow w;
    w.reward_sum = t.reward;
    w.steps = 1;
    if (t.terminal) {
        w.terminal = true;
    } else {
        double d = 1.0;
        for (int k = 0; k < n; ++k) d *= gamma;
        w.effective_discount = d;
        w.bootstrap = &t.next_state;
    }
    return w;
}

double target_value(const ReplayBuffer& buffer, int slot, const TargetSpec& spec,
                    const QMax& q_max) {
    NstepWindow w;
    switch (spec.kind) {
        case TargetKind::one_step:
            w = assemble_window(buffer, slot, 1, spec.gamma);
            break;
        case TargetKind::n_step:
            w = assemble_window(buffer, slot, spec.n, spec.gamma);
            break;
        case TargetKind::contraction_matched:
            w = assemble_contraction_matched(buffer.at_slot(slot), spec.n, spec.gamma);
            break;
        case TargetKind::monte_carlo:
            throw std::invalid_argument("target_value: monte_carlo needs a full episode; use mc_return");
    }
    if (w.terminal) return w.reward_sum;
    return w.reward_sum + w.effective_discount * q_max(*w.bootstrap);
}

double mc_return(std::span<const double> rewards, double gamma) {
    double ret = 0.0;
    double discount = 1.0;
    for (double r : rewards) {
        ret += discount * r;
        discount *= gamma;
    }
    return ret;
}

double contraction_matched_target(const Transition& t, int n, double gamma,
                                  const QMax& q_max) {
    const NstepWindow w = assemble_contraction_matched(t, n, gamma);
    if (w.terminal) return w.reward_sum;
    return w.reward_sum + w.effective_discount * q_max(*w.bootstrap);
}

} // namespace rlab
