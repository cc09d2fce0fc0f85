#pragma once

#include <memory>

#include "rlab/optim.hpp"
#include "rlab/qfunction.hpp"

namespace rlab {

/// Online Q-function plus a frozen target copy synchronized every
/// sync_period gradient steps.
class Learner {
public:
    Learner(const QArch& arch, const OptimConfig& opt, int sync_period, Rng& init_rng);

    QFunction& online() { return online_; }
    const QFunction& online() const { return online_; }
    const QFunction& target() const { return target_; }

    int64_t gradient_steps() const { return grad_steps_; }
    int sync_period() const { return sync_period_; }

    /// Copies online parameters into the frozen target.
    void sync_target();

    /// Applies the gradient, advances the step counter and synchronizes the
    /// target when the period elapses.
    void apply_gradient(std::span<const double> grad);

    Optimizer& optimizer() { return opt_; }

private:
    QFunction online_;
    QFunction target_;
    Optimizer opt_;
    int sync_period_;
    int64_t grad_steps_ = 0;
};

} // namespace rlab
