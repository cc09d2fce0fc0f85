#include "rlab/learner.hpp"

#include <stdexcept>

namespace rlab {

Learner::Learner(const QArch& arch, const OptimConfig& opt, int sync_period, Rng& init_rng)
    : online_(arch, init_rng), target_(arch), opt_(opt, arch.param_count()),
      sync_period_(sync_period) {
    if (sync_period < 1) throw std::invalid_argument("Learner: sync_period must be >= 1");
    sync_target();
}

void Learner::sync_target() { target_.params() = online_.params(); }

void Learner::apply_gradient(std::span<const double> grad) {
    opt_.step(online_.params(), grad);
    ++grad_steps_;
    if (grad_steps_ % sync_period_ == 0) sync_target();
}

} // namespace rlab
