#pragma once

#include <cstdint>
#include <stdexcept>

namespace rlab {

/// Steady-state replay ratio implied by a capacity and a target oldest
/// policy age: rho = oldest_age / capacity.
double ratio_from(double capacity, double oldest_age);

enum class ReplayMode { fixed_ratio, fixed_oldest };

/// Gates gradient updates against environment steps. After k post-warmup
/// steps exactly floor(rho * k) updates have been paid out, computed from
/// the product rather than a running float sum so no drift accumulates.
/// No credit accrues before the warmup fill is reached.
class ReplayControl {
public:
    static ReplayControl fixed_ratio(double rho, int64_t warmup);
    static ReplayControl fixed_oldest(int64_t target_oldest_age, int64_t capacity,
                                      int64_t warmup);

    /// Call once per environment step with the current buffer fill.
    int updates_due(int64_t buffer_size);

    double ratio() const { return ratio_; }
    ReplayMode mode() const { return mode_; }
    int64_t warmup() const { return warmup_; }
    int64_t target_oldest_age() const { return target_oldest_age_; }

private:
    ReplayControl(ReplayMode mode, double rho, int64_t warmup, int64_t target_age);

    ReplayMode mode_;
    double ratio_;
    int64_t warmup_;
    int64_t target_oldest_age_ = 0;
    int64_t post_warmup_steps_ = 0;
    int64_t paid_ = 0;
};

/// Linear decay from eps0 to eps_final over `horizon` steps, then constant.
struct EpsilonSchedule {
    double eps0 = 1.0;
    double eps_final = 0.05;
    int64_t horizon = 1;

    double at(int64_t step) const {
        if (horizon <= 0 || step >= horizon) return eps_final;
        if (step <= 0) return eps0;
        return eps0 + (eps_final - eps0) * static_cast<double>(step) /
                          static_cast<double>(horizon);
    }
};

} // namespace rlab
