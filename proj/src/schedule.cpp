#include "rlab/schedule.hpp"

#include <cmath>

namespace rlab {

double ratio_from(double capacity, double oldest_age) {
    if (capacity <= 0.0) throw std::invalid_argument("ratio_from: capacity must be > 0");
    if (oldest_age <= 0.0) throw std::invalid_argument("ratio_from: oldest_age must be > 0");
    return oldest_age / capacity;
}

ReplayControl::ReplayControl(ReplayMode mode, double rho, int64_t warmup, int64_t target_age)
    : mode_(mode), ratio_(rho), warmup_(warmup), target_oldest_age_(target_age) {
    if (rho <= 0.0) throw std::invalid_argument("ReplayControl: replay ratio must be > 0");
    if (warmup < 0) throw std::invalid_argument("ReplayControl: warmup must be >= 0");
}

ReplayControl ReplayControl::fixed_ratio(double rho, int64_t warmup) {
    return ReplayControl(ReplayMode::fixed_ratio, rho, warmup, 0);
}

ReplayControl ReplayControl::fixed_oldest(int64_t target_oldest_age, int64_t capacity,
                                          int64_t warmup) {
    if (capacity <= 0) throw std::invalid_argument("ReplayControl: capacity must be > 0");
    if (target_oldest_age <= 0)
        throw std::invalid_argument("ReplayControl: target_oldest_age must be > 0");
    const double rho = ratio_from(static_cast<double>(capacity),
                                  static_cast<double>(target_oldest_age));
    return ReplayControl(ReplayMode::fixed_oldest, rho, warmup, target_oldest_age);
}

int ReplayControl::updates_due(int64_t buffer_size) {
    if (buffer_size < warmup_) return 0;
    ++post_warmup_steps_;
    const int64_t total =
        static_cast<int64_t>(std::floor(ratio_ * static_cast<double>(post_warmup_steps_)));
    const int due = static_cast<int>(total - paid_);
    paid_ = total;
    return due;
}

} // namespace rlab
