#include "rlab/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace rlab {

Optimizer::Optimizer(const OptimConfig& cfg, int param_count) : cfg_(cfg) {
    if (param_count <= 0) throw std::invalid_argument("Optimizer: param_count must be > 0");
    if (cfg.lr <= 0.0) throw std::invalid_argument("Optimizer: lr must be > 0");
    switch (cfg.kind) {
        case OptKind::sgd:
            break;
        case OptKind::rmsprop:
            v_.assign(static_cast<size_t>(param_count), 0.0);
            break;
        case OptKind::adam:
            m_.assign(static_cast<size_t>(param_count), 0.0);
            v_.assign(static_cast<size_t>(param_count), 0.0);
            break;
    }
    param_count_ = param_count;
}

void Optimizer::step(std::span<double> params, std::span<const double> grad) {
    if (params.size() != grad.size() ||
        params.size() != static_cast<size_t>(param_count_))
        throw std::invalid_argument("Optimizer::step: length mismatch");
    const size_t n = params.size();
    // Reject non-finite gradients before touching any state. A plain sum
    // propagates NaN/Inf and keeps the scan vectorizable.
    double checksum = 0.0;
    const double* __restrict gv = grad.data();
    for (size_t i = 0; i < n; ++i) checksum += gv[i];
    if (!std::isfinite(checksum))
        throw std::runtime_error("Optimizer::step: non-finite gradient");
    ++steps_;
    const double lr = cfg_.lr;
    double* __restrict pv = params.data();
    switch (cfg_.kind) {
        case OptKind::sgd: {
            for (size_t i = 0; i < n; ++i) pv[i] -= lr * gv[i];
            break;
        }
        case OptKind::rmsprop: {
            const double rho = cfg_.rho;
            const double eps = cfg_.rms_eps;
            double* __restrict vv = v_.data();
            for (size_t i = 0; i < n; ++i) {
                const double g = gv[i];
                vv[i] = rho * vv[i] + (1.0 - rho) * g * g;
                pv[i] -= lr * g / std::sqrt(vv[i] + eps);
            }
            break;
        }
        case OptKind::adam: {
            const double b1 = cfg_.beta1;
            const double b2 = cfg_.beta2;
            const double eps = cfg_.adam_eps;
            const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
            const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
            double* __restrict mv = m_.data();
            double* __restrict vv = v_.data();
            for (size_t i = 0; i < n; ++i) {
                const double g = gv[i];
                mv[i] = b1 * mv[i] + (1.0 - b1) * g;
                vv[i] = b2 * vv[i] + (1.0 - b2) * g * g;
                pv[i] -= lr * (mv[i] / c1) / (std::sqrt(vv[i] / c2) + eps);
            }
            break;
        }
    }
}

} // namespace rlab
