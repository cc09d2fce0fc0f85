#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace rlab {

enum class OptKind { sgd, rmsprop, adam };

struct OptimConfig {
    OptKind kind = OptKind::sgd;
    double lr = 1e-3;
    // RMSProp
    double rho = 0.95;
    double rms_eps = 1e-5;
    // Adam
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
};

/// First-order optimizer over a flat parameter vector.
///   sgd:     theta -= lr * g
///   rmsprop: v = rho*v + (1-rho)*g^2;  theta -= lr * g / sqrt(v + eps)
///   adam:    m, v moments with bias correction; theta -= lr * m_hat / (sqrt(v_hat) + eps)
class Optimizer {
public:
    Optimizer(const OptimConfig& cfg, int param_count);

    /// Applies one update in place. Throws std::runtime_error on non-finite
    /// gradient input.
    void step(std::span<double> params, std::span<const double> grad);

    int64_t steps_taken() const { return steps_; }
    const OptimConfig& config() const { return cfg_; }

private:
    OptimConfig cfg_;
    std::vector<double> m_;
    std::vector<double> v_;
    int64_t steps_ = 0;
    int param_count_ = 0;
};

} // namespace rlab
