#pragma once

#include <deque>
#include <span>
#include <vector>

#include "rlab/replay_buffer.hpp"
#include "rlab/rng.hpp"
#include "rlab/sum_tree.hpp"

namespace rlab {

struct SampleBatch {
    std::vector<int> indices;          // buffer slot indices
    std::vector<double> is_weights;    // in (0,1], max weight exactly 1
    std::vector<double> probabilities; // P(i) under the sampling scheme
};

/// Index sampling over a replay buffer, restricted to slots whose n-step
/// window is complete. Attach to the buffer so inserts keep the valid set
/// current.
class Sampler : public ReplayObserver {
public:
    ~Sampler() override = default;
    virtual SampleBatch sample(int batch_size, Rng& rng) = 0;
    virtual void update_priorities(std::span<const int> /*slots*/,
                                   std::span<const double> /*td_errors*/) {}
    virtual int sampleable_count() const = 0;
    virtual bool is_sampleable(int slot) const = 0;
};

/// Incremental n-step readiness bookkeeping. A slot becomes sampleable when
/// its window completes (n inserts later, or earlier at a terminal) and is
/// permanently dropped when a time-limit truncation lands inside the window.
class NstepGate {
public:
    NstepGate(int n, int capacity);

    /// Resolves pending slots for the transition just stored. Appends newly
    /// sampleable slots to `activated`; slots that can never become valid
    /// are simply never activated.
    void on_insert(const ReplayBuffer& buffer, int slot, int64_t insert_number,
                   std::vector<int>& activated);

private:
    struct Pending {
        int64_t insert_number;
        int slot;
    };
    int n_;
    std::deque<Pending> pending_;
};

class UniformSampler : public Sampler {
public:
    UniformSampler(int n, int capacity);

    void on_insert(const ReplayBuffer& buffer, int slot, int64_t insert_number) override;
    SampleBatch sample(int batch_size, Rng& rng) override;
    int sampleable_count() const override { return static_cast<int>(items_.size()); }
    bool is_sampleable(int slot) const override { return pos_[static_cast<size_t>(slot)] >= 0; }

private:
    void activate(int slot);
    void deactivate(int slot);

    NstepGate gate_;
    std::vector<int> items_;  // active slots, densely packed
    std::vector<int> pos_;    // slot -> position in items_, -1 if inactive
    std::vector<int> scratch_;
};

/// Proportional prioritized sampling: P(i) = p_i^alpha / sum_j p_j^alpha over
/// sampleable slots, with importance weights (count * P(i))^-beta normalized
/// by the batch maximum. Draws are stratified over the total mass.
class PrioritizedSampler : public Sampler {
public:
    PrioritizedSampler(int n, int capacity, double alpha, double beta,
                       double priority_floor);

    void on_insert(const ReplayBuffer& buffer, int slot, int64_t insert_number) override;
    SampleBatch sample(int batch_size, Rng& rng) override;

    /// leaf priority <- |td_error| + priority_floor (exponent alpha applied
    /// inside the tree).
    void update_priorities(std::span<const int> slots,
                           std::span<const double> td_errors) override;

    int sampleable_count() const override { return active_count_; }
    bool is_sampleable(int slot) const override { return active_[static_cast<size_t>(slot)] != 0; }

    /// Direct access for tests and diagnostics.
    const SumTree& tree() const { return tree_; }
    double raw_priority(int slot) const { return raw_[static_cast<size_t>(slot)]; }
    double max_raw_priority() const { return max_raw_; }
    double alpha() const { return alpha_; }
    double beta() const { return beta_; }

private:
    void activate(int slot);
    void deactivate(int slot);

    NstepGate gate_;
    SumTree tree_;
    std::vector<double> raw_;  // priority before the alpha exponent
    std::vector<char> active_;
    int active_count_ = 0;
    double alpha_;
    double beta_;
    double floor_;
    double max_raw_ = 1.0;
    std::vector<int> scratch_;
};

} // namespace rlab
