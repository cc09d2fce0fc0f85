#include "rlab/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rlab {

NstepGate::NstepGate(int n, int capacity) : n_(n) {
    if (n < 1) throw std::invalid_argument("NstepGate: n must be >= 1");
    if (capacity <= n)
        throw std::invalid_argument("NstepGate: capacity must exceed n");
}

void NstepGate::on_insert(const ReplayBuffer& buffer, int slot, int64_t insert_number,
                          std::vector<int>& activated) {
    pending_.push_back({insert_number, slot});
    const Transition& t = buffer.at_slot(slot);
    if (t.terminal) {
        // A terminal closes every open window behind it (m <= n by
        // construction: pendings are at most n-1 inserts old).
        for (const Pending& p : pending_) activated.push_back(p.slot);
        pending_.clear();
        return;
    }
    if (t.truncated) {
        // Only the window that ends exactly here survives; anything newer
        // would have to cross the episode boundary.
        for (const Pending& p : pending_)
            if (p.insert_number + n_ - 1 == insert_number) activated.push_back(p.slot);
        pending_.clear();
        return;
    }
    if (!pending_.empty() && pending_.front().insert_number + n_ - 1 == insert_number) {
        activated.push_back(pending_.front().slot);
        pending_.pop_front();
    }
}

// ---------------------------------------------------------------------------

UniformSampler::UniformSampler(int n, int capacity)
    : gate_(n, capacity), pos_(static_cast<size_t>(capacity), -1) {
    items_.reserve(static_cast<size_t>(capacity));
}

void UniformSampler::activate(int slot) {
    if (pos_[static_cast<size_t>(slot)] >= 0) return;
    pos_[static_cast<size_t>(slot)] = static_cast<int>(items_.size());
    items_.push_back(slot);
}

void UniformSampler::deactivate(int slot) {
    const int p = pos_[static_cast<size_t>(slot)];
    if (p < 0) return;
    const int last = items_.back();
    items_[static_cast<size_t>(p)] = last;
    pos_[static_cast<size_t>(last)] = p;
    items_.pop_back();
    pos_[static_cast<size_t>(slot)] = -1;
}

void UniformSampler::on_insert(const ReplayBuffer& buffer, int slot, int64_t insert_number) {
    // Reused slot: whatever lived there is gone.
    if (insert_number >= buffer.capacity()) deactivate(slot);
    scratch_.clear();
    gate_.on_insert(buffer, slot, insert_number, scratch_);
    for (int s : scratch_) activate(s);
}

SampleBatch UniformSampler::sample(int batch_size, Rng& rng) {
    SampleBatch batch;
    if (batch_size == 0) return batch;
    if (items_.empty())
        throw std::runtime_error("UniformSampler::sample: no sampleable indices");
    const double p = 1.0 / static_cast<double>(items_.size());
    batch.indices.reserve(static_cast<size_t>(batch_size));
    for (int i = 0; i < batch_size; ++i)
        batch.indices.push_back(items_[rng.uniform_int(items_.size())]);
    batch.is_weights.assign(static_cast<size_t>(batch_size), 1.0);
    batch.probabilities.assign(static_cast<size_t>(batch_size), p);
    return batch;
}

// ---------------------------------------------------------------------------

PrioritizedSampler::PrioritizedSampler(int n, int capacity, double alpha, double beta,
                                       double priority_floor)
    : gate_(n, capacity),
      tree_(capacity),
      raw_(static_cast<size_t>(capacity), 0.0),
      active_(static_cast<size_t>(capacity), 0),
      alpha_(alpha),
      beta_(beta),
      floor_(priority_floor) {
    if (alpha < 0.0) throw std::invalid_argument("PrioritizedSampler: alpha must be >= 0");
    if (beta < 0.0 || beta > 1.0)
        throw std::invalid_argument("PrioritizedSampler: beta must be in [0, 1]");
    if (priority_floor < 0.0)
        throw std::invalid_argument("PrioritizedSampler: priority_floor must be >= 0");
}

void PrioritizedSampler::activate(int slot) {
    if (active_[static_cast<size_t>(slot)]) return;
    active_[static_cast<size_t>(slot)] = 1;
    ++active_count_;
    tree_.set(slot, std::pow(raw_[static_cast<size_t>(slot)], alpha_));
}

void PrioritizedSampler::deactivate(int slot) {
    if (!active_[static_cast<size_t>(slot)]) return;
    active_[static_cast<size_t>(slot)] = 0;
    --active_count_;
    tree_.set(slot, 0.0);
}

void PrioritizedSampler::on_insert(const ReplayBuffer& buffer, int slot, int64_t insert_number) {
    if (insert_number >= buffer.capacity()) deactivate(slot);
    // Fresh transitions enter at the maximum priority seen so far, so every
    // stored transition is guaranteed to be sampleable once its window
    // completes.
    raw_[static_cast<size_t>(slot)] = max_raw_;
    scratch_.clear();
    gate_.on_insert(buffer, slot, insert_number, scratch_);
    for (int s : scratch_) activate(s);
}

SampleBatch PrioritizedSampler::sample(int batch_size, Rng& rng) {
    SampleBatch batch;
    if (batch_size == 0) return batch;
    const double total = tree_.total();
    if (!(total > 0.0))
        throw std::runtime_error("PrioritizedSampler::sample: zero total priority");
    batch.indices.reserve(static_cast<size_t>(batch_size));
    batch.probabilities.reserve(static_cast<size_t>(batch_size));
    batch.is_weights.reserve(static_cast<size_t>(batch_size));
    const double count = static_cast<double>(active_count_);
    double max_w = 0.0;
    for (int i = 0; i < batch_size; ++i) {
        // One draw per stratum of the total mass.
        double u = (static_cast<double>(i) + rng.uniform()) *
                   (total / static_cast<double>(batch_size));
        if (u >= total) u = std::nextafter(total, 0.0);
        const int slot = tree_.find(u);
        const double p = tree_.get(slot) / total;
        const double w = std::pow(count * p, -beta_);
        batch.indices.push_back(slot);
        batch.probabilities.push_back(p);
        batch.is_weights.push_back(w);
        max_w = std::max(max_w, w);
    }
    for (double& w : batch.is_weights) w /= max_w;
    return batch;
}

void PrioritizedSampler::update_priorities(std::span<const int> slots,
                                           std::span<const double> td_errors) {
    if (slots.size() != td_errors.size())
        throw std::invalid_argument("update_priorities: size mismatch");
    for (size_t i = 0; i < slots.size(); ++i) {
        const int slot = slots[i];
        const double raw = std::abs(td_errors[i]) + floor_;
        raw_[static_cast<size_t>(slot)] = raw;
        max_raw_ = std::max(max_raw_, raw);
        if (active_[static_cast<size_t>(slot)]) tree_.set(slot, std::pow(raw, alpha_));
    }
}

} // namespace rlab
