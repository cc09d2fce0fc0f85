#include "rlab/replay_buffer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace rlab {

ReplayBuffer::ReplayBuffer(int capacity) : capacity_(capacity) {
    if (capacity <= 0) throw std::invalid_argument("ReplayBuffer: capacity must be > 0");
    slots_.resize(static_cast<size_t>(capacity));
}

int ReplayBuffer::insert(Transition t) {
    if (!std::isfinite(t.reward))
        throw std::invalid_argument("ReplayBuffer::insert: reward must be finite");
    if (t.action < 0)
        throw std::invalid_argument("ReplayBuffer::insert: action must be >= 0");
    if (inserted_total_ > 0) {
        const Transition& prev = slots_[static_cast<size_t>((inserted_total_ - 1) % capacity_)];
        if (t.policy_stamp < prev.policy_stamp)
            throw std::invalid_argument("ReplayBuffer::insert: policy_stamp must be non-decreasing");
    }
    const int slot = write_cursor_;
    slots_[static_cast<size_t>(slot)] = std::move(t);
    const int64_t insert_number = inserted_total_;
    ++inserted_total_;
    write_cursor_ = (write_cursor_ + 1) % capacity_;
    if (observer_ != nullptr) observer_->on_insert(*this, slot, insert_number);
    return slot;
}

int ReplayBuffer::size() const {
    return static_cast<int>(std::min<int64_t>(inserted_total_, capacity_));
}

bool ReplayBuffer::stored(int64_t insert_number) const {
    return insert_number >= 0 && insert_number < inserted_total_ &&
           insert_number >= inserted_total_ - capacity_;
}

const Transition& ReplayBuffer::get(int64_t insert_number) const {
    if (inserted_total_ == 0) throw std::out_of_range("ReplayBuffer::get: buffer is empty");
    if (insert_number < 0 || insert_number >= inserted_total_)
        throw std::out_of_range("ReplayBuffer::get: index was never inserted");
    if (insert_number < inserted_total_ - capacity_)
        throw std::out_of_range("ReplayBuffer::get: index was evicted by wraparound");
    return slots_[static_cast<size_t>(insert_number % capacity_)];
}

const Transition& ReplayBuffer::at_slot(int slot) const {
    if (slot < 0 || slot >= size())
        throw std::out_of_range("ReplayBuffer::at_slot: slot holds no transition");
    return slots_[static_cast<size_t>(slot)];
}

int64_t ReplayBuffer::oldest_insert_number() const {
    if (inserted_total_ == 0) throw std::out_of_range("ReplayBuffer: buffer is empty");
    return std::max<int64_t>(0, inserted_total_ - capacity_);
}

int64_t ReplayBuffer::newest_insert_number() const {
    if (inserted_total_ == 0) throw std::out_of_range("ReplayBuffer: buffer is empty");
    return inserted_total_ - 1;
}

int64_t ReplayBuffer::insert_number_at(int slot) const {
    if (slot < 0 || slot >= size())
        throw std::out_of_range("ReplayBuffer::insert_number_at: slot holds no transition");
    // Slots in [0, cursor) belong to the current lap, the rest to the
    // previous one.
    const int64_t lap_base = (inserted_total_ / capacity_) * capacity_;
    int64_t n = lap_base + slot;
    if (n >= inserted_total_) n -= capacity_;
    return n;
}

int64_t ReplayBuffer::oldest_policy_age(int64_t current_gradient_step) const {
    if (inserted_total_ == 0)
        throw std::out_of_range("ReplayBuffer::oldest_policy_age: buffer is empty");
    // Stamps are non-decreasing in insertion order, so the minimum is at the
    // oldest stored transition.
    const Transition& oldest = slots_[static_cast<size_t>(oldest_insert_number() % capacity_)];
    return current_gradient_step - oldest.policy_stamp;
}

bool ReplayBuffer::nstep_ready(int slot, int n) const {
    if (n < 1) throw std::invalid_argument("nstep_ready: n must be >= 1");
    if (slot < 0 || slot >= size()) return false;
    const int64_t start = insert_number_at(slot);
    for (int k = 0; k < n; ++k) {
        const int64_t cur = start + k;
        if (!stored(cur)) return false; // successor not yet inserted
        const Transition& t = slots_[static_cast<size_t>(cur % capacity_)];
        if (k > 0) {
            const Transition& prev = slots_[static_cast<size_t>((cur - 1) % capacity_)];
            if (t.episode_id != prev.episode_id) return false;
        }
        if (t.terminal) return true;       // terminal truncates the window
        if (t.truncated) return k == n - 1; // window may end at, never cross, a truncation
    }
    return true;
}

std::vector<int> ReplayBuffer::valid_nstep_indices(int n) const {
    std::vector<int> out;
    const int sz = size();
    out.reserve(static_cast<size_t>(sz));
    for (int slot = 0; slot < sz; ++slot)
        if (nstep_ready(slot, n)) out.push_back(slot);
    return out;
}

BufferStats ReplayBuffer::stats(int64_t current_gradient_step, int64_t age_bucket_width) const {
    if (age_bucket_width < 1) throw std::invalid_argument("stats: age_bucket_width must be >= 1");
    BufferStats s;
    s.age_bucket_width = age_bucket_width;
    if (inserted_total_ == 0) return s;
    s.oldest_policy_age = oldest_policy_age(current_gradient_step);
    s.transition_age_histogram.assign(
        static_cast<size_t>(s.oldest_policy_age / age_bucket_width + 1), 0);
    std::unordered_set<int64_t> seen;
    bool all_one_hot = true;
    const int sz = size();
    for (int slot = 0; slot < sz; ++slot) {
        const Transition& t = slots_[static_cast<size_t>(slot)];
        const int64_t age = current_gradient_step - t.policy_stamp;
        if (age >= 0) ++s.transition_age_histogram[static_cast<size_t>(age / age_bucket_width)];
        if (t.state.is_one_hot())
            seen.insert(static_cast<int64_t>(t.state.hot()) * 1000003 + t.action);
        else
            all_one_hot = false;
    }
    s.distinct_state_action_count = all_one_hot ? static_cast<int64_t>(seen.size()) : -1;
    return s;
}

double expected_updates_per_transition(double replay_ratio, double batch_size) {
    if (replay_ratio <= 0.0) throw std::invalid_argument("replay_ratio must be > 0");
    if (batch_size <= 0.0) throw std::invalid_argument("batch_size must be > 0");
    return replay_ratio * batch_size;
}

} // namespace rlab
