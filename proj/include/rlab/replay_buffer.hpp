#pragma once

#include <cstdint>
#include <vector>

#include "rlab/transition.hpp"

namespace rlab {

class ReplayBuffer;

/// Insertion hook so samplers can track priorities and n-step readiness
/// without the buffer knowing about sampling.
class ReplayObserver {
public:
    virtual ~ReplayObserver() = default;
    /// Called after the transition has been stored. insert_number counts
    /// from 0 and never repeats; slot is insert_number % capacity.
    virtual void on_insert(const ReplayBuffer& buffer, int slot, int64_t insert_number) = 0;
};

/// Age-bucketed view of buffer contents, for diagnostics.
struct BufferStats {
    int64_t oldest_policy_age = 0;
    std::vector<int64_t> transition_age_histogram; // counts per bucket
    int64_t age_bucket_width = 1;
    /// Distinct (state, action) pairs; only counted when all stored states
    /// are one-hot, otherwise -1.
    int64_t distinct_state_action_count = -1;
};

/// Fixed-capacity circular transition store. Slot s holds the transition
/// with insert number s (mod capacity); once full, each insert overwrites
/// the oldest stored transition, so exactly the `capacity` most recent
/// transitions are retained.
class ReplayBuffer {
public:
    explicit ReplayBuffer(int capacity);

    /// Stores t at the write cursor and advances it. Overwrite of the
    /// oldest entry is the defined behavior, never an error. Returns the
    /// slot index used. policy_stamp must be non-decreasing across inserts.
    int insert(Transition t);

    /// Addressing by insert number, so eviction is detectable.
    const Transition& get(int64_t insert_number) const;

    /// Slot addressing used by samplers (slot must currently hold data).
    const Transition& at_slot(int slot) const;

    int capacity() const { return capacity_; }
    int size() const;
    int64_t inserted_total() const { return inserted_total_; }
    int write_cursor() const { return write_cursor_; }

    bool stored(int64_t insert_number) const;
    int64_t oldest_insert_number() const;
    int64_t newest_insert_number() const;
    int slot_of(int64_t insert_number) const { return static_cast<int>(insert_number % capacity_); }
    int64_t insert_number_at(int slot) const;

    /// Gradient-step age of the oldest stored transition. Throws on empty.
    int64_t oldest_policy_age(int64_t current_gradient_step) const;

    /// Slots whose n-step window is complete: the next n-1 successors are
    /// stored and belong to the same episode, except that a terminal inside
    /// the window truncates it (still valid) and a time-limit truncation
    /// before the final window position invalidates the index. Never
    /// crosses the write cursor.
    std::vector<int> valid_nstep_indices(int n) const;

    /// Same rule for a single slot.
    bool nstep_ready(int slot, int n) const;

    void attach(ReplayObserver* observer) { observer_ = observer; }

    BufferStats stats(int64_t current_gradient_step, int64_t age_bucket_width = 1) const;

private:
    int capacity_;
    std::vector<Transition> slots_;
    int write_cursor_ = 0;
    int64_t inserted_total_ = 0;
    ReplayObserver* observer_ = nullptr;
};

/// Expected number of times a transition is sampled over its lifetime in the
/// buffer: replay_ratio * batch_size, independent of capacity.
double expected_updates_per_transition(double replay_ratio, double batch_size);

} // namespace rlab
