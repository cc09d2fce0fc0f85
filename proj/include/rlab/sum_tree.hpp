#pragma once

#include <vector>

namespace rlab {

/// Binary-indexed sum tree over non-negative leaf priorities. set() and
/// find() are O(log n); internal nodes are recomputed from their children so
/// the node == left + right invariant holds exactly after every update.
class SumTree {
public:
    explicit SumTree(int leaf_count);

    int leaf_count() const { return leaf_count_; }

    /// priority must be >= 0 and finite.
    void set(int leaf, double priority);

    double get(int leaf) const;

    double total() const { return nodes_[1]; }

    /// Returns the unique leaf j with cumsum(j-1) <= u < cumsum(j).
    /// Throws std::out_of_range when u is outside [0, total()) and
    /// std::runtime_error when total() == 0 (empty measure).
    int find(double u) const;

private:
    int leaf_count_;   // requested leaves
    int padded_;       // power-of-two padding
    std::vector<double> nodes_; // 1-based heap layout; leaves at [padded_, 2*padded_)
};

} // namespace rlab
