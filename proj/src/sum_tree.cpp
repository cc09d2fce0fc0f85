#include "rlab/sum_tree.hpp"

#include <cmath>
#include <stdexcept>

namespace rlab {

SumTree::SumTree(int leaf_count) : leaf_count_(leaf_count) {
    if (leaf_count <= 0) throw std::invalid_argument("SumTree: leaf_count must be > 0");
    padded_ = 1;
    while (padded_ < leaf_count) padded_ <<= 1;
    nodes_.assign(static_cast<size_t>(2 * padded_), 0.0);
}

void SumTree::set(int leaf, double priority) {
    if (leaf < 0 || leaf >= leaf_count_)
        throw std::out_of_range("SumTree::set: leaf out of range");
    if (!(priority >= 0.0) || !std::isfinite(priority))
        throw std::invalid_argument("SumTree::set: priority must be finite and >= 0");
    size_t i = static_cast<size_t>(padded_ + leaf);
    nodes_[i] = priority;
    for (i >>= 1; i >= 1; i >>= 1)
        nodes_[i] = nodes_[2 * i] + nodes_[2 * i + 1];
}

double SumTree::get(int leaf) const {
    if (leaf < 0 || leaf >= leaf_count_)
        throw std::out_of_range("SumTree::get: leaf out of range");
    return nodes_[static_cast<size_t>(padded_ + leaf)];
}

int SumTree::find(double u) const {
    if (total() <= 0.0) throw std::runtime_error("SumTree::find: empty measure (total is 0)");
    if (!(u >= 0.0) || u >= total())
        throw std::out_of_range("SumTree::find: u outside [0, total)");
    size_t i = 1;
    while (i < static_cast<size_t>(padded_)) {
        const double left = nodes_[2 * i];
        if (u < left) {
            i = 2 * i;
        } else {
            u -= left;
            i = 2 * i + 1;
        }
    }
    int leaf = static_cast<int>(i) - padded_;
    // Floating-point boundary fixup: never return a zero-priority leaf.
    if (nodes_[i] <= 0.0) {
        int j = leaf;
        while (j > 0 && nodes_[static_cast<size_t>(padded_ + j)] <= 0.0) --j;
        if (nodes_[static_cast<size_t>(padded_ + j)] <= 0.0) {
            j = leaf;
            while (j < leaf_count_ - 1 && nodes_[static_cast<size_t>(padded_ + j)] <= 0.0) ++j;
        }
        leaf = j;
    }
    return leaf;
}

} // namespace rlab
