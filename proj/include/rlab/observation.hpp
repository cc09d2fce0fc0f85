#pragma once

#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

namespace rlab {

/// Fixed-length numeric observation vector. The toy environments emit
/// one-hot encodings, which are kept as (dim, hot index) so the replay
/// buffer and forward passes stay cheap; arbitrary dense vectors are
/// supported for everything else (function-approximator tests, loaded
/// datasets that are not one-hot).
class Obs {
public:
    Obs() = default;

    static Obs one_hot(int dim, int index) {
        if (index < 0 || index >= dim)
            throw std::out_of_range("Obs::one_hot: index outside [0, dim)");
        Obs o;
        o.dim_ = dim;
        o.hot_ = index;
        return o;
    }

    static Obs dense(std::vector<double> values) {
        Obs o;
        o.dim_ = static_cast<int>(values.size());
        o.hot_ = -1;
        o.values_ = std::move(values);
        return o;
    }

    /// Builds from a dense vector, collapsing exact one-hot vectors to the
    /// compact representation.
    static Obs from_dense(const std::vector<double>& values) {
        int hot = -1;
        for (int i = 0; i < static_cast<int>(values.size()); ++i) {
            if (values[i] == 0.0) continue;
            if (values[i] == 1.0 && hot < 0) {
                hot = i;
            } else {
                hot = -2;
                break;
            }
        }
        if (hot >= 0) return one_hot(static_cast<int>(values.size()), hot);
        return dense(values);
    }

    int dim() const { return dim_; }
    bool empty() const { return dim_ == 0; }
    bool is_one_hot() const { return hot_ >= 0; }
    int hot() const { return hot_; }

    double operator[](int i) const {
        if (hot_ >= 0) return i == hot_ ? 1.0 : 0.0;
        return values_[static_cast<size_t>(i)];
    }

    std::vector<double> to_dense() const {
        if (hot_ >= 0) {
            std::vector<double> v(static_cast<size_t>(dim_), 0.0);
            v[static_cast<size_t>(hot_)] = 1.0;
            return v;
        }
        return values_;
    }

    /// Calls f(index, value) for each nonzero entry.
    template <class F>
    void for_nonzero(F&& f) const {
        if (hot_ >= 0) {
            f(hot_, 1.0);
            return;
        }
        for (int i = 0; i < dim_; ++i) {
            const double v = values_[static_cast<size_t>(i)];
            if (v != 0.0) f(i, v);
        }
    }

    bool operator==(const Obs& other) const {
        if (dim_ != other.dim_) return false;
        if (hot_ >= 0 && other.hot_ >= 0) return hot_ == other.hot_;
        for (int i = 0; i < dim_; ++i)
            if ((*this)[i] != other[i]) return false;
        return true;
    }

private:
    int dim_ = 0;
    int hot_ = -1;
    std::vector<double> values_;
};

} // namespace rlab
