// SPDX-License-Identifier: MIT
#pragma once

#include "bht/error.hpp"
#include "bht/tensor.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace bht::diff {

/// Order-d differences of a slice sequence plus the boundary slices needed to undo them.
struct DifferencedSeries {
    std::size_t order = 0;
    TensorSeries slices;  ///< length L - d
    TensorSeries heads;   ///< heads[k]: first slice of the level-k sequence
    TensorSeries tails;   ///< tails[k]: last slice of the level-k sequence

    std::size_t source_length() const { return slices.size() + order; }
};

inline DifferencedSeries difference(std::span<const DenseTensor> s, std::size_t d) {
    if (s.size() <= d)
        throw ConfigError("differencing of order " + std::to_string(d) + " needs more than " + std::to_string(d) +
                          " slices, got " + std::to_string(s.size()));
    DifferencedSeries out;
    out.order = d;
    TensorSeries level(s.begin(), s.end());
    for (std::size_t k = 0; k < d; ++k) {
        out.heads.push_back(level.front());
        out.tails.push_back(level.back());
        TensorSeries next;
        next.reserve(level.size() - 1);
        for (std::size_t t = 1; t < level.size(); ++t) next.push_back(level[t] - level[t - 1]);
        level = std::move(next);
    }
    out.slices = std::move(level);
    return out;
}

/// Rebuilds the original sequence from differences and heads (cumulative sums, level by level).
inline TensorSeries integrate(const DifferencedSeries& ds) {
    TensorSeries level = ds.slices;
    for (std::size_t k = ds.order; k-- > 0;) {
        TensorSeries up;
        up.reserve(level.size() + 1);
        up.push_back(ds.heads[k]);
        for (const auto& step : level) up.push_back(up.back() + step);
        level = std::move(up);
    }
    return level;
}

namespace detail {

inline void check_slice(const DifferencedSeries& ds, const DenseTensor& predicted) {
    const DenseTensor& ref = ds.slices.empty() ? ds.tails.front() : ds.slices.front();
    if (ref.shape() != predicted.shape())
        throw ShapeError("predicted difference has shape " + shape_string(predicted.shape()) + ", expected " +
                         shape_string(ref.shape()));
}

}  // namespace detail

/// Integrates a predicted order-d difference into the next original-scale slice.
inline DenseTensor invert_last(const DifferencedSeries& ds, const DenseTensor& predicted) {
    detail::check_slice(ds, predicted);
    DenseTensor value = predicted;
    for (std::size_t k = ds.order; k-- > 0;) value = ds.tails[k] + value;
    return value;
}

/// Appends a predicted difference, advancing every level's tail. Used to chain
/// multi-step forecasts.
inline DifferencedSeries extend(const DifferencedSeries& ds, const DenseTensor& predicted) {
    detail::check_slice(ds, predicted);
    DifferencedSeries out = ds;
    DenseTensor value = predicted;
    for (std::size_t k = ds.order; k-- > 0;) {
        value = ds.tails[k] + value;
        out.tails[k] = value;
    }
    out.slices.push_back(predicted);
    return out;
}

}  // namespace bht::diff
