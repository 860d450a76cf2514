// SPDX-License-Identifier: MIT
#pragma once

#include "bht/error.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace bht {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(std::span<const std::size_t> shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
}

inline std::string shape_string(std::span<const std::size_t> shape) {
    std::string out;
    for (std::size_t k = 0; k < shape.size(); ++k) {
        if (k) out += 'x';
        out += std::to_string(shape[k]);
    }
    return out;
}

/// Dense N-way array of doubles, first index fastest (column-major).
///
/// Values are fixed at construction; every operation returns a new tensor.
/// Indices and modes are zero-based.
class DenseTensor {
public:
    DenseTensor() : shape_{1}, data_(1, 0.0) {}

    explicit DenseTensor(Shape shape) : shape_(std::move(shape)) {
        check_shape();
        data_.assign(shape_size(shape_), 0.0);
    }

    DenseTensor(Shape shape, std::vector<double> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        check_shape();
        if (data_.size() != shape_size(shape_))
            throw ShapeError("tensor of shape " + shape_string(shape_) + " needs " +
                             std::to_string(shape_size(shape_)) + " values, got " +
                             std::to_string(data_.size()));
    }

    static DenseTensor filled(Shape shape, double value) {
        std::size_t n = shape_size(shape);
        return DenseTensor(std::move(shape), std::vector<double>(n, value));
    }

    const Shape& shape() const noexcept { return shape_; }
    std::size_t order() const noexcept { return shape_.size(); }
    std::size_t extent(std::size_t mode) const { return shape_.at(mode); }
    std::size_t size() const noexcept { return data_.size(); }
    std::span<const double> values() const noexcept { return data_; }
    const double* data() const noexcept { return data_.data(); }

    double operator[](std::size_t flat) const { return data_[flat]; }

    std::size_t offset(std::span<const std::size_t> index) const {
        if (index.size() != shape_.size())
            throw ShapeError("index of order " + std::to_string(index.size()) +
                             " for tensor of order " + std::to_string(shape_.size()));
        std::size_t off = 0;
        std::size_t stride = 1;
        for (std::size_t k = 0; k < shape_.size(); ++k) {
            if (index[k] >= shape_[k]) throw ShapeError("index out of range");
            off += index[k] * stride;
            stride *= shape_[k];
        }
        return off;
    }

    double operator()(std::span<const std::size_t> index) const { return data_[offset(index)]; }

    template <std::integral... I>
    double operator()(I... index) const {
        const std::size_t idx[] = {static_cast<std::size_t>(index)...};
        return data_[offset(idx)];
    }

    /// Hands the buffer back to the caller; the tensor is left as a 1-element zero.
    std::vector<double> release() && {
        std::vector<double> out = std::move(data_);
        shape_ = {1};
        data_.assign(1, 0.0);
        return out;
    }

    friend bool operator==(const DenseTensor&, const DenseTensor&) = default;

private:
    void check_shape() const {
        if (shape_.empty()) throw ShapeError("tensor order must be at least 1");
        for (std::size_t e : shape_)
            if (e == 0) throw ShapeError("tensor extents must be positive, got " + shape_string(shape_));
    }

    Shape shape_;
    std::vector<double> data_;
};

using TensorSeries = std::vector<DenseTensor>;

namespace detail {

inline void require_same_shape(const DenseTensor& a, const DenseTensor& b, const char* what) {
    if (a.shape() != b.shape())
        throw ShapeError(std::string(what) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
}

// Splits a shape around `mode` into (product of leading extents, extent, product of trailing extents).
struct ModeSplit {
    std::size_t left;
    std::size_t mid;
    std::size_t right;
};

inline ModeSplit split_at(const Shape& shape, std::size_t mode) {
    if (mode >= shape.size())
        throw ShapeError("mode " + std::to_string(mode) + " out of range for order " +
                         std::to_string(shape.size()));
    ModeSplit s{1, shape[mode], 1};
    for (std::size_t k = 0; k < mode; ++k) s.left *= shape[k];
    for (std::size_t k = mode + 1; k < shape.size(); ++k) s.right *= shape[k];
    return s;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise arithmetic

inline DenseTensor operator+(const DenseTensor& a, const DenseTensor& b) {
    detail::require_same_shape(a, b, "add");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
    return DenseTensor(a.shape(), std::move(out));
}

inline DenseTensor operator-(const DenseTensor& a, const DenseTensor& b) {
    detail::require_same_shape(a, b, "subtract");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] - b[i];
    return DenseTensor(a.shape(), std::move(out));
}

inline DenseTensor operator*(double c, const DenseTensor& a) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = c * a[i];
    return DenseTensor(a.shape(), std::move(out));
}

inline DenseTensor operator-(const DenseTensor& a) { return -1.0 * a; }

/// Linear combination sum_k coeffs[k] * terms[k]; all terms share `shape`.
inline DenseTensor linear_combination(const Shape& shape, std::span<const double> coeffs,
                                      std::span<const DenseTensor> terms) {
    if (coeffs.size() != terms.size()) throw ShapeError("linear_combination: length mismatch");
    std::vector<double> out(shape_size(shape), 0.0);
    for (std::size_t k = 0; k < terms.size(); ++k) {
        if (terms[k].shape() != shape) throw ShapeError("linear_combination: shape mismatch");
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += coeffs[k] * terms[k][i];
    }
    return DenseTensor(shape, std::move(out));
}

inline DenseTensor reshape(const DenseTensor& t, Shape shape) {
    if (shape_size(shape) != t.size())
        throw ShapeError("reshape " + shape_string(t.shape()) + " -> " + shape_string(shape));
    return DenseTensor(std::move(shape), std::vector<double>(t.values().begin(), t.values().end()));
}

inline double inner(const DenseTensor& a, const DenseTensor& b) {
    detail::require_same_shape(a, b, "inner");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

inline double frobenius_norm(const DenseTensor& t) { return std::sqrt(inner(t, t)); }

// ---------------------------------------------------------------------------
// Unfolding and mode products

/// Mode-n unfolding. Column index of element (i_1..i_N) is sum_{k != n} i_k J_k with
/// J_k the product of the extents below k excluding n (Kolda ordering).
inline Matrix unfold(const DenseTensor& t, std::size_t mode) {
    auto [left, mid, right] = detail::split_at(t.shape(), mode);
    Matrix m(mid, left * right);
    const double* src = t.data();
    for (std::size_t r = 0; r < right; ++r)
        for (std::size_t i = 0; i < mid; ++i)
            for (std::size_t l = 0; l < left; ++l)
                m(i, l + left * r) = src[l + left * (i + mid * r)];
    return m;
}

inline DenseTensor fold(const Matrix& m, std::size_t mode, const Shape& shape) {
    auto [left, mid, right] = detail::split_at(shape, mode);
    if (static_cast<std::size_t>(m.rows()) != mid || static_cast<std::size_t>(m.cols()) != left * right)
        throw ShapeError("fold: matrix " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                         " does not match mode " + std::to_string(mode) + " of " + shape_string(shape));
    std::vector<double> out(shape_size(shape));
    for (std::size_t r = 0; r < right; ++r)
        for (std::size_t i = 0; i < mid; ++i)
            for (std::size_t l = 0; l < left; ++l)
                out[l + left * (i + mid * r)] = m(i, l + left * r);
    return DenseTensor(shape, std::move(out));
}

/// t x_mode m: contracts mode `mode` of t with the columns of m.
inline DenseTensor mode_product(const DenseTensor& t, const Matrix& m, std::size_t mode) {
    auto [left, mid, right] = detail::split_at(t.shape(), mode);
    if (static_cast<std::size_t>(m.cols()) != mid)
        throw ShapeError("mode_product: matrix has " + std::to_string(m.cols()) + " columns, mode " +
                         std::to_string(mode) + " has extent " + std::to_string(mid));
    const auto rows = static_cast<std::size_t>(m.rows());
    Shape out_shape = t.shape();
    out_shape[mode] = rows;
    std::vector<double> out(left * rows * right);
    using Block = Eigen::Map<const Matrix>;
    using OutBlock = Eigen::Map<Matrix>;
    for (std::size_t r = 0; r < right; ++r) {
        Block x(t.data() + left * mid * r, static_cast<Eigen::Index>(left), static_cast<Eigen::Index>(mid));
        OutBlock y(out.data() + left * rows * r, static_cast<Eigen::Index>(left),
                   static_cast<Eigen::Index>(rows));
        y.noalias() = x * m.transpose();
    }
    return DenseTensor(std::move(out_shape), std::move(out));
}

/// Applies mats[k] (or its transpose) along every mode k.
inline DenseTensor multi_mode_product(const DenseTensor& t, std::span<const Matrix> mats, bool transpose) {
    if (mats.size() != t.order()) throw ShapeError("multi_mode_product: one matrix per mode required");
    DenseTensor out = t;
    for (std::size_t k = 0; k < mats.size(); ++k)
        out = transpose ? mode_product(out, mats[k].transpose(), k) : mode_product(out, mats[k], k);
    return out;
}

/// Core of t under factor matrices: t x_1 U1^T ... x_M UM^T.
inline DenseTensor tucker_project(const DenseTensor& t, std::span<const Matrix> factors) {
    return multi_mode_product(t, factors, true);
}

/// Tucker composition: core x_1 U1 ... x_M UM.
inline DenseTensor tucker_compose(const DenseTensor& core, std::span<const Matrix> factors) {
    return multi_mode_product(core, factors, false);
}

inline Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

/// mats[M-1] (x) ... (x) mats[skip+1] (x) mats[skip-1] (x) ... (x) mats[0].
inline Matrix kron_chain_skip(std::span<const Matrix> mats, std::size_t skip) {
    if (skip >= mats.size()) throw ShapeError("kron_chain_skip: skip index out of range");
    if (mats.size() < 2) throw ShapeError("kron_chain_skip: no factors left after skipping");
    Matrix out;
    bool first = true;
    for (std::size_t k = mats.size(); k-- > 0;) {
        if (k == skip) continue;
        out = first ? mats[k] : kron(out, mats[k]);
        first = false;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Time-axis helpers (time is the last mode)

inline std::size_t time_length(const DenseTensor& x) { return x.shape().back(); }

inline Shape slice_shape(const DenseTensor& x) {
    if (x.order() < 2) return Shape{1};
    return Shape(x.shape().begin(), x.shape().end() - 1);
}

/// Frontal slices along the last mode.
inline TensorSeries split_last(const DenseTensor& x) {
    const Shape s = slice_shape(x);
    const std::size_t n = shape_size(s);
    TensorSeries out;
    out.reserve(time_length(x));
    for (std::size_t t = 0; t < time_length(x); ++t)
        out.emplace_back(s, std::vector<double>(x.data() + n * t, x.data() + n * (t + 1)));
    return out;
}

/// Inverse of split_last: appends a trailing time mode.
inline DenseTensor stack_last(std::span<const DenseTensor> slices) {
    if (slices.empty()) throw ShapeError("stack_last: empty sequence");
    Shape s = slices.front().shape();
    std::vector<double> out;
    out.reserve(slices.front().size() * slices.size());
    for (const auto& sl : slices) {
        if (sl.shape() != s) throw ShapeError("stack_last: slices differ in shape");
        out.insert(out.end(), sl.values().begin(), sl.values().end());
    }
    s.push_back(slices.size());
    return DenseTensor(std::move(s), std::move(out));
}

/// First `n` time steps of x.
inline DenseTensor leading(const DenseTensor& x, std::size_t n) {
    if (n == 0 || n > time_length(x)) throw ShapeError("leading: bad length");
    Shape s = x.shape();
    s.back() = n;
    const std::size_t m = shape_size(s);
    return DenseTensor(std::move(s), std::vector<double>(x.data(), x.data() + m));
}

}  // namespace bht
