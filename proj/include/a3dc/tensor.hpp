#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "a3dc/errors.hpp"

namespace a3dc {

using Shape = std::vector<int64_t>;

inline std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << '(';
    for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
    os << ')';
    return os.str();
}

// Dense N-dimensional array, row-major, contiguous. Scalar is float for
// training and double for gradient checking. Tensors are value types; an
// operation never mutates its inputs (the optimizer's in-place parameter
// update is the one exception, and it owns the tensors it updates).
template <typename Scalar>
class Tensor {
  public:
    Tensor() = default;

    explicit Tensor(Shape shape, Scalar fill = Scalar(0)) : shape_(std::move(shape)) {
        validate_shape(shape_);
        data_.assign(size_t(numel_of(shape_)), fill);
    }

    static Tensor from_data(Shape shape, std::vector<Scalar> data) {
        validate_shape(shape);
        if (numel_of(shape) != int64_t(data.size())) {
            throw ShapeError("from_data: shape " + shape_str(shape) + " wants " +
                             std::to_string(numel_of(shape)) + " elements, got " +
                             std::to_string(data.size()));
        }
        Tensor t;
        t.shape_ = std::move(shape);
        t.data_ = std::move(data);
        return t;
    }

    const Shape& shape() const { return shape_; }
    int64_t rank() const { return int64_t(shape_.size()); }
    int64_t extent(int axis) const { return shape_[size_t(axis)]; }
    int64_t size() const { return int64_t(data_.size()); }

    Scalar* data() { return data_.data(); }
    const Scalar* data() const { return data_.data(); }
    std::vector<Scalar>& storage() { return data_; }
    const std::vector<Scalar>& storage() const { return data_; }

    Scalar& operator[](int64_t i) { return data_[size_t(i)]; }
    Scalar operator[](int64_t i) const { return data_[size_t(i)]; }

    // Row-major strides; innermost axis has stride 1.
    Shape strides() const {
        Shape st(shape_.size());
        int64_t acc = 1;
        for (size_t i = shape_.size(); i-- > 0;) {
            st[i] = acc;
            acc *= shape_[i];
        }
        return st;
    }

    int64_t flat_index(std::span<const int64_t> idx) const {
        if (idx.size() != shape_.size()) {
            throw ShapeError("flat_index: got " + std::to_string(idx.size()) +
                             " indices for rank-" + std::to_string(rank()) + " tensor");
        }
        int64_t flat = 0;
        for (size_t i = 0; i < idx.size(); ++i) flat = flat * shape_[i] + idx[i];
        return flat;
    }

    Scalar& at(std::initializer_list<int64_t> idx) {
        return data_[size_t(flat_index(std::span(idx.begin(), idx.size())))];
    }
    Scalar at(std::initializer_list<int64_t> idx) const {
        return data_[size_t(flat_index(std::span(idx.begin(), idx.size())))];
    }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    // Same storage, new extents; element count must be preserved.
    Tensor reshape(Shape new_shape) const {
        validate_shape(new_shape);
        if (numel_of(new_shape) != size()) {
            throw ShapeError("reshape: " + shape_str(shape_) + " -> " +
                             shape_str(new_shape) + " changes element count");
        }
        Tensor t;
        t.shape_ = std::move(new_shape);
        t.data_ = data_;
        return t;
    }

    template <typename Other>
    Tensor<Other> cast() const {
        Tensor<Other> t(shape_);
        for (int64_t i = 0; i < size(); ++i) t[i] = Other(data_[size_t(i)]);
        return t;
    }

    static int64_t numel_of(const Shape& shape) {
        int64_t n = 1;
        for (int64_t e : shape) n *= e;
        return n;
    }

  private:
    static void validate_shape(const Shape& shape) {
        if (shape.empty()) throw ShapeError("tensor rank must be >= 1");
        for (int64_t e : shape) {
            if (e < 1) {
                throw ShapeError("non-positive extent in shape " + shape_str(shape));
            }
        }
    }

    Shape shape_;
    std::vector<Scalar> data_;
};

template <typename Scalar>
using MatrixRM = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Views a contiguous tensor as a rows x cols row-major matrix.
template <typename Scalar>
Eigen::Map<MatrixRM<Scalar>> as_matrix(Tensor<Scalar>& t, int64_t rows, int64_t cols) {
    if (rows * cols != t.size()) {
        throw ShapeError("as_matrix: " + std::to_string(rows) + "x" +
                         std::to_string(cols) + " view over " +
                         std::to_string(t.size()) + " elements");
    }
    return Eigen::Map<MatrixRM<Scalar>>(t.data(), rows, cols);
}

template <typename Scalar>
Eigen::Map<const MatrixRM<Scalar>> as_matrix(const Tensor<Scalar>& t, int64_t rows,
                                             int64_t cols) {
    if (rows * cols != t.size()) {
        throw ShapeError("as_matrix: " + std::to_string(rows) + "x" +
                         std::to_string(cols) + " view over " +
                         std::to_string(t.size()) + " elements");
    }
    return Eigen::Map<const MatrixRM<Scalar>>(t.data(), rows, cols);
}

namespace detail {
template <typename Scalar>
void require_same_shape(const Tensor<Scalar>& a, const Tensor<Scalar>& b,
                        const char* op) {
    if (!a.same_shape(b)) {
        throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                         " vs " + shape_str(b.shape()));
    }
}
}  // namespace detail

template <typename Scalar>
Tensor<Scalar> add(const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
    detail::require_same_shape(a, b, "add");
    Tensor<Scalar> out(a.shape());
    for (int64_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
    return out;
}

template <typename Scalar>
Tensor<Scalar> sub(const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
    detail::require_same_shape(a, b, "sub");
    Tensor<Scalar> out(a.shape());
    for (int64_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
    return out;
}

// Hadamard product. No broadcasting anywhere in this library: shapes must
// match exactly.
template <typename Scalar>
Tensor<Scalar> mul(const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
    detail::require_same_shape(a, b, "mul");
    Tensor<Scalar> out(a.shape());
    for (int64_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
    return out;
}

template <typename Scalar>
Tensor<Scalar> scale(const Tensor<Scalar>& a, Scalar s) {
    Tensor<Scalar> out(a.shape());
    for (int64_t i = 0; i < a.size(); ++i) out[i] = a[i] * s;
    return out;
}

template <typename Scalar>
Tensor<Scalar> relu(const Tensor<Scalar>& a) {
    Tensor<Scalar> out(a.shape());
    for (int64_t i = 0; i < a.size(); ++i) out[i] = a[i] > Scalar(0) ? a[i] : Scalar(0);
    return out;
}

// sigmoid(x) = 1/(1+exp(-x)), evaluated on the non-overflowing branch. The
// result is pinned to the open interval (0,1): beyond |x| ~ 17 (f32) / 36
// (f64) the exact value is closer to 0/1 than one ulp, and downstream gate
// semantics require strict interior values.
template <typename Scalar>
Scalar sigmoid_scalar(Scalar x) {
    Scalar y;
    if (x >= Scalar(0)) {
        y = Scalar(1) / (Scalar(1) + std::exp(-x));
    } else {
        const Scalar e = std::exp(x);
        y = e / (Scalar(1) + e);
    }
    const Scalar lo = std::numeric_limits<Scalar>::min();
    const Scalar hi = Scalar(1) - std::numeric_limits<Scalar>::epsilon() / Scalar(2);
    if (y < lo) y = lo;
    if (y > hi) y = hi;
    return y;
}

template <typename Scalar>
Tensor<Scalar> sigmoid(const Tensor<Scalar>& a) {
    Tensor<Scalar> out(a.shape());
    for (int64_t i = 0; i < a.size(); ++i) out[i] = sigmoid_scalar(a[i]);
    return out;
}

}  // namespace a3dc
