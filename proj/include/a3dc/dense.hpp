#pragma once

#include <cstdint>
#include <string>

#include <Eigen/Core>

#include "a3dc/tensor.hpp"

namespace a3dc {

template <typename Scalar>
struct DenseParams {
    Tensor<Scalar> weights;  // (fan_out, fan_in)
    Tensor<Scalar> bias;     // (fan_out)

    int64_t fan_in() const { return weights.extent(1); }
    int64_t fan_out() const { return weights.extent(0); }
};

template <typename Scalar>
struct DenseGrads {
    Tensor<Scalar> weights;
    Tensor<Scalar> bias;
    Tensor<Scalar> input;
};

namespace detail {
template <typename Scalar>
void check_dense_args(const Tensor<Scalar>& x, const DenseParams<Scalar>& p) {
    if (x.rank() != 2) {
        throw ShapeError("dense: input must be rank 2 (N, fan_in), got " +
                         shape_str(x.shape()));
    }
    if (p.weights.rank() != 2 || p.bias.rank() != 1 ||
        p.bias.extent(0) != p.fan_out()) {
        throw ShapeError("dense: malformed parameters, weights " +
                         shape_str(p.weights.shape()) + " bias " +
                         shape_str(p.bias.shape()));
    }
    if (x.extent(1) != p.fan_in()) {
        throw ShapeError("dense: input width " + std::to_string(x.extent(1)) +
                         " != fan_in " + std::to_string(p.fan_in()));
    }
}
}  // namespace detail

// out = x * W^T + bias, per row.
template <typename Scalar>
Tensor<Scalar> dense_forward(const Tensor<Scalar>& x, const DenseParams<Scalar>& p) {
    detail::check_dense_args(x, p);
    const int64_t N = x.extent(0);
    Tensor<Scalar> out({N, p.fan_out()});
    auto x_mat = as_matrix(x, N, p.fan_in());
    auto w_mat = as_matrix(p.weights, p.fan_out(), p.fan_in());
    auto out_mat = as_matrix(out, N, p.fan_out());
    out_mat.noalias() = x_mat * w_mat.transpose();
    for (int64_t n = 0; n < N; ++n) {
        for (int64_t j = 0; j < p.fan_out(); ++j) out_mat(n, j) += p.bias[j];
    }
    return out;
}

// dW = grad_out^T * x, db = column sums of grad_out, dx = grad_out * W.
template <typename Scalar>
DenseGrads<Scalar> dense_backward(const Tensor<Scalar>& x, const DenseParams<Scalar>& p,
                                  const Tensor<Scalar>& grad_out) {
    detail::check_dense_args(x, p);
    const int64_t N = x.extent(0);
    const Shape expect{N, p.fan_out()};
    if (grad_out.shape() != expect) {
        throw ShapeError("dense_backward: grad_out " + shape_str(grad_out.shape()) +
                         " does not match output " + shape_str(expect));
    }
    DenseGrads<Scalar> g;
    g.weights = Tensor<Scalar>(p.weights.shape());
    g.bias = Tensor<Scalar>(p.bias.shape());
    g.input = Tensor<Scalar>(x.shape());

    auto x_mat = as_matrix(x, N, p.fan_in());
    auto w_mat = as_matrix(p.weights, p.fan_out(), p.fan_in());
    auto go_mat = as_matrix(grad_out, N, p.fan_out());
    auto gw_mat = as_matrix(g.weights, p.fan_out(), p.fan_in());
    auto gx_mat = as_matrix(g.input, N, p.fan_in());

    gw_mat.noalias() = go_mat.transpose() * x_mat;
    gx_mat.noalias() = go_mat * w_mat;
    for (int64_t j = 0; j < p.fan_out(); ++j) g.bias[j] = go_mat.col(j).sum();
    return g;
}

}  // namespace a3dc
