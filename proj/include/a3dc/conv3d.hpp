#pragma once

#include <array>
#include <cstdint>
#include <string>

#include <Eigen/Core>

#include "a3dc/tensor.hpp"

namespace a3dc {

using Dims3 = std::array<int64_t, 3>;  // (T, H, W) order

template <typename Scalar>
struct Conv3dParams {
    Tensor<Scalar> weights;  // (C_out, C_in, kT, kH, kW)
    Tensor<Scalar> bias;     // (C_out)
    Dims3 stride{1, 1, 1};
    Dims3 padding{0, 0, 0};  // zero padding

    int64_t out_channels() const { return weights.extent(0); }
    int64_t in_channels() const { return weights.extent(1); }
    Dims3 kernel() const {
        return {weights.extent(2), weights.extent(3), weights.extent(4)};
    }
};

template <typename Scalar>
struct Conv3dGrads {
    Tensor<Scalar> weights;
    Tensor<Scalar> bias;
    Tensor<Scalar> input;
};

inline int64_t conv_out_extent(int64_t in, int64_t k, int64_t s, int64_t p) {
    return (in + 2 * p - k) / s + 1;
}

namespace detail {

template <typename Scalar>
void check_conv_args(const Tensor<Scalar>& x, const Conv3dParams<Scalar>& p,
                     Dims3& out_dims) {
    if (x.rank() != 5) {
        throw ShapeError("conv3d: input must be rank 5 (N,C,T,H,W), got " +
                         shape_str(x.shape()));
    }
    if (p.weights.rank() != 5 || p.bias.rank() != 1 ||
        p.bias.extent(0) != p.out_channels()) {
        throw ShapeError("conv3d: malformed parameters, weights " +
                         shape_str(p.weights.shape()) + " bias " +
                         shape_str(p.bias.shape()));
    }
    if (x.extent(1) != p.in_channels()) {
        throw ShapeError("conv3d: input has " + std::to_string(x.extent(1)) +
                         " channels, kernel expects " +
                         std::to_string(p.in_channels()));
    }
    const Dims3 k = p.kernel();
    for (int a = 0; a < 3; ++a) {
        if (k[size_t(a)] < 1 || p.stride[size_t(a)] < 1 || p.padding[size_t(a)] < 0) {
            throw ShapeError("conv3d: kernel/stride/padding invalid on axis " +
                             std::to_string(a));
        }
        out_dims[size_t(a)] = conv_out_extent(x.extent(2 + a), k[size_t(a)],
                                              p.stride[size_t(a)], p.padding[size_t(a)]);
        if (out_dims[size_t(a)] < 1) {
            throw ShapeError("conv3d: non-positive output extent on axis " +
                             std::to_string(a) + " for input " + shape_str(x.shape()));
        }
    }
}

// Gathers the receptive-field patches of one sample into a (C_in*kT*kH*kW) x
// (To*Ho*Wo) column-major matrix; out-of-bounds taps read as zero.
template <typename Scalar>
void im2col(const Scalar* x, int64_t C, int64_t T, int64_t H, int64_t W,
            const Dims3& k, const Dims3& s, const Dims3& p, const Dims3& o,
            Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& cols) {
    const int64_t K = C * k[0] * k[1] * k[2];
    const int64_t L = o[0] * o[1] * o[2];
    cols.resize(K, L);
    int64_t col = 0;
    for (int64_t to = 0; to < o[0]; ++to) {
        for (int64_t ho = 0; ho < o[1]; ++ho) {
            for (int64_t wo = 0; wo < o[2]; ++wo, ++col) {
                Scalar* dst = cols.data() + col * K;
                const int64_t t0 = to * s[0] - p[0];
                const int64_t h0 = ho * s[1] - p[1];
                const int64_t w0 = wo * s[2] - p[2];
                for (int64_t c = 0; c < C; ++c) {
                    const Scalar* xc = x + c * T * H * W;
                    for (int64_t i = 0; i < k[0]; ++i) {
                        const int64_t t = t0 + i;
                        for (int64_t j = 0; j < k[1]; ++j) {
                            const int64_t h = h0 + j;
                            const bool th_ok = t >= 0 && t < T && h >= 0 && h < H;
                            const Scalar* row = xc + (t * H + h) * W;
                            for (int64_t l = 0; l < k[2]; ++l, ++dst) {
                                const int64_t w = w0 + l;
                                *dst = (th_ok && w >= 0 && w < W) ? row[w] : Scalar(0);
                            }
                        }
                    }
                }
            }
        }
    }
}

// Scatter-adds a column matrix back onto the (padded) input grid; the adjoint
// of im2col.
template <typename Scalar>
void col2im_add(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& cols,
                Scalar* x, int64_t C, int64_t T, int64_t H, int64_t W, const Dims3& k,
                const Dims3& s, const Dims3& p, const Dims3& o) {
    const int64_t K = C * k[0] * k[1] * k[2];
    int64_t col = 0;
    for (int64_t to = 0; to < o[0]; ++to) {
        for (int64_t ho = 0; ho < o[1]; ++ho) {
            for (int64_t wo = 0; wo < o[2]; ++wo, ++col) {
                const Scalar* src = cols.data() + col * K;
                const int64_t t0 = to * s[0] - p[0];
                const int64_t h0 = ho * s[1] - p[1];
                const int64_t w0 = wo * s[2] - p[2];
                for (int64_t c = 0; c < C; ++c) {
                    Scalar* xc = x + c * T * H * W;
                    for (int64_t i = 0; i < k[0]; ++i) {
                        const int64_t t = t0 + i;
                        for (int64_t j = 0; j < k[1]; ++j) {
                            const int64_t h = h0 + j;
                            const bool th_ok = t >= 0 && t < T && h >= 0 && h < H;
                            Scalar* row = xc + (t * H + h) * W;
                            for (int64_t l = 0; l < k[2]; ++l, ++src) {
                                const int64_t w = w0 + l;
                                if (th_ok && w >= 0 && w < W) row[w] += *src;
                            }
                        }
                    }
                }
            }
        }
    }
}

}  // namespace detail

// out[n,o,t,h,w] = bias[o] + sum over (c,i,j,l) of
//   x[n, c, t*sT+i-pT, h*sH+j-pH, w*sW+l-pW] * weights[o,c,i,j,l]
// with x read as zero outside its bounds. Internally each sample is lowered
// to a patch matrix and the contraction runs as one GEMM per sample.
template <typename Scalar>
Tensor<Scalar> conv3d_forward(const Tensor<Scalar>& x, const Conv3dParams<Scalar>& p) {
    Dims3 o;
    detail::check_conv_args(x, p, o);
    const int64_t N = x.extent(0), C = x.extent(1);
    const int64_t T = x.extent(2), H = x.extent(3), W = x.extent(4);
    const int64_t Co = p.out_channels();
    const Dims3 k = p.kernel();
    const int64_t K = C * k[0] * k[1] * k[2];
    const int64_t L = o[0] * o[1] * o[2];

    Tensor<Scalar> out({N, Co, o[0], o[1], o[2]});
    Eigen::Map<const MatrixRM<Scalar>> w_mat(p.weights.data(), Co, K);
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> cols;
    for (int64_t n = 0; n < N; ++n) {
        detail::im2col(x.data() + n * C * T * H * W, C, T, H, W, k, p.stride,
                       p.padding, o, cols);
        Eigen::Map<MatrixRM<Scalar>> out_mat(out.data() + n * Co * L, Co, L);
        out_mat.noalias() = w_mat * cols;
        for (int64_t c = 0; c < Co; ++c) out_mat.row(c).array() += p.bias[c];
    }
    return out;
}

template <typename Scalar>
Conv3dGrads<Scalar> conv3d_backward(const Tensor<Scalar>& x,
                                    const Conv3dParams<Scalar>& p,
                                    const Tensor<Scalar>& grad_out) {
    Dims3 o;
    detail::check_conv_args(x, p, o);
    const int64_t N = x.extent(0), C = x.extent(1);
    const int64_t T = x.extent(2), H = x.extent(3), W = x.extent(4);
    const int64_t Co = p.out_channels();
    const Dims3 k = p.kernel();
    const int64_t K = C * k[0] * k[1] * k[2];
    const int64_t L = o[0] * o[1] * o[2];
    const Shape expect{N, Co, o[0], o[1], o[2]};
    if (grad_out.shape() != expect) {
        throw ShapeError("conv3d_backward: grad_out " + shape_str(grad_out.shape()) +
                         " does not match forward output " + shape_str(expect));
    }

    Conv3dGrads<Scalar> g;
    g.weights = Tensor<Scalar>(p.weights.shape());
    g.bias = Tensor<Scalar>(p.bias.shape());
    g.input = Tensor<Scalar>(x.shape());

    Eigen::Map<const MatrixRM<Scalar>> w_mat(p.weights.data(), Co, K);
    Eigen::Map<MatrixRM<Scalar>> gw_mat(g.weights.data(), Co, K);
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> cols;
    for (int64_t n = 0; n < N; ++n) {
        Eigen::Map<const MatrixRM<Scalar>> go_mat(grad_out.data() + n * Co * L, Co, L);
        detail::im2col(x.data() + n * C * T * H * W, C, T, H, W, k, p.stride,
                       p.padding, o, cols);
        gw_mat.noalias() += go_mat * cols.transpose();
        for (int64_t c = 0; c < Co; ++c) g.bias[c] += go_mat.row(c).sum();
        cols.noalias() = w_mat.transpose() * go_mat;
        detail::col2im_add(cols, g.input.data() + n * C * T * H * W, C, T, H, W, k,
                           p.stride, p.padding, o);
    }
    return g;
}

}  // namespace a3dc
