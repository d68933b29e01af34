#pragma once

#include <cstdint>
#include <string>

#include "a3dc/conv3d.hpp"
#include "a3dc/tensor.hpp"

namespace a3dc {

namespace detail {

inline void check_pool_args(const Shape& x_shape, const Dims3& k, const Dims3& s,
                            Dims3& out_dims) {
    if (x_shape.size() != 5) {
        throw ShapeError("avgpool3d: input must be rank 5 (N,C,T,H,W), got " +
                         shape_str(x_shape));
    }
    for (int a = 0; a < 3; ++a) {
        const int64_t in = x_shape[size_t(2 + a)];
        const int64_t kk = k[size_t(a)];
        const int64_t ss = s[size_t(a)];
        if (kk < 1 || ss < 1) {
            throw ShapeError("avgpool3d: kernel/stride must be >= 1 on axis " +
                             std::to_string(a));
        }
        if (kk > in) {
            throw ShapeError("avgpool3d: window " + std::to_string(kk) +
                             " larger than input extent " + std::to_string(in) +
                             " on axis " + std::to_string(a));
        }
        // Windows must tile the input exactly; silently dropping a remainder
        // or overhanging the edge is an error.
        if ((in - kk) % ss != 0) {
            throw ShapeError("avgpool3d: axis " + std::to_string(a) + " extent " +
                             std::to_string(in) + " not tiled by window " +
                             std::to_string(kk) + " stride " + std::to_string(ss));
        }
        out_dims[size_t(a)] = (in - kk) / ss + 1;
    }
}

}  // namespace detail

// Mean over each kT x kH x kW window, per sample and channel.
template <typename Scalar>
Tensor<Scalar> avgpool3d_forward(const Tensor<Scalar>& x, const Dims3& kernel,
                                 const Dims3& stride) {
    Dims3 o;
    detail::check_pool_args(x.shape(), kernel, stride, o);
    const int64_t N = x.extent(0), C = x.extent(1);
    const int64_t T = x.extent(2), H = x.extent(3), W = x.extent(4);
    const Scalar inv = Scalar(1) / Scalar(kernel[0] * kernel[1] * kernel[2]);

    Tensor<Scalar> out({N, C, o[0], o[1], o[2]});
    int64_t idx = 0;
    for (int64_t n = 0; n < N; ++n) {
        for (int64_t c = 0; c < C; ++c) {
            const Scalar* xc = x.data() + (n * C + c) * T * H * W;
            for (int64_t to = 0; to < o[0]; ++to) {
                for (int64_t ho = 0; ho < o[1]; ++ho) {
                    for (int64_t wo = 0; wo < o[2]; ++wo, ++idx) {
                        Scalar acc = 0;
                        const int64_t t0 = to * stride[0];
                        const int64_t h0 = ho * stride[1];
                        const int64_t w0 = wo * stride[2];
                        for (int64_t i = 0; i < kernel[0]; ++i) {
                            for (int64_t j = 0; j < kernel[1]; ++j) {
                                const Scalar* row = xc + ((t0 + i) * H + h0 + j) * W + w0;
                                for (int64_t l = 0; l < kernel[2]; ++l) acc += row[l];
                            }
                        }
                        out[idx] = acc * inv;
                    }
                }
            }
        }
    }
    return out;
}

// Each input element accumulates grad_out / window_size from every window
// containing it.
template <typename Scalar>
Tensor<Scalar> avgpool3d_backward(const Shape& x_shape, const Dims3& kernel,
                                  const Dims3& stride, const Tensor<Scalar>& grad_out) {
    Dims3 o;
    detail::check_pool_args(x_shape, kernel, stride, o);
    const int64_t N = x_shape[0], C = x_shape[1];
    const int64_t T = x_shape[2], H = x_shape[3], W = x_shape[4];
    const Shape expect{N, C, o[0], o[1], o[2]};
    if (grad_out.shape() != expect) {
        throw ShapeError("avgpool3d_backward: grad_out " + shape_str(grad_out.shape()) +
                         " does not match pooled shape " + shape_str(expect));
    }
    const Scalar inv = Scalar(1) / Scalar(kernel[0] * kernel[1] * kernel[2]);

    Tensor<Scalar> gx(x_shape);
    int64_t idx = 0;
    for (int64_t n = 0; n < N; ++n) {
        for (int64_t c = 0; c < C; ++c) {
            Scalar* xc = gx.data() + (n * C + c) * T * H * W;
            for (int64_t to = 0; to < o[0]; ++to) {
                for (int64_t ho = 0; ho < o[1]; ++ho) {
                    for (int64_t wo = 0; wo < o[2]; ++wo, ++idx) {
                        const Scalar g = grad_out[idx] * inv;
                        const int64_t t0 = to * stride[0];
                        const int64_t h0 = ho * stride[1];
                        const int64_t w0 = wo * stride[2];
                        for (int64_t i = 0; i < kernel[0]; ++i) {
                            for (int64_t j = 0; j < kernel[1]; ++j) {
                                Scalar* row = xc + ((t0 + i) * H + h0 + j) * W + w0;
                                for (int64_t l = 0; l < kernel[2]; ++l) row[l] += g;
                            }
                        }
                    }
                }
            }
        }
    }
    return gx;
}

}  // namespace a3dc
