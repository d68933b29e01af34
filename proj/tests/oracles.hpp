#pragma once

// Brute-force reference implementations used only by tests. These stay
// deliberately naive (direct nested loops, no shared code with the library
// kernels) so they remain an independent check.

#include <cstdint>

#include "a3dc/conv3d.hpp"
#include "a3dc/dense.hpp"
#include "a3dc/rng.hpp"
#include "a3dc/tensor.hpp"

namespace oracle {

template <typename Scalar>
a3dc::Tensor<Scalar> conv3d(const a3dc::Tensor<Scalar>& x,
                            const a3dc::Conv3dParams<Scalar>& p) {
    const int64_t N = x.extent(0), C = x.extent(1);
    const int64_t T = x.extent(2), H = x.extent(3), W = x.extent(4);
    const int64_t Co = p.weights.extent(0);
    const int64_t kT = p.weights.extent(2), kH = p.weights.extent(3),
                  kW = p.weights.extent(4);
    const int64_t sT = p.stride[0], sH = p.stride[1], sW = p.stride[2];
    const int64_t pT = p.padding[0], pH = p.padding[1], pW = p.padding[2];
    const int64_t To = (T + 2 * pT - kT) / sT + 1;
    const int64_t Ho = (H + 2 * pH - kH) / sH + 1;
    const int64_t Wo = (W + 2 * pW - kW) / sW + 1;

    a3dc::Tensor<Scalar> out({N, Co, To, Ho, Wo});
    for (int64_t n = 0; n < N; ++n)
        for (int64_t o = 0; o < Co; ++o)
            for (int64_t t = 0; t < To; ++t)
                for (int64_t h = 0; h < Ho; ++h)
                    for (int64_t w = 0; w < Wo; ++w) {
                        Scalar acc = p.bias.at({o});
                        for (int64_t c = 0; c < C; ++c)
                            for (int64_t i = 0; i < kT; ++i)
                                for (int64_t j = 0; j < kH; ++j)
                                    for (int64_t l = 0; l < kW; ++l) {
                                        const int64_t ti = t * sT + i - pT;
                                        const int64_t hi = h * sH + j - pH;
                                        const int64_t wi = w * sW + l - pW;
                                        if (ti < 0 || ti >= T || hi < 0 || hi >= H ||
                                            wi < 0 || wi >= W)
                                            continue;
                                        acc += x.at({n, c, ti, hi, wi}) *
                                               p.weights.at({o, c, i, j, l});
                                    }
                        out.at({n, o, t, h, w}) = acc;
                    }
    return out;
}

template <typename Scalar>
a3dc::Tensor<Scalar> avgpool3d(const a3dc::Tensor<Scalar>& x, const a3dc::Dims3& k,
                               const a3dc::Dims3& s) {
    const int64_t N = x.extent(0), C = x.extent(1);
    const int64_t To = (x.extent(2) - k[0]) / s[0] + 1;
    const int64_t Ho = (x.extent(3) - k[1]) / s[1] + 1;
    const int64_t Wo = (x.extent(4) - k[2]) / s[2] + 1;

    a3dc::Tensor<Scalar> out({N, C, To, Ho, Wo});
    for (int64_t n = 0; n < N; ++n)
        for (int64_t c = 0; c < C; ++c)
            for (int64_t t = 0; t < To; ++t)
                for (int64_t h = 0; h < Ho; ++h)
                    for (int64_t w = 0; w < Wo; ++w) {
                        Scalar acc = 0;
                        for (int64_t i = 0; i < k[0]; ++i)
                            for (int64_t j = 0; j < k[1]; ++j)
                                for (int64_t l = 0; l < k[2]; ++l)
                                    acc += x.at({n, c, t * s[0] + i, h * s[1] + j,
                                                 w * s[2] + l});
                        out.at({n, c, t, h, w}) = acc / Scalar(k[0] * k[1] * k[2]);
                    }
    return out;
}

template <typename Scalar>
a3dc::Tensor<Scalar> dense(const a3dc::Tensor<Scalar>& x,
                           const a3dc::DenseParams<Scalar>& p) {
    const int64_t N = x.extent(0), in = x.extent(1), out_w = p.weights.extent(0);
    a3dc::Tensor<Scalar> out({N, out_w});
    for (int64_t n = 0; n < N; ++n)
        for (int64_t o = 0; o < out_w; ++o) {
            Scalar acc = p.bias.at({o});
            for (int64_t i = 0; i < in; ++i) {
                acc += x.at({n, i}) * p.weights.at({o, i});
            }
            out.at({n, o}) = acc;
        }
    return out;
}

template <typename Scalar>
a3dc::Tensor<Scalar> random_tensor(const a3dc::Shape& shape, a3dc::Rng& rng,
                                   Scalar lo = Scalar(-1), Scalar hi = Scalar(1)) {
    a3dc::Tensor<Scalar> t(shape);
    for (int64_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
    return t;
}

}  // namespace oracle
