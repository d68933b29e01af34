#pragma once

#include <cstdint>

#include "a3dc/rng.hpp"
#include "a3dc/tensor.hpp"

namespace a3dc {

enum class Mode { Train, Eval };

template <typename Scalar>
struct DropoutOut {
    Tensor<Scalar> out;
    Tensor<Scalar> mask;  // 0 or 1/(1-rate) per element; all ones in eval mode
};

// Inverted dropout: surviving elements are scaled by 1/(1-rate) at train
// time so the eval path is an exact identity. One uniform draw per element
// in flat index order.
template <typename Scalar>
DropoutOut<Scalar> dropout(const Tensor<Scalar>& x, double rate, Mode mode, Rng& rng) {
    if (rate < 0.0 || rate >= 1.0) {
        throw ValueError("dropout: rate must be in [0,1), got " + std::to_string(rate));
    }
    DropoutOut<Scalar> r;
    if (mode == Mode::Eval || rate == 0.0) {
        r.out = x;
        r.mask = Tensor<Scalar>(x.shape(), Scalar(1));
        return r;
    }
    const Scalar keep = Scalar(1.0 / (1.0 - rate));
    r.out = Tensor<Scalar>(x.shape());
    r.mask = Tensor<Scalar>(x.shape());
    for (int64_t i = 0; i < x.size(); ++i) {
        const Scalar m = rng.next_double() < rate ? Scalar(0) : keep;
        r.mask[i] = m;
        r.out[i] = x[i] * m;
    }
    return r;
}

}  // namespace a3dc
