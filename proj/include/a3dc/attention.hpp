#pragma once

#include <cstdint>
#include <utility>

#include "a3dc/conv3d.hpp"
#include "a3dc/tensor.hpp"

namespace a3dc {

// Sigmoid gate over extracted features. Parameterized mode projects the
// features through a learned pointwise (1x1x1, channel-mixing) convolution
// before the sigmoid; unparameterized mode gates on the features directly.
// Either way the gated output is feature * gate, elementwise.
template <typename Scalar>
struct AttentionGateParams {
    bool parameterized = false;
    Tensor<Scalar> gate_weights;  // (C, C, 1, 1, 1), parameterized only
    Tensor<Scalar> gate_bias;     // (C), parameterized only

    Conv3dParams<Scalar> as_conv() const {
        return Conv3dParams<Scalar>{gate_weights, gate_bias, {1, 1, 1}, {0, 0, 0}};
    }
};

template <typename Scalar>
struct AttentionGateOut {
    Tensor<Scalar> gated;  // f * gate
    Tensor<Scalar> gate;   // sigmoid(a), retained for inspection and backward
};

template <typename Scalar>
struct AttentionGateGrads {
    Tensor<Scalar> gate_weights;  // empty unless parameterized
    Tensor<Scalar> gate_bias;
    Tensor<Scalar> input;
};

template <typename Scalar>
AttentionGateOut<Scalar> attention_gate_forward(const Tensor<Scalar>& f,
                                                const AttentionGateParams<Scalar>& p) {
    if (f.rank() != 5) {
        throw ShapeError("attention_gate: input must be rank 5, got " +
                         shape_str(f.shape()));
    }
    AttentionGateOut<Scalar> out;
    if (p.parameterized) {
        if (p.gate_weights.rank() != 5 || p.gate_weights.extent(0) != f.extent(1) ||
            p.gate_weights.extent(1) != f.extent(1) || p.gate_weights.extent(2) != 1 ||
            p.gate_weights.extent(3) != 1 || p.gate_weights.extent(4) != 1) {
            throw ShapeError("attention_gate: gate weights " +
                             shape_str(p.gate_weights.shape()) +
                             " must be (C,C,1,1,1) with C = " +
                             std::to_string(f.extent(1)));
        }
        out.gate = sigmoid(conv3d_forward(f, p.as_conv()));
    } else {
        out.gate = sigmoid(f);
    }
    out.gated = mul(f, out.gate);
    return out;
}

// gated = f * sigmoid(a(f)): the product rule contributes grad through the
// feature factor plus the chain through the gate, sigma' = g*(1-g).
template <typename Scalar>
AttentionGateGrads<Scalar> attention_gate_backward(const Tensor<Scalar>& f,
                                                   const AttentionGateParams<Scalar>& p,
                                                   const Tensor<Scalar>& grad_out) {
    AttentionGateOut<Scalar> fwd = attention_gate_forward(f, p);
    if (!grad_out.same_shape(fwd.gated)) {
        throw ShapeError("attention_gate_backward: grad_out " +
                         shape_str(grad_out.shape()) + " vs output " +
                         shape_str(fwd.gated.shape()));
    }
    AttentionGateGrads<Scalar> g;
    const Tensor<Scalar>& gate = fwd.gate;

    // d(gated)/d(gate input a) = f * g * (1-g), applied to grad_out
    Tensor<Scalar> grad_a(f.shape());
    for (int64_t i = 0; i < f.size(); ++i) {
        grad_a[i] = grad_out[i] * f[i] * gate[i] * (Scalar(1) - gate[i]);
    }

    if (p.parameterized) {
        Conv3dGrads<Scalar> cg = conv3d_backward(f, p.as_conv(), grad_a);
        g.gate_weights = std::move(cg.weights);
        g.gate_bias = std::move(cg.bias);
        g.input = std::move(cg.input);
        for (int64_t i = 0; i < f.size(); ++i) g.input[i] += grad_out[i] * gate[i];
    } else {
        g.input = Tensor<Scalar>(f.shape());
        for (int64_t i = 0; i < f.size(); ++i) {
            g.input[i] = grad_out[i] * gate[i] + grad_a[i];
        }
    }
    return g;
}

}  // namespace a3dc
