#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "a3dc/attention.hpp"
#include "a3dc/conv3d.hpp"
#include "a3dc/dense.hpp"
#include "a3dc/dropout.hpp"
#include "a3dc/optim.hpp"
#include "a3dc/pool3d.hpp"
#include "a3dc/rng.hpp"
#include "a3dc/softmax.hpp"
#include "a3dc/tensor.hpp"

namespace a3dc {

// Architecture hyperparameters for the pipeline
//   conv3d -> ReLU -> attention gate -> avgpool3d -> flatten
//          -> dense(hidden) -> ReLU -> dropout -> dense(K)
// attention_enabled=false removes the gate stage entirely (the ablation
// baseline); global_pool averages each channel over all of T'xH'xW'.
struct ModelConfig {
    int64_t in_channels = 3;
    int64_t frames = 16;
    int64_t height = 112;
    int64_t width = 112;
    int64_t conv_out_channels = 64;
    Dims3 conv_kernel{3, 3, 3};
    Dims3 conv_stride{1, 1, 1};
    Dims3 conv_padding{1, 1, 1};
    bool attention_enabled = true;
    bool attention_parameterized = true;
    bool global_pool = false;
    Dims3 pool_kernel{2, 2, 2};
    Dims3 pool_stride{2, 2, 2};
    int64_t hidden_width = 512;
    double dropout_rate = 0.25;
    int64_t num_classes = 101;
};

struct StageShapes {
    Dims3 conv_out;   // (T',H',W') after convolution
    Dims3 pool_kernel;
    Dims3 pool_stride;
    Dims3 pool_out;
    int64_t flatten_width = 0;
};

// Walks the stage chain once and verifies every extent; throws ConfigError
// naming the first stage that cannot produce a valid shape.
inline StageShapes validate_config(const ModelConfig& cfg) {
    StageShapes s;
    if (cfg.in_channels < 1 || cfg.frames < 1 || cfg.height < 1 || cfg.width < 1) {
        throw ConfigError("config: input extents must be >= 1");
    }
    if (cfg.conv_out_channels < 1) {
        throw ConfigError("config: conv stage needs >= 1 output channel");
    }
    if (cfg.hidden_width < 1 || cfg.num_classes < 1) {
        throw ConfigError("config: dense stage widths must be >= 1");
    }
    if (cfg.dropout_rate < 0.0 || cfg.dropout_rate >= 1.0) {
        throw ConfigError("config: dropout rate must be in [0,1)");
    }
    const int64_t in[3] = {cfg.frames, cfg.height, cfg.width};
    for (int a = 0; a < 3; ++a) {
        if (cfg.conv_kernel[size_t(a)] < 1 || cfg.conv_stride[size_t(a)] < 1 ||
            cfg.conv_padding[size_t(a)] < 0) {
            throw ConfigError("config: conv stage kernel/stride/padding invalid on axis " +
                              std::to_string(a));
        }
        s.conv_out[size_t(a)] =
            conv_out_extent(in[a], cfg.conv_kernel[size_t(a)],
                            cfg.conv_stride[size_t(a)], cfg.conv_padding[size_t(a)]);
        if (s.conv_out[size_t(a)] < 1) {
            throw ConfigError("config: conv stage output extent <= 0 on axis " +
                              std::to_string(a));
        }
    }
    s.pool_kernel = cfg.global_pool ? s.conv_out : cfg.pool_kernel;
    s.pool_stride = cfg.global_pool ? Dims3{1, 1, 1} : cfg.pool_stride;
    for (int a = 0; a < 3; ++a) {
        const int64_t pin = s.conv_out[size_t(a)];
        const int64_t k = s.pool_kernel[size_t(a)];
        const int64_t st = s.pool_stride[size_t(a)];
        if (k < 1 || st < 1 || k > pin || (pin - k) % st != 0) {
            throw ConfigError("config: pool stage window " + std::to_string(k) +
                              " stride " + std::to_string(st) +
                              " does not tile extent " + std::to_string(pin) +
                              " on axis " + std::to_string(a));
        }
        s.pool_out[size_t(a)] = (pin - k) / st + 1;
    }
    s.flatten_width =
        cfg.conv_out_channels * s.pool_out[0] * s.pool_out[1] * s.pool_out[2];
    return s;
}

template <typename Scalar>
struct Model {
    ModelConfig config;
    StageShapes shapes;
    ParamMap<Scalar> params;  // conv.*, gate.* (optional), fc1.*, fc2.*

    Conv3dParams<Scalar> conv() const {
        return {params.at("conv.weight"), params.at("conv.bias"), config.conv_stride,
                config.conv_padding};
    }
    AttentionGateParams<Scalar> gate() const {
        AttentionGateParams<Scalar> g;
        g.parameterized = config.attention_parameterized;
        if (g.parameterized) {
            g.gate_weights = params.at("gate.weight");
            g.gate_bias = params.at("gate.bias");
        }
        return g;
    }
    DenseParams<Scalar> fc1() const {
        return {params.at("fc1.weight"), params.at("fc1.bias")};
    }
    DenseParams<Scalar> fc2() const {
        return {params.at("fc2.weight"), params.at("fc2.bias")};
    }

    int64_t param_count() const {
        int64_t n = 0;
        for (const auto& [name, t] : params) n += t.size();
        return n;
    }
};

namespace detail {

// Kaiming-uniform: U(-b, b) with b = sqrt(6/fan_in), zero biases. Each
// parameter draws from its own stream keyed by name, so initialization does
// not depend on construction order.
template <typename Scalar>
Tensor<Scalar> kaiming_uniform(const Shape& shape, int64_t fan_in, Rng& rng) {
    Tensor<Scalar> t(shape);
    const Scalar bound = Scalar(std::sqrt(6.0 / double(fan_in)));
    for (int64_t i = 0; i < t.size(); ++i) {
        t[i] = rng.uniform(Scalar(-bound), bound);
    }
    return t;
}

template <typename Scalar>
void init_param(ParamMap<Scalar>& params, const std::string& name, Shape shape,
                int64_t fan_in, uint64_t seed) {
    Rng rng(derive_seed(seed, "init", fnv1a64(name)));
    params.emplace(name, kaiming_uniform<Scalar>(shape, fan_in, rng));
}

}  // namespace detail

template <typename Scalar>
Model<Scalar> build_model(const ModelConfig& cfg, uint64_t seed) {
    Model<Scalar> m;
    m.config = cfg;
    m.shapes = validate_config(cfg);

    const Dims3 k = cfg.conv_kernel;
    const int64_t conv_fan_in = cfg.in_channels * k[0] * k[1] * k[2];
    detail::init_param<Scalar>(m.params, "conv.weight",
                               {cfg.conv_out_channels, cfg.in_channels, k[0], k[1], k[2]},
                               conv_fan_in, seed);
    m.params.emplace("conv.bias", Tensor<Scalar>({cfg.conv_out_channels}));

    if (cfg.attention_enabled && cfg.attention_parameterized) {
        const int64_t c = cfg.conv_out_channels;
        detail::init_param<Scalar>(m.params, "gate.weight", {c, c, 1, 1, 1}, c, seed);
        m.params.emplace("gate.bias", Tensor<Scalar>({c}));
    }

    detail::init_param<Scalar>(m.params, "fc1.weight",
                               {cfg.hidden_width, m.shapes.flatten_width},
                               m.shapes.flatten_width, seed);
    m.params.emplace("fc1.bias", Tensor<Scalar>({cfg.hidden_width}));
    detail::init_param<Scalar>(m.params, "fc2.weight",
                               {cfg.num_classes, cfg.hidden_width}, cfg.hidden_width,
                               seed);
    m.params.emplace("fc2.bias", Tensor<Scalar>({cfg.num_classes}));
    return m;
}

// Per-stage activations kept for the backward pass and for gate inspection.
template <typename Scalar>
struct ForwardTrace {
    Tensor<Scalar> conv_out;
    Tensor<Scalar> relu_out;
    Tensor<Scalar> gate;    // empty when attention disabled
    Tensor<Scalar> gated;
    Tensor<Scalar> pooled;
    Tensor<Scalar> flat;
    Tensor<Scalar> fc1_out;
    Tensor<Scalar> fc1_relu;
    Tensor<Scalar> dropout_mask;
    Tensor<Scalar> dropout_out;
    Tensor<Scalar> logits;
};

template <typename Scalar>
Tensor<Scalar> forward(const Model<Scalar>& m, const Tensor<Scalar>& x, Mode mode,
                       Rng& rng, ForwardTrace<Scalar>* trace = nullptr) {
    const ModelConfig& cfg = m.config;
    if (x.rank() != 5) {
        throw ShapeError("forward: input stage expects rank 5, got " +
                         shape_str(x.shape()));
    }
    const Shape expect{x.extent(0), cfg.in_channels, cfg.frames, cfg.height,
                       cfg.width};
    if (x.shape() != expect) {
        throw ShapeError("forward: input stage expects " + shape_str(expect) +
                         ", got " + shape_str(x.shape()));
    }
    const int64_t N = x.extent(0);
    ForwardTrace<Scalar> local;
    ForwardTrace<Scalar>& t = trace ? *trace : local;

    t.conv_out = conv3d_forward(x, m.conv());
    t.relu_out = relu(t.conv_out);
    if (cfg.attention_enabled) {
        AttentionGateOut<Scalar> att = attention_gate_forward(t.relu_out, m.gate());
        t.gate = std::move(att.gate);
        t.gated = std::move(att.gated);
    } else {
        t.gated = t.relu_out;
    }
    t.pooled = avgpool3d_forward(t.gated, m.shapes.pool_kernel, m.shapes.pool_stride);
    t.flat = t.pooled.reshape({N, m.shapes.flatten_width});
    t.fc1_out = dense_forward(t.flat, m.fc1());
    t.fc1_relu = relu(t.fc1_out);
    DropoutOut<Scalar> drop = dropout(t.fc1_relu, cfg.dropout_rate, mode, rng);
    t.dropout_out = std::move(drop.out);
    t.dropout_mask = std::move(drop.mask);
    t.logits = dense_forward(t.dropout_out, m.fc2());
    return t.logits;
}

// Eval-mode forward needs no randomness.
template <typename Scalar>
Tensor<Scalar> forward_eval(const Model<Scalar>& m, const Tensor<Scalar>& x,
                            ForwardTrace<Scalar>* trace = nullptr) {
    Rng unused(0);
    return forward(m, x, Mode::Eval, unused, trace);
}

template <typename Scalar>
struct BackwardOut {
    Scalar loss;
    ParamMap<Scalar> grads;
    Tensor<Scalar> grad_input;
    Tensor<Scalar> logits;
};

template <typename Scalar>
BackwardOut<Scalar> model_backward(const Model<Scalar>& m, const Tensor<Scalar>& x,
                                   std::span<const int> labels, Mode mode, Rng& rng) {
    const ModelConfig& cfg = m.config;
    ForwardTrace<Scalar> t;
    forward(m, x, mode, rng, &t);

    BackwardOut<Scalar> out;
    SoftmaxXentOut<Scalar> sx = softmax_cross_entropy(t.logits, labels);
    out.loss = sx.loss;
    out.logits = t.logits;

    DenseGrads<Scalar> g_fc2 = dense_backward(t.dropout_out, m.fc2(), sx.grad_logits);
    out.grads.emplace("fc2.weight", std::move(g_fc2.weights));
    out.grads.emplace("fc2.bias", std::move(g_fc2.bias));

    Tensor<Scalar> grad = mul(g_fc2.input, t.dropout_mask);
    for (int64_t i = 0; i < grad.size(); ++i) {
        if (t.fc1_out[i] <= Scalar(0)) grad[i] = Scalar(0);
    }
    DenseGrads<Scalar> g_fc1 = dense_backward(t.flat, m.fc1(), grad);
    out.grads.emplace("fc1.weight", std::move(g_fc1.weights));
    out.grads.emplace("fc1.bias", std::move(g_fc1.bias));

    Tensor<Scalar> grad_pooled = g_fc1.input.reshape(t.pooled.shape());
    Tensor<Scalar> grad_gated = avgpool3d_backward(
        t.gated.shape(), m.shapes.pool_kernel, m.shapes.pool_stride, grad_pooled);

    Tensor<Scalar> grad_relu;
    if (cfg.attention_enabled) {
        AttentionGateGrads<Scalar> g_att =
            attention_gate_backward(t.relu_out, m.gate(), grad_gated);
        if (cfg.attention_parameterized) {
            out.grads.emplace("gate.weight", std::move(g_att.gate_weights));
            out.grads.emplace("gate.bias", std::move(g_att.gate_bias));
        }
        grad_relu = std::move(g_att.input);
    } else {
        grad_relu = std::move(grad_gated);
    }
    for (int64_t i = 0; i < grad_relu.size(); ++i) {
        if (t.conv_out[i] <= Scalar(0)) grad_relu[i] = Scalar(0);
    }
    Conv3dGrads<Scalar> g_conv = conv3d_backward(x, m.conv(), grad_relu);
    out.grads.emplace("conv.weight", std::move(g_conv.weights));
    out.grads.emplace("conv.bias", std::move(g_conv.bias));
    out.grad_input = std::move(g_conv.input);
    return out;
}

}  // namespace a3dc
