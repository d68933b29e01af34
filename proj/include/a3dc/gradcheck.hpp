#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "a3dc/attention.hpp"
#include "a3dc/conv3d.hpp"
#include "a3dc/dense.hpp"
#include "a3dc/dropout.hpp"
#include "a3dc/model.hpp"
#include "a3dc/pool3d.hpp"
#include "a3dc/rng.hpp"
#include "a3dc/softmax.hpp"
#include "a3dc/tensor.hpp"

namespace a3dc {

// Finite-difference verification of the analytic backward passes. Everything
// here runs in f64; instances are small enough to probe every element.

struct GradItem {
    std::string tensor;
    int64_t index = 0;
    double analytic = 0;
    double numeric = 0;
    double rel_err = 0;
};

struct GradReport {
    GradReport() = default;
    GradReport(std::string name_, double threshold_)
        : name(std::move(name_)), threshold(threshold_) {}

    std::string name;
    double threshold = 1e-4;
    double max_rel_err = 0;
    int64_t checked = 0;
    bool pass = true;
    std::vector<GradItem> worst;  // a few highest-error elements

    void absorb(const std::string& tensor, const Tensor<double>& analytic,
                const Tensor<double>& numeric) {
        for (int64_t i = 0; i < analytic.size(); ++i) {
            const double a = analytic[i], n = numeric[i];
            const double rel =
                std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-8});
            ++checked;
            if (rel > max_rel_err) max_rel_err = rel;
            if (rel > threshold) {
                pass = false;
                if (worst.size() < 8) worst.push_back({tensor, i, a, n, rel});
            }
        }
    }
};

// Central differences (f(x+h e_i) - f(x-h e_i)) / 2h over every element.
inline Tensor<double> fd_gradient(const std::function<double(const Tensor<double>&)>& f,
                                  Tensor<double> x, double h) {
    if (h <= 0) throw ValueError("fd_gradient: step must be positive");
    Tensor<double> g(x.shape());
    for (int64_t i = 0; i < x.size(); ++i) {
        const double saved = x[i];
        x[i] = saved + h;
        const double fp = f(x);
        x[i] = saved - h;
        const double fm = f(x);
        x[i] = saved;
        if (!std::isfinite(fp) || !std::isfinite(fm)) {
            throw NumericError("fd_gradient: non-finite loss probing element " +
                               std::to_string(i));
        }
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

namespace detail {

inline Tensor<double> random_tensor(const Shape& shape, Rng& rng, double lo = -1.0,
                                    double hi = 1.0) {
    Tensor<double> t(shape);
    for (int64_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
    return t;
}

// Scalar probe loss: a fixed random projection of the layer output.
inline double project(const Tensor<double>& out, const Tensor<double>& dir) {
    double s = 0;
    for (int64_t i = 0; i < out.size(); ++i) s += out[i] * dir[i];
    return s;
}

}  // namespace detail

inline GradReport check_conv3d(uint64_t seed, double threshold = 1e-4,
                               double h = 1e-4) {
    Rng rng(derive_seed(seed, "gradcheck", 1));
    Conv3dParams<double> p;
    p.weights = detail::random_tensor({2, 2, 2, 2, 2}, rng);
    p.bias = detail::random_tensor({2}, rng);
    p.stride = {1, 1, 1};
    p.padding = {0, 0, 0};
    Tensor<double> x = detail::random_tensor({1, 2, 3, 4, 4}, rng);
    Tensor<double> dir = detail::random_tensor(conv3d_forward(x, p).shape(), rng);

    Conv3dGrads<double> g = conv3d_backward(x, p, dir);
    GradReport rep{"conv3d", threshold};
    rep.absorb("input", g.input, fd_gradient([&](const Tensor<double>& v) {
        return detail::project(conv3d_forward(v, p), dir);
    }, x, h));
    rep.absorb("weights", g.weights, fd_gradient([&](const Tensor<double>& v) {
        Conv3dParams<double> q = p;
        q.weights = v;
        return detail::project(conv3d_forward(x, q), dir);
    }, p.weights, h));
    rep.absorb("bias", g.bias, fd_gradient([&](const Tensor<double>& v) {
        Conv3dParams<double> q = p;
        q.bias = v;
        return detail::project(conv3d_forward(x, q), dir);
    }, p.bias, h));
    return rep;
}

inline GradReport check_attention_gate(bool parameterized, uint64_t seed,
                                       double threshold = 1e-4, double h = 1e-4) {
    Rng rng(derive_seed(seed, "gradcheck", 2, parameterized ? 1 : 0));
    AttentionGateParams<double> p;
    p.parameterized = parameterized;
    if (parameterized) {
        p.gate_weights = detail::random_tensor({2, 2, 1, 1, 1}, rng);
        p.gate_bias = detail::random_tensor({2}, rng);
    }
    Tensor<double> f = detail::random_tensor({1, 2, 2, 3, 3}, rng);
    Tensor<double> dir = detail::random_tensor(f.shape(), rng);

    AttentionGateGrads<double> g = attention_gate_backward(f, p, dir);
    GradReport rep{parameterized ? "attention_gate(parameterized)"
                                 : "attention_gate(plain)",
                   threshold};
    rep.absorb("input", g.input, fd_gradient([&](const Tensor<double>& v) {
        return detail::project(attention_gate_forward(v, p).gated, dir);
    }, f, h));
    if (parameterized) {
        rep.absorb("gate.weight", g.gate_weights, fd_gradient([&](const Tensor<double>& v) {
            AttentionGateParams<double> q = p;
            q.gate_weights = v;
            return detail::project(attention_gate_forward(f, q).gated, dir);
        }, p.gate_weights, h));
        rep.absorb("gate.bias", g.gate_bias, fd_gradient([&](const Tensor<double>& v) {
            AttentionGateParams<double> q = p;
            q.gate_bias = v;
            return detail::project(attention_gate_forward(f, q).gated, dir);
        }, p.gate_bias, h));
    }
    return rep;
}

inline GradReport check_avgpool3d(uint64_t seed, double threshold = 1e-4,
                                  double h = 1e-4) {
    Rng rng(derive_seed(seed, "gradcheck", 3));
    const Dims3 kernel{2, 2, 2}, stride{2, 2, 2};
    Tensor<double> x = detail::random_tensor({1, 2, 4, 4, 4}, rng);
    Tensor<double> dir =
        detail::random_tensor(avgpool3d_forward(x, kernel, stride).shape(), rng);

    Tensor<double> gx = avgpool3d_backward(x.shape(), kernel, stride, dir);
    GradReport rep{"avgpool3d", threshold};
    rep.absorb("input", gx, fd_gradient([&](const Tensor<double>& v) {
        return detail::project(avgpool3d_forward(v, kernel, stride), dir);
    }, x, h));
    return rep;
}

inline GradReport check_dense(uint64_t seed, double threshold = 1e-4,
                              double h = 1e-4) {
    Rng rng(derive_seed(seed, "gradcheck", 4));
    DenseParams<double> p;
    p.weights = detail::random_tensor({5, 7}, rng);
    p.bias = detail::random_tensor({5}, rng);
    Tensor<double> x = detail::random_tensor({3, 7}, rng);
    Tensor<double> dir = detail::random_tensor({3, 5}, rng);

    DenseGrads<double> g = dense_backward(x, p, dir);
    GradReport rep{"dense", threshold};
    rep.absorb("input", g.input, fd_gradient([&](const Tensor<double>& v) {
        return detail::project(dense_forward(v, p), dir);
    }, x, h));
    rep.absorb("weights", g.weights, fd_gradient([&](const Tensor<double>& v) {
        DenseParams<double> q = p;
        q.weights = v;
        return detail::project(dense_forward(x, q), dir);
    }, p.weights, h));
    rep.absorb("bias", g.bias, fd_gradient([&](const Tensor<double>& v) {
        DenseParams<double> q = p;
        q.bias = v;
        return detail::project(dense_forward(x, q), dir);
    }, p.bias, h));
    return rep;
}

// Dropout's mask draw is not differentiable, so the mask is drawn once and
// frozen; the check differentiates x -> x * mask.
inline GradReport check_dropout_fixed_mask(uint64_t seed, double threshold = 1e-4,
                                           double h = 1e-4) {
    Rng rng(derive_seed(seed, "gradcheck", 5));
    Tensor<double> x = detail::random_tensor({4, 6}, rng);
    Rng mask_rng(derive_seed(seed, "gradcheck", 5, 1));
    DropoutOut<double> drawn = dropout(x, 0.25, Mode::Train, mask_rng);
    const Tensor<double> mask = drawn.mask;
    Tensor<double> dir = detail::random_tensor(x.shape(), rng);

    Tensor<double> analytic = mul(mask, dir);
    GradReport rep{"dropout(fixed mask)", threshold};
    rep.absorb("input", analytic, fd_gradient([&](const Tensor<double>& v) {
        return detail::project(mul(v, mask), dir);
    }, x, h));
    return rep;
}

inline GradReport check_softmax_xent(uint64_t seed, double threshold = 1e-4,
                                     double h = 1e-4) {
    Rng rng(derive_seed(seed, "gradcheck", 6));
    Tensor<double> logits = detail::random_tensor({4, 5}, rng, -2.0, 2.0);
    std::vector<int> labels(4);
    for (auto& l : labels) l = int(rng.uniform_int(0, 4));

    SoftmaxXentOut<double> out = softmax_cross_entropy(logits, labels);
    GradReport rep{"softmax_cross_entropy", threshold};
    rep.absorb("logits", out.grad_logits, fd_gradient([&](const Tensor<double>& v) {
        return double(softmax_cross_entropy(v, labels).loss);
    }, logits, h));
    return rep;
}

// End-to-end: the full pipeline on a tiny config in eval mode (dropout is the
// identity there, keeping the loss deterministic under probing).
inline GradReport check_model_end_to_end(uint64_t seed, double threshold = 1e-3,
                                         double h = 1e-4) {
    ModelConfig cfg;
    cfg.in_channels = 2;
    cfg.frames = 4;
    cfg.height = 8;
    cfg.width = 8;
    cfg.conv_out_channels = 3;
    cfg.global_pool = true;
    cfg.hidden_width = 6;
    cfg.dropout_rate = 0.25;
    cfg.num_classes = 2;
    Model<double> m = build_model<double>(cfg, derive_seed(seed, "gradcheck", 7));

    Rng rng(derive_seed(seed, "gradcheck", 7, 1));
    Tensor<double> x = detail::random_tensor({2, 2, 4, 8, 8}, rng);
    std::vector<int> labels{0, 1};

    Rng unused(0);
    BackwardOut<double> back = model_backward(m, x, labels, Mode::Eval, unused);
    auto loss_with = [&](Model<double> probe, const Tensor<double>& input) {
        Rng r(0);
        Tensor<double> logits = forward(probe, input, Mode::Eval, r);
        return double(softmax_cross_entropy(logits, labels).loss);
    };

    GradReport rep{"model(end-to-end)", threshold};
    for (const auto& [name, param] : m.params) {
        rep.absorb(name, back.grads.at(name), fd_gradient([&](const Tensor<double>& v) {
            Model<double> probe = m;
            probe.params.at(name) = v;
            return loss_with(std::move(probe), x);
        }, param, h));
    }
    Tensor<double> gx_numeric = fd_gradient([&](const Tensor<double>& v) {
        return loss_with(m, v);
    }, x, h);
    rep.absorb("input", back.grad_input, gx_numeric);
    return rep;
}

inline std::vector<GradReport> check_all_layers(uint64_t seed) {
    std::vector<GradReport> reports;
    reports.push_back(check_conv3d(seed));
    reports.push_back(check_attention_gate(false, seed));
    reports.push_back(check_attention_gate(true, seed));
    reports.push_back(check_avgpool3d(seed));
    reports.push_back(check_dense(seed));
    reports.push_back(check_dropout_fixed_mask(seed));
    reports.push_back(check_softmax_xent(seed));
    reports.push_back(check_model_end_to_end(seed));
    return reports;
}

}  // namespace a3dc
