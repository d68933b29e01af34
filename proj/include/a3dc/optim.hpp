#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>

#include "a3dc/tensor.hpp"

namespace a3dc {

template <typename Scalar>
using ParamMap = std::map<std::string, Tensor<Scalar>>;

// Per-parameter first/second moment accumulators plus the shared step count.
template <typename Scalar>
struct AdamState {
    ParamMap<Scalar> m;
    ParamMap<Scalar> v;
    int64_t t = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    static AdamState zeros_like(const ParamMap<Scalar>& params) {
        AdamState s;
        for (const auto& [name, p] : params) {
            s.m.emplace(name, Tensor<Scalar>(p.shape()));
            s.v.emplace(name, Tensor<Scalar>(p.shape()));
        }
        return s;
    }
};

// One Adam step with decoupled weight decay:
//   m <- b1*m + (1-b1)*g        v <- b2*v + (1-b2)*g^2
//   theta <- theta - lr * mhat/(sqrt(vhat)+eps) - lr * weight_decay * theta
// The decay term shrinks weights directly rather than entering the gradient,
// so a zero-gradient step moves theta by exactly -lr*wd*theta.
template <typename Scalar>
void adam_step(ParamMap<Scalar>& params, const ParamMap<Scalar>& grads,
               AdamState<Scalar>& state, double lr, double weight_decay) {
    if (lr <= 0) throw ValueError("adam_step: lr must be positive");
    if (state.m.empty() && state.v.empty() && state.t == 0) {
        state = AdamState<Scalar>::zeros_like(params);
    }
    state.t += 1;
    const Scalar b1 = Scalar(state.beta1), b2 = Scalar(state.beta2);
    const Scalar bc1 = Scalar(1) - Scalar(std::pow(state.beta1, double(state.t)));
    const Scalar bc2 = Scalar(1) - Scalar(std::pow(state.beta2, double(state.t)));
    const Scalar eps = Scalar(state.eps);
    const Scalar slr = Scalar(lr), swd = Scalar(weight_decay);

    for (auto& [name, theta] : params) {
        auto git = grads.find(name);
        if (git == grads.end()) {
            throw ShapeError("adam_step: no gradient for parameter " + name);
        }
        const Tensor<Scalar>& g = git->second;
        if (!g.same_shape(theta)) {
            throw ShapeError("adam_step: gradient shape " + shape_str(g.shape()) +
                             " vs parameter " + name + " " + shape_str(theta.shape()));
        }
        Tensor<Scalar>& m = state.m.at(name);
        Tensor<Scalar>& v = state.v.at(name);
        for (int64_t i = 0; i < theta.size(); ++i) {
            m[i] = b1 * m[i] + (Scalar(1) - b1) * g[i];
            v[i] = b2 * v[i] + (Scalar(1) - b2) * g[i] * g[i];
            const Scalar mhat = m[i] / bc1;
            const Scalar vhat = v[i] / bc2;
            theta[i] -= slr * mhat / (std::sqrt(vhat) + eps) + slr * swd * theta[i];
        }
    }
}

// Step learning-rate schedule plus a constant decoupled weight decay. Either
// mechanism can be disabled (gamma = 1 freezes the lr; weight_decay = 0
// disables shrinkage).
struct Schedule {
    double initial_lr = 1e-4;
    int decay_period_epochs = 4;
    double decay_factor = 0.1;  // gamma
    double weight_decay = 1e-4;
};

inline double lr_at(const Schedule& s, int64_t epoch) {
    if (epoch < 0) throw ValueError("lr_at: epoch must be >= 0");
    if (s.decay_period_epochs < 1) {
        throw ValueError("lr_at: decay period must be >= 1");
    }
    double lr = s.initial_lr;
    const int64_t steps = epoch / s.decay_period_epochs;
    for (int64_t i = 0; i < steps; ++i) lr *= s.decay_factor;
    return lr;
}

}  // namespace a3dc
