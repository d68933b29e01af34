#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "a3dc/tensor.hpp"

namespace a3dc {

// Row-wise softmax with per-row max subtraction. The same stabilization is
// used everywhere softmax appears so results agree across entry points.
template <typename Scalar>
Tensor<Scalar> softmax(const Tensor<Scalar>& logits) {
    if (logits.rank() != 2) {
        throw ShapeError("softmax: logits must be rank 2 (N,K), got " +
                         shape_str(logits.shape()));
    }
    const int64_t N = logits.extent(0), K = logits.extent(1);
    Tensor<Scalar> p(logits.shape());
    for (int64_t n = 0; n < N; ++n) {
        const Scalar* row = logits.data() + n * K;
        Scalar* out = p.data() + n * K;
        Scalar m = row[0];
        for (int64_t k = 1; k < K; ++k) m = std::max(m, row[k]);
        Scalar sum = 0;
        for (int64_t k = 0; k < K; ++k) {
            out[k] = std::exp(row[k] - m);
            sum += out[k];
        }
        const Scalar inv = Scalar(1) / sum;
        for (int64_t k = 0; k < K; ++k) out[k] *= inv;
    }
    return p;
}

template <typename Scalar>
struct SoftmaxXentOut {
    Scalar loss;                // mean over the batch of -log softmax[label]
    Tensor<Scalar> grad_logits; // (softmax - onehot) / N
};

template <typename Scalar>
SoftmaxXentOut<Scalar> softmax_cross_entropy(const Tensor<Scalar>& logits,
                                             std::span<const int> labels) {
    if (logits.rank() != 2) {
        throw ShapeError("softmax_cross_entropy: logits must be rank 2, got " +
                         shape_str(logits.shape()));
    }
    const int64_t N = logits.extent(0), K = logits.extent(1);
    if (int64_t(labels.size()) != N) {
        throw ShapeError("softmax_cross_entropy: " + std::to_string(labels.size()) +
                         " labels for batch of " + std::to_string(N));
    }
    for (int64_t n = 0; n < N; ++n) {
        if (labels[size_t(n)] < 0 || labels[size_t(n)] >= K) {
            throw ValueError("softmax_cross_entropy: label " +
                             std::to_string(labels[size_t(n)]) + " out of [0," +
                             std::to_string(K) + ") at row " + std::to_string(n));
        }
    }

    SoftmaxXentOut<Scalar> r;
    r.grad_logits = Tensor<Scalar>(logits.shape());
    const Scalar inv_n = Scalar(1) / Scalar(N);
    Scalar loss = 0;
    for (int64_t n = 0; n < N; ++n) {
        const Scalar* row = logits.data() + n * K;
        Scalar* grad = r.grad_logits.data() + n * K;
        Scalar m = row[0];
        for (int64_t k = 1; k < K; ++k) m = std::max(m, row[k]);
        Scalar sum = 0;
        for (int64_t k = 0; k < K; ++k) {
            grad[k] = std::exp(row[k] - m);
            sum += grad[k];
        }
        const int y = labels[size_t(n)];
        loss += std::log(sum) - (row[y] - m);
        const Scalar inv = Scalar(1) / sum;
        for (int64_t k = 0; k < K; ++k) grad[k] *= inv * inv_n;
        grad[y] -= inv_n;
    }
    r.loss = loss * inv_n;
    return r;
}

}  // namespace a3dc
