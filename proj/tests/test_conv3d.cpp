#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "a3dc/conv3d.hpp"
#include "a3dc/rng.hpp"
#include "oracles.hpp"

using namespace a3dc;

namespace {

Conv3dParams<float> make_params(Tensor<float> w, Tensor<float> b, Dims3 stride,
                                Dims3 pad) {
    return Conv3dParams<float>{std::move(w), std::move(b), stride, pad};
}

}  // namespace

TEST_CASE("all-ones kernel sums the window") {
    Tensor<float> x({1, 1, 2, 2, 2}, 1.0f);
    auto p = make_params(Tensor<float>({1, 1, 2, 2, 2}, 1.0f), Tensor<float>({1}, 0.0f),
                         {1, 1, 1}, {0, 0, 0});
    Tensor<float> out = conv3d_forward(x, p);
    CHECK(out.shape() == Shape{1, 1, 1, 1, 1});
    CHECK(out[0] == doctest::Approx(8.0f));
}

TEST_CASE("centered delta kernel is the identity under pad 1") {
    Rng rng(31);
    Tensor<float> x = oracle::random_tensor<float>({1, 1, 3, 3, 3}, rng);
    Tensor<float> w({1, 1, 3, 3, 3}, 0.0f);
    w.at({0, 0, 1, 1, 1}) = 1.0f;
    auto p = make_params(std::move(w), Tensor<float>({1}, 0.0f), {1, 1, 1}, {1, 1, 1});
    Tensor<float> out = conv3d_forward(x, p);
    REQUIRE(out.shape() == x.shape());
    for (int64_t i = 0; i < x.size(); ++i) CHECK(out[i] == doctest::Approx(x[i]));
}

TEST_CASE("matches the nested-loop oracle on random instances") {
    Rng rng(404);
    for (int trial = 0; trial < 50; ++trial) {
        const int64_t N = rng.uniform_int(1, 2);
        const int64_t C = rng.uniform_int(1, 3);
        const int64_t Co = rng.uniform_int(1, 4);
        const int64_t T = rng.uniform_int(2, 6), H = rng.uniform_int(2, 6),
                      W = rng.uniform_int(2, 6);
        const int64_t kT = rng.uniform_int(1, std::min<int64_t>(3, T));
        const int64_t kH = rng.uniform_int(1, std::min<int64_t>(3, H));
        const int64_t kW = rng.uniform_int(1, std::min<int64_t>(3, W));
        const Dims3 stride{rng.uniform_int(1, 2), rng.uniform_int(1, 2),
                           rng.uniform_int(1, 2)};
        const Dims3 pad{rng.uniform_int(0, 1), rng.uniform_int(0, 1),
                        rng.uniform_int(0, 1)};

        Conv3dParams<float> p;
        p.weights = oracle::random_tensor<float>({Co, C, kT, kH, kW}, rng);
        p.bias = oracle::random_tensor<float>({Co}, rng);
        p.stride = stride;
        p.padding = pad;
        Tensor<float> x = oracle::random_tensor<float>({N, C, T, H, W}, rng);

        Tensor<float> fast = conv3d_forward(x, p);
        Tensor<float> ref = oracle::conv3d(x, p);
        REQUIRE(fast.shape() == ref.shape());
        for (int64_t i = 0; i < fast.size(); ++i) {
            CHECK(std::abs(fast[i] - ref[i]) < 1e-5f);
        }
    }
}

TEST_CASE("a multi-channel padded instance matches the oracle") {
    Rng rng(777);
    Conv3dParams<float> p;
    p.weights = oracle::random_tensor<float>({4, 3, 3, 3, 3}, rng);
    p.bias = oracle::random_tensor<float>({4}, rng);
    p.stride = {1, 1, 1};
    p.padding = {1, 1, 1};
    Tensor<float> x = oracle::random_tensor<float>({2, 3, 4, 5, 5}, rng);
    Tensor<float> fast = conv3d_forward(x, p);
    Tensor<float> ref = oracle::conv3d(x, p);
    for (int64_t i = 0; i < fast.size(); ++i) {
        CHECK(std::abs(fast[i] - ref[i]) < 1e-5f);
    }
}

TEST_CASE("shape errors") {
    Tensor<float> x({1, 2, 4, 4, 4});
    Conv3dParams<float> p;
    p.weights = Tensor<float>({1, 3, 3, 3, 3});  // wrong C_in
    p.bias = Tensor<float>({1});
    CHECK_THROWS_AS(conv3d_forward(x, p), ShapeError);

    Conv3dParams<float> q;
    q.weights = Tensor<float>({1, 2, 5, 5, 5});  // kernel larger than input
    q.bias = Tensor<float>({1});
    CHECK_THROWS_AS(conv3d_forward(x, q), ShapeError);

    Conv3dParams<float> ok;
    ok.weights = Tensor<float>({1, 2, 2, 2, 2});
    ok.bias = Tensor<float>({1});
    CHECK_THROWS_AS(conv3d_backward(x, ok, Tensor<float>({1, 1, 1, 1, 1})),
                    ShapeError);
}

TEST_CASE("backward zero grad_out gives zero gradients") {
    Rng rng(55);
    Conv3dParams<float> p;
    p.weights = oracle::random_tensor<float>({2, 2, 2, 2, 2}, rng);
    p.bias = oracle::random_tensor<float>({2}, rng);
    Tensor<float> x = oracle::random_tensor<float>({1, 2, 3, 4, 4}, rng);
    Tensor<float> zeros(conv3d_forward(x, p).shape(), 0.0f);

    Conv3dGrads<float> g = conv3d_backward(x, p, zeros);
    for (int64_t i = 0; i < g.weights.size(); ++i) CHECK(g.weights[i] == 0.0f);
    for (int64_t i = 0; i < g.bias.size(); ++i) CHECK(g.bias[i] == 0.0f);
    for (int64_t i = 0; i < g.input.size(); ++i) CHECK(g.input[i] == 0.0f);
}

TEST_CASE("bias gradient counts output positions") {
    Rng rng(56);
    Conv3dParams<float> p;
    p.weights = oracle::random_tensor<float>({3, 2, 2, 2, 2}, rng);
    p.bias = oracle::random_tensor<float>({3}, rng);
    Tensor<float> x = oracle::random_tensor<float>({2, 2, 3, 4, 4}, rng);
    Tensor<float> out = conv3d_forward(x, p);
    Tensor<float> ones(out.shape(), 1.0f);

    Conv3dGrads<float> g = conv3d_backward(x, p, ones);
    const float count = float(out.extent(0) * out.extent(2) * out.extent(3) *
                              out.extent(4));
    for (int64_t c = 0; c < 3; ++c) CHECK(g.bias[c] == doctest::Approx(count));
}
