#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <vector>

#include "a3dc/rng.hpp"
#include "a3dc/tensor.hpp"

using namespace a3dc;

TEST_CASE("construction and fill") {
    Tensor<float> z({2, 2}, 0.0f);
    CHECK(z.size() == 4);
    for (int64_t i = 0; i < 4; ++i) CHECK(z[i] == 0.0f);

    Tensor<float> ones({1, 3, 16, 112, 112}, 1.0f);
    CHECK(ones.size() == 602112);
    CHECK(ones[0] == 1.0f);
    CHECK(ones[ones.size() - 1] == 1.0f);

    Tensor<float> c({3}, -1.5f);
    CHECK(c[0] == -1.5f);
    CHECK(c[1] == -1.5f);
    CHECK(c[2] == -1.5f);
}

TEST_CASE("invalid shapes are rejected") {
    CHECK_THROWS_AS(Tensor<float>({0, 3}), ShapeError);
    CHECK_THROWS_AS(Tensor<float>({2, -1}), ShapeError);
    CHECK_THROWS_AS(Tensor<float>(Shape{}), ShapeError);
    CHECK_THROWS_AS(Tensor<float>::from_data({2, 2}, {1.0f, 2.0f}), ShapeError);
    CHECK_THROWS_AS(Tensor<float>({2, 3}).reshape({5}), ShapeError);
}

TEST_CASE("row-major flat index matches the closed formula") {
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const int64_t N = rng.uniform_int(1, 3), C = rng.uniform_int(1, 4);
        const int64_t T = rng.uniform_int(1, 4), H = rng.uniform_int(1, 5);
        const int64_t W = rng.uniform_int(1, 5);
        Tensor<float> t({N, C, T, H, W});
        // naive nested-loop enumeration must visit flat indices 0,1,2,...
        int64_t expected = 0;
        for (int64_t n = 0; n < N; ++n)
            for (int64_t c = 0; c < C; ++c)
                for (int64_t tt = 0; tt < T; ++tt)
                    for (int64_t h = 0; h < H; ++h)
                        for (int64_t w = 0; w < W; ++w, ++expected) {
                            const int64_t closed =
                                (((n * C + c) * T + tt) * H + h) * W + w;
                            CHECK(t.flat_index(std::array{n, c, tt, h, w}) == closed);
                            CHECK(closed == expected);
                        }
        const Shape st = t.strides();
        CHECK(st.back() == 1);
        CHECK(st[0] == C * T * H * W);
    }
}

TEST_CASE("elementwise definitions") {
    Tensor<float> x = Tensor<float>::from_data({3}, {-2.0f, 0.0f, 3.0f});
    Tensor<float> r = relu(x);
    CHECK(r[0] == 0.0f);
    CHECK(r[1] == 0.0f);
    CHECK(r[2] == 3.0f);

    CHECK(sigmoid_scalar(0.0) == 0.5);
    CHECK(sigmoid_scalar(1.0) == doctest::Approx(0.7310586).epsilon(1e-6));

    Tensor<float> a = Tensor<float>::from_data({2, 2}, {1, 2, 3, 4});
    Tensor<float> b = Tensor<float>::from_data({2, 2}, {5, 6, 7, 8});
    Tensor<float> s = add(a, b);
    CHECK(s[3] == 12.0f);
    Tensor<float> d = sub(b, a);
    CHECK(d[0] == 4.0f);
    Tensor<float> h = mul(a, b);
    CHECK(h[2] == 21.0f);

    Tensor<float> bad({3});
    CHECK_THROWS_AS(add(a, bad), ShapeError);
    CHECK_THROWS_AS(mul(a, bad), ShapeError);
}

TEST_CASE("elementwise ops are pointwise-independent under permutation") {
    Rng rng(99);
    Tensor<double> x({240});
    for (int64_t i = 0; i < x.size(); ++i) x[i] = rng.uniform(-4.0, 4.0);

    std::vector<int64_t> perm(size_t(x.size()));
    std::iota(perm.begin(), perm.end(), 0);
    for (size_t i = perm.size(); i > 1; --i) {
        std::swap(perm[i - 1], perm[size_t(rng.uniform_int(0, int64_t(i) - 1))]);
    }

    Tensor<double> xp(x.shape());
    for (size_t i = 0; i < perm.size(); ++i) xp[int64_t(i)] = x[perm[i]];

    const Tensor<double> direct = sigmoid(relu(x));
    const Tensor<double> permuted = sigmoid(relu(xp));
    for (size_t i = 0; i < perm.size(); ++i) {
        CHECK(permuted[int64_t(i)] == direct[perm[i]]);
    }
}

TEST_CASE("sigmoid stays inside the open unit interval") {
    Rng rng(7);
    for (int i = 0; i < 2000; ++i) {
        const double x = rng.uniform(-40.0, 40.0);
        const double y = sigmoid_scalar(x);
        CHECK(y > 0.0);
        CHECK(y < 1.0);
        CHECK(sigmoid_scalar(-x) == doctest::Approx(1.0 - y).epsilon(1e-6));
    }
    // extreme finite inputs still map strictly inside (0,1)
    CHECK(sigmoid_scalar(1e30f) < 1.0f);
    CHECK(sigmoid_scalar(-1e30f) > 0.0f);
    CHECK(sigmoid_scalar(1e300) < 1.0);
    CHECK(sigmoid_scalar(-1e300) > 0.0);
}

TEST_CASE("reshape preserves storage order") {
    Tensor<float> a = Tensor<float>::from_data({2, 3}, {0, 1, 2, 3, 4, 5});
    Tensor<float> b = a.reshape({3, 2});
    for (int64_t i = 0; i < 6; ++i) CHECK(b[i] == float(i));
    CHECK(b.shape() == Shape{3, 2});
}
