#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "a3dc/optim.hpp"
#include "a3dc/rng.hpp"

using namespace a3dc;

namespace {

template <typename S>
ParamMap<S> single(const char* name, Tensor<S> t) {
    ParamMap<S> m;
    m.emplace(name, std::move(t));
    return m;
}

}  // namespace

TEST_CASE("first step moves by ~lr under constant gradient") {
    ParamMap<double> params = single("w", Tensor<double>({1}, 0.0));
    ParamMap<double> grads = single("w", Tensor<double>({1}, 0.5));
    AdamState<double> state;
    adam_step(params, grads, state, 1e-4, 0.0);
    // mhat/sqrt(vhat) = 1 on the first step, up to eps
    CHECK(params.at("w")[0] == doctest::Approx(-1e-4).epsilon(1e-6));
    CHECK(state.t == 1);
}

TEST_CASE("zero gradient leaves parameters and moments unchanged") {
    ParamMap<double> params = single("w", Tensor<double>({3}, 2.5));
    ParamMap<double> grads = single("w", Tensor<double>({3}, 0.0));
    AdamState<double> state;
    adam_step(params, grads, state, 1e-4, 0.0);
    for (int64_t i = 0; i < 3; ++i) {
        CHECK(params.at("w")[i] == 2.5);
        CHECK(state.m.at("w")[i] == 0.0);
        CHECK(state.v.at("w")[i] == 0.0);
    }
    CHECK(state.t == 1);
}

TEST_CASE("pure decay step is exactly theta * (1 - lr*wd)") {
    ParamMap<double> params = single("w", Tensor<double>({1}, 1.0));
    ParamMap<double> grads = single("w", Tensor<double>({1}, 0.0));
    AdamState<double> state;
    adam_step(params, grads, state, 1e-4, 1e-4);
    CHECK(params.at("w")[0] == 1.0 - 1e-8);
}

TEST_CASE("updates are bounded by lr under constant gradient") {
    ParamMap<double> params = single("w", Tensor<double>({1}, 0.0));
    ParamMap<double> grads = single("w", Tensor<double>({1}, 0.37));
    AdamState<double> state;
    const double lr = 1e-3;
    double prev = params.at("w")[0];
    for (int step = 0; step < 200; ++step) {
        adam_step(params, grads, state, lr, 0.0);
        const double delta = params.at("w")[0] - prev;
        prev = params.at("w")[0];
        CHECK(std::abs(delta) <= lr * (1.0 + 1e-3));
    }
}

TEST_CASE("per-parameter state is isolated (order independence)") {
    Rng rng(61);
    auto tensor_of = [&](double v) { return Tensor<double>({2}, v); };

    ParamMap<double> joint;
    joint.emplace("a", tensor_of(1.0));
    joint.emplace("b", tensor_of(-2.0));
    ParamMap<double> joint_grads;
    joint_grads.emplace("a", tensor_of(0.3));
    joint_grads.emplace("b", tensor_of(-0.7));
    AdamState<double> joint_state;

    ParamMap<double> solo_a = single("a", tensor_of(1.0));
    ParamMap<double> solo_b = single("b", tensor_of(-2.0));
    AdamState<double> state_a, state_b;

    for (int step = 0; step < 5; ++step) {
        adam_step(joint, joint_grads, joint_state, 1e-3, 1e-4);
        adam_step(solo_a, single("a", tensor_of(0.3)), state_a, 1e-3, 1e-4);
        adam_step(solo_b, single("b", tensor_of(-0.7)), state_b, 1e-3, 1e-4);
    }
    CHECK(joint.at("a")[0] == solo_a.at("a")[0]);
    CHECK(joint.at("b")[0] == solo_b.at("b")[0]);
}

TEST_CASE("same gradient stream reproduces the same trajectory bitwise") {
    auto run = [] {
        ParamMap<float> params = single("w", Tensor<float>({4}, 0.5f));
        AdamState<float> state;
        Rng rng(314);
        for (int step = 0; step < 50; ++step) {
            Tensor<float> g({4});
            for (int64_t i = 0; i < 4; ++i) g[i] = rng.uniform(-1.0f, 1.0f);
            adam_step(params, single("w", std::move(g)), state, 3e-4, 1e-4);
        }
        return params.at("w");
    };
    Tensor<float> a = run();
    Tensor<float> b = run();
    for (int64_t i = 0; i < 4; ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("adam rejects bad arguments") {
    ParamMap<float> params = single("w", Tensor<float>({2}, 0.0f));
    AdamState<float> state;
    CHECK_THROWS_AS(adam_step(params, single("w", Tensor<float>({2})), state, 0.0, 0.0),
                    ValueError);
    CHECK_THROWS_AS(adam_step(params, single("w", Tensor<float>({3})), state, 1e-4, 0.0),
                    ShapeError);
    ParamMap<float> wrong = single("nope", Tensor<float>({2}));
    CHECK_THROWS_AS(adam_step(params, wrong, state, 1e-4, 0.0), ShapeError);
}

TEST_CASE("step schedule") {
    Schedule s;  // initial 1e-4, period 4, gamma 0.1
    CHECK(lr_at(s, 0) == 1e-4);
    CHECK(lr_at(s, 3) == 1e-4);
    CHECK(lr_at(s, 4) == doctest::Approx(0.1 * 1e-4).epsilon(1e-12));
    CHECK(lr_at(s, 7) == doctest::Approx(0.1 * 1e-4).epsilon(1e-12));
    CHECK(lr_at(s, 8) == doctest::Approx(0.01 * 1e-4).epsilon(1e-12));
    CHECK_THROWS_AS(lr_at(s, -1), ValueError);

    // non-increasing, piecewise constant with the configured period
    double prev = lr_at(s, 0);
    for (int e = 1; e < 40; ++e) {
        const double cur = lr_at(s, e);
        CHECK(cur <= prev);
        if (e % s.decay_period_epochs != 0) CHECK(cur == lr_at(s, e - 1));
        prev = cur;
    }

    Schedule off;
    off.decay_factor = 1.0;
    CHECK(lr_at(off, 49) == off.initial_lr);
}
