#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "finsent/autodiff.hpp"
#include "finsent/rng.hpp"
#include "oracles/finite_diff.hpp"

using namespace finsent;
using ad::Tape;
using ad::Tensor;
using ad::Var;

TEST_CASE("forward values: scalar product, softmax symmetry, odd tanh") {
    Tape tape;
    Var w = tape.constant(Tensor({1, 1}, {2.0}));
    Var x = tape.constant(Tensor::vector({3.0}));
    CHECK(tape.value(tape.matvec(w, x))[0] == doctest::Approx(6.0));

    Var z = tape.constant(Tensor::vector({0.0, 0.0, 0.0}));
    const Tensor& sm = tape.value(tape.softmax(z));
    for (std::size_t i = 0; i < 3; ++i) CHECK(sm[i] == doctest::Approx(1.0 / 3.0));

    Var t0 = tape.constant(Tensor::vector({0.0}));
    CHECK(tape.value(tape.tanh(t0))[0] == 0.0);
}

TEST_CASE("forward errors: shape mismatch and unbound-style misuse") {
    Tape tape;
    Var w = tape.constant(Tensor({2, 3}, {1, 2, 3, 4, 5, 6}));
    Var x = tape.constant(Tensor::vector({1.0, 2.0}));
    CHECK_THROWS_AS(tape.matvec(w, x), std::invalid_argument);

    Var a = tape.constant(Tensor::vector({1.0}));
    Var b = tape.constant(Tensor::vector({1.0, 2.0}));
    CHECK_THROWS_AS(tape.add(a, b), std::invalid_argument);
    CHECK_THROWS_AS(tape.value(Var{}), std::invalid_argument);
}

TEST_CASE("non-finite intermediates are rejected") {
    Tape tape;
    Var big = tape.constant(Tensor::vector({1e308}));
    CHECK_THROWS_AS(tape.add(big, big), std::runtime_error);
}

TEST_CASE("backward: x^2 at x=3 gives 6") {
    Tape tape;
    Var x = tape.leaf(Tensor::vector({3.0}));
    Var loss = tape.mul(x, x);
    tape.backward(loss);
    CHECK(tape.grad(x)[0] == doctest::Approx(6.0));
}

TEST_CASE("backward: constant graph has zero gradients") {
    Tape tape;
    Var x = tape.leaf(Tensor::vector({1.0, 2.0}));
    Var c = tape.constant(Tensor::vector({5.0, -1.0}));
    Var out = tape.sum(c);  // does not depend on x
    tape.backward(out);
    CHECK(tape.grad(x)[0] == 0.0);
    CHECK(tape.grad(x)[1] == 0.0);
}

TEST_CASE("backward errors: seed shape mismatch and empty tape") {
    Tape tape;
    CHECK_THROWS_AS(tape.backward(Var{}), std::logic_error);
    Var x = tape.leaf(Tensor::vector({1.0, 2.0}));
    CHECK_THROWS_AS(tape.backward(x, Tensor::vector({1.0, 2.0, 3.0})),
                    std::invalid_argument);
}

TEST_CASE("backward: softmax with cross terms matches finite differences") {
    RunRng rng(11);
    Tensor xv = Tensor::zeros({4});
    Tensor cv = Tensor::zeros({4});
    for (std::size_t i = 0; i < 4; ++i) {
        xv[i] = rng.next_uniform(-2.0, 2.0);
        cv[i] = rng.next_uniform(-1.0, 1.0);
    }

    auto forward = [&]() {
        Tape tape;
        Var x = tape.leaf(xv);
        Var sm = tape.softmax(x);
        Var c = tape.constant(cv);
        Var mixed = tape.mul(sm, c);
        return tape.value(tape.dot(mixed, sm)).item();
    };

    Tensor numeric = oracle::finite_difference_grad(forward, xv, 1e-5);

    Tape tape;
    Var x = tape.leaf(xv);
    Var sm = tape.softmax(x);
    Var c = tape.constant(cv);
    Var loss = tape.dot(tape.mul(sm, c), sm);
    tape.backward(loss);

    CHECK(oracle::max_relative_error(tape.grad(x), numeric) < 1e-6);
}

TEST_CASE("every op composition matches finite differences") {
    // one graph touching matvec, matvec_t, add, sub, mul, scale, tanh,
    // sigmoid, softmax, dot, sum, concat, slice, stack, weighted_sum
    RunRng rng(23);
    Tensor wv = ad::glorot_uniform(3, 4, rng);
    Tensor xv = Tensor::zeros({4});
    for (std::size_t i = 0; i < 4; ++i) xv[i] = rng.next_uniform(-1.0, 1.0);

    auto build = [&](Tape& tape, Var& w_out, Var& x_out) {
        Var w = tape.leaf(wv);
        Var x = tape.leaf(xv);
        w_out = w;
        x_out = x;
        Var y = tape.matvec(w, x);                       // (3)
        Var back = tape.matvec_t(w, y);                  // (4)
        Var gate = tape.sigmoid(tape.scale(back, 0.7));  // (4)
        Var mixed = tape.mul(gate, x);                   // (4)
        Var joined = tape.concat(y, mixed);              // (7)
        Var att = tape.softmax(tape.slice(joined, 1, 4));
        Var h1 = tape.tanh(tape.slice(joined, 0, 4));
        Var h2 = tape.sub(h1, mixed);
        // h1 appears twice: repeated parents must accumulate
        Var pooled = tape.weighted_sum(att, {h1, h2, mixed, h1});
        Var s1 = tape.dot(pooled, mixed);
        Var s2 = tape.sum(att);
        Var stacked = tape.stack({s1, s2});
        return tape.sum(tape.tanh(stacked));
    };

    auto forward = [&]() {
        Tape tape;
        Var w, x;
        Var loss = build(tape, w, x);
        return tape.value(loss).item();
    };

    Tensor numeric_w = oracle::finite_difference_grad(forward, wv, 1e-6);
    Tensor numeric_x = oracle::finite_difference_grad(forward, xv, 1e-6);

    Tape tape;
    Var w, x;
    Var loss = build(tape, w, x);
    tape.backward(loss);

    CHECK(oracle::max_relative_error(tape.grad(w), numeric_w) < 1e-6);
    CHECK(oracle::max_relative_error(tape.grad(x), numeric_x) < 1e-6);
}

TEST_CASE("softmax outputs are nonnegative and sum to 1 within 1e-12") {
    RunRng rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + rng.next_index(12);
        Tensor x = Tensor::zeros({n});
        for (std::size_t i = 0; i < n; ++i) x[i] = rng.next_uniform(-40.0, 40.0);
        Tape tape;
        const Tensor& y = tape.value(tape.softmax(tape.constant(x)));
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(y[i] >= 0.0);
            total += y[i];
        }
        CHECK(std::fabs(total - 1.0) < 1e-12);
    }
}

TEST_CASE("backward is deterministic for identical graphs") {
    auto run = [] {
        RunRng rng(17);
        Tensor wv = ad::glorot_uniform(4, 4, rng);
        Tensor xv = Tensor::zeros({4});
        for (std::size_t i = 0; i < 4; ++i) xv[i] = rng.next_uniform(-1.0, 1.0);
        Tape tape;
        Var w = tape.leaf(wv);
        Var x = tape.leaf(xv);
        Var loss = tape.dot(tape.tanh(tape.matvec(w, x)), x);
        tape.backward(loss);
        std::vector<double> out;
        for (std::size_t i = 0; i < tape.grad(w).size(); ++i) out.push_back(tape.grad(w)[i]);
        return out;
    };
    auto a = run();
    auto b = run();
    CHECK(a == b);
}

TEST_CASE("dropout: identity cases draw nothing and zeroed fraction is calibrated") {
    RunRng rng(3);
    Tensor xv = Tensor::zeros({64});
    for (std::size_t i = 0; i < 64; ++i) xv[i] = rng.next_uniform(0.5, 1.5);

    {
        Tape tape;
        RunRng dr(1);
        Var x = tape.constant(xv);
        Var d = tape.dropout(x, 0.0, true, &dr);
        CHECK(d.id == x.id);  // exact identity, no node added
        Var e = tape.dropout(x, 0.3, false, &dr);
        CHECK(e.id == x.id);
        // no draws happened: stream position unchanged
        RunRng fresh(1);
        CHECK(dr.next_u64() == fresh.next_u64());
    }

    CHECK_THROWS_AS(
        [] {
            Tape tape;
            RunRng dr(1);
            Var x = tape.constant(Tensor::vector({1.0}));
            tape.dropout(x, 1.0, true, &dr);
        }(),
        std::invalid_argument);

    // Monte Carlo zeroed fraction over 1e5 elements
    {
        Tensor big = Tensor::full({100000}, 1.0);
        Tape tape;
        RunRng dr(12345);
        Var x = tape.constant(big);
        Var d = tape.dropout(x, 0.3, true, &dr);
        const Tensor& y = tape.value(d);
        std::size_t zeroed = 0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            if (y[i] == 0.0) {
                ++zeroed;
            } else {
                CHECK(y[i] == doctest::Approx(1.0 / 0.7));
            }
        }
        const double frac = static_cast<double>(zeroed) / 100000.0;
        CHECK(frac > 0.29);
        CHECK(frac < 0.31);
    }
}

TEST_CASE("parameter store: registration, gradient map, zeroing") {
    ad::ParameterStore store;
    RunRng rng(8);
    auto& w = store.add("w", ad::glorot_uniform(2, 2, rng));
    auto& b = store.add("b", Tensor::zeros({2}));
    CHECK(store.count() == 2);
    CHECK(store.total_size() == 6);
    CHECK(store.find("w") == &w);
    CHECK(store.find("missing") == nullptr);

    Tape tape;
    Var wv = tape.param(w);
    Var bv = tape.param(b);
    Var x = tape.constant(Tensor::vector({1.0, -1.0}));
    Var loss = tape.sum(tape.add(tape.matvec(wv, x), bv));
    tape.backward(loss);

    auto grads = store.gradients();
    CHECK(grads.at("w").same_shape(w.value));
    CHECK(grads.at("b")[0] == doctest::Approx(1.0));
    // accumulation across backward calls is the contract
    tape.backward(loss);
    CHECK(b.grad[0] == doctest::Approx(2.0));
    store.zero_grads();
    CHECK(b.grad[0] == 0.0);
}
