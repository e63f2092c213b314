#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "hdnet/gradsuite.hpp"
#include "hdnet/ops.hpp"

using namespace hdnet;

TEST_CASE("tensor factories and item") {
    Tensor z = Tensor::zeros({2, 3});
    CHECK(z.size() == 6);
    CHECK_THROWS(z.item());
    CHECK(Tensor::scalar(4.5).item() == 4.5);
    CHECK_THROWS(Tensor::from({2, 2}, {1.0, 2.0, 3.0}));
    Tensor a = Tensor::from({2}, {1.0, 2.0});
    Tensor b = a;  // handles share storage
    b.data()[0] = 9.0;
    CHECK(a.data()[0] == 9.0);
    CHECK(a.same_storage(b));
    CHECK(!a.same_storage(a.detach()));
}

TEST_CASE("simple chain has the expected gradient") {
    // loss = sum((2x + y) * y); d/dx = 2y, d/dy = 2x + 2y
    Tape tape;
    Tensor x = Tensor::from({2}, {1.0, -3.0}, true);
    Tensor y = Tensor::from({2}, {4.0, 0.5}, true);
    Tensor loss = ops::sum_all(tape, ops::mul(tape, ops::add(tape, ops::scale(tape, x, 2.0), y), y));
    CHECK(loss.item() == doctest::Approx((2 * 1.0 + 4.0) * 4.0 + (2 * -3.0 + 0.5) * 0.5));
    tape.backward(loss);
    CHECK(x.grad()[0] == doctest::Approx(8.0));
    CHECK(x.grad()[1] == doctest::Approx(1.0));
    CHECK(y.grad()[0] == doctest::Approx(2 * 1.0 + 2 * 4.0));
    CHECK(y.grad()[1] == doctest::Approx(2 * -3.0 + 2 * 0.5));
}

TEST_CASE("backward is single-use per tape") {
    Tape tape;
    Tensor x = Tensor::from({1}, {2.0}, true);
    Tensor loss = ops::mul(tape, x, x);
    tape.backward(loss);
    CHECK(x.grad()[0] == 4.0);
    CHECK_THROWS(tape.backward(loss));
}

TEST_CASE("backward requires a scalar connected to the tape") {
    Tape tape;
    Tensor x = Tensor::from({2}, {1.0, 2.0}, true);
    Tensor vec = ops::add(tape, x, x);
    CHECK_THROWS(tape.backward(vec));
}

TEST_CASE("softmax rows sum to one and shift invariance holds") {
    Tape tape;
    Tensor x = Tensor::from({2, 3}, {1.0, 2.0, 3.0, -5.0, 0.0, 5.0});
    Tensor y = ops::softmax(tape, x, 1);
    for (int r = 0; r < 2; ++r) {
        double s = 0.0;
        for (int c = 0; c < 3; ++c) s += y.data()[r * 3 + c];
        CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    }
    Tensor shifted = Tensor::from({2, 3}, {101.0, 102.0, 103.0, 95.0, 100.0, 105.0});
    Tensor y2 = ops::softmax(tape, shifted, 1);
    for (int i = 0; i < 6; ++i) CHECK(y2.data()[i] == doctest::Approx(y.data()[i]).epsilon(1e-12));
}

TEST_CASE("batchnorm eval mode is idempotent on the running stats") {
    Tape tape;
    Tensor x = Tensor::from({2, 2, 2, 2}, {1, 2, 3, 4, 5, 6, 7, 8, 2, 3, 4, 5, 6, 7, 8, 9});
    Tensor gamma = Tensor::from({2}, {1.0, 2.0});
    Tensor beta = Tensor::from({2}, {0.5, -0.5});
    Tensor rm = Tensor::from({2}, {4.0, 6.0});
    Tensor rv = Tensor::from({2}, {2.0, 3.0});
    Tensor y1 = ops::batchnorm(tape, x, gamma, beta, rm, rv, false, 0.9, 1e-5, 1);
    // eval mode must not touch the buffers
    CHECK(rm.data()[0] == 4.0);
    CHECK(rv.data()[1] == 3.0);
    Tensor y2 = ops::batchnorm(tape, x, gamma, beta, rm, rv, false, 0.9, 1e-5, 1);
    for (std::size_t i = 0; i < y1.size(); ++i) CHECK(y1.data()[i] == y2.data()[i]);
}

TEST_CASE("batchnorm training updates the running buffers") {
    Tape tape;
    Tensor x = Tensor::from({1, 1, 2, 2}, {1.0, 2.0, 3.0, 6.0});
    Tensor gamma = Tensor::from({1}, {1.0});
    Tensor beta = Tensor::from({1}, {0.0});
    Tensor rm = Tensor::from({1}, {0.0});
    Tensor rv = Tensor::from({1}, {1.0});
    ops::batchnorm(tape, x, gamma, beta, rm, rv, true, 0.9, 1e-5, 1);
    const double mean = 3.0, var = (4.0 + 1.0 + 0.0 + 9.0) / 4.0;
    CHECK(rm.data()[0] == doctest::Approx(0.1 * mean).epsilon(1e-12));
    CHECK(rv.data()[0] == doctest::Approx(0.9 * 1.0 + 0.1 * var).epsilon(1e-12));
}

TEST_CASE("forward passes are deterministic") {
    auto run = [] {
        Tape tape;
        Tensor x = Tensor::from({1, 2, 4, 4}, std::vector<double>(32, 0.25), true);
        Tensor w = Tensor::from({2, 2, 3, 3}, std::vector<double>(36, 0.1), true);
        Tensor y = ops::conv2d(tape, x, w, Tensor(), 1, 1);
        Tensor loss = ops::mean_all(tape, ops::mul(tape, y, y));
        tape.backward(loss);
        return std::pair<double, double>{loss.item(), x.grad()[5]};
    };
    const auto a = run();
    const auto b = run();
    CHECK(a.first == b.first);
    CHECK(a.second == b.second);
}

TEST_CASE("conv2d validates shapes") {
    Tape tape;
    Tensor x = Tensor::zeros({1, 2, 4, 4});
    Tensor w_bad = Tensor::zeros({2, 3, 3, 3});
    CHECK_THROWS(ops::conv2d(tape, x, w_bad, Tensor(), 1, 1));
    Tensor w = Tensor::zeros({2, 2, 3, 3});
    CHECK_THROWS(ops::conv2d(tape, x, w, Tensor(), 0, 1));
    Tensor y = ops::conv2d(tape, x, w, Tensor(), 2, 1);
    CHECK(y.shape() == Shape{1, 2, 2, 2});
}

TEST_CASE("gradient suite passes on ten seeds") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto entries = run_gradient_suite(seed);
        for (const auto& e : entries) {
            INFO("seed ", seed, " entry ", e.name, " err ", e.max_rel_err);
            CHECK(e.pass);
            CHECK(e.max_rel_err < 1e-4);
        }
    }
}
