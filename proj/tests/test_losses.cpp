#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "argbd/losses.hpp"
#include "support/oracles.hpp"

using namespace argbd;

namespace {

// The 2x2 vectors from the worked arithmetic: gt/out laid out row-major,
// mask marks the first two pixels valid.
struct HandCase {
    Tensor<double> gt{1, 1, 1, 4};
    Tensor<double> out{1, 1, 1, 4};
    FilterMap map{1, 4, 0};

    HandCase() {
        const double g[4] = {0.5, 0.5, 0.2, 0.8};
        const double o[4] = {0.4, 0.7, 0.2, 0.8};
        for (index_t i = 0; i < 4; ++i) {
            gt(0, 0, 0, i) = g[i];
            out(0, 0, 0, i) = o[i];
        }
        map.set(0, 0, 1);
        map.set(0, 1, 1);
    }
};

} // namespace

TEST_CASE("loss_valid reproduces the hand-computed value exactly") {
    HandCase c;
    CHECK(loss_valid(c.gt, c.out, c.map).value == Catch::Approx(0.025).margin(1e-15));
    CHECK(loss_valid(c.gt, c.gt, c.map).value == 0.0);

    FilterMap all(1, 4, 1);
    // with a full mask this is the plain mean squared error
    double mse = 0.0;
    for (index_t i = 0; i < 4; ++i) {
        const double d = c.out(0, 0, 0, i) - c.gt(0, 0, 0, i);
        mse += d * d;
    }
    mse /= 4.0;
    CHECK(loss_valid(c.gt, c.out, all).value == Catch::Approx(mse).epsilon(1e-12));
}

TEST_CASE("loss_invalid reproduces the hand-computed value exactly") {
    HandCase c;
    CHECK(loss_invalid(c.gt, c.out, c.map).value == 0.0); // invalid pixels agree

    Tensor<double> out2 = c.out;
    out2(0, 0, 0, 2) = 0.3; // differ by 0.1 on one invalid pixel
    CHECK(loss_invalid(c.gt, out2, c.map).value == Catch::Approx(0.005).margin(1e-15));
}

TEST_CASE("loss_valid with m equals loss_invalid with the complement") {
    std::mt19937_64 rng(53);
    Tensor<double> gt = oracle::random_tensor<double>({1, 1, 5, 5}, rng);
    Tensor<double> out = oracle::random_tensor<double>({1, 1, 5, 5}, rng);
    FilterMap m = oracle::random_map(5, 5, rng);
    FilterMap inv(5, 5, 0);
    for (index_t y = 0; y < 5; ++y) {
        for (index_t x = 0; x < 5; ++x) inv.set(y, x, m.at(y, x) ? 0 : 1);
    }
    CHECK(loss_valid(gt, out, m).value == Catch::Approx(loss_invalid(gt, out, inv).value));
}

TEST_CASE("loss_completion combines the two terms with the configured weights") {
    HandCase c;
    Tensor<double> out2 = c.out;
    out2(0, 0, 0, 2) = 0.3;
    // components (0.025, 0.005) with the defaults w_alpha=1, w_beta=6
    CHECK(loss_completion(c.gt, out2, c.map).value == Catch::Approx(0.055).margin(1e-15));
    CHECK(loss_completion(c.gt, c.gt, c.map).value == 0.0);
}

TEST_CASE("loss_completion is linear in its two components") {
    std::mt19937_64 rng(59);
    Tensor<double> gt = oracle::random_tensor<double>({1, 1, 6, 6}, rng);
    Tensor<double> out = oracle::random_tensor<double>({1, 1, 6, 6}, rng);
    FilterMap m = oracle::random_map(6, 6, rng);
    const double lv = loss_valid(gt, out, m).value;
    const double li = loss_invalid(gt, out, m).value;
    for (const auto& [wa, wb] : std::vector<std::pair<double, double>>{
             {1.0, 6.0}, {2.0, 0.5}, {0.25, 3.0}}) {
        LossWeights w{wa, wb};
        CHECK(loss_completion(gt, out, m, w).value ==
              Catch::Approx(wa * lv + wb * li).epsilon(1e-12));
    }
}

TEST_CASE("degenerate masks contribute zero instead of dividing by zero") {
    std::mt19937_64 rng(61);
    Tensor<double> gt = oracle::random_tensor<double>({1, 1, 3, 3}, rng);
    Tensor<double> out = oracle::random_tensor<double>({1, 1, 3, 3}, rng);
    LossValue<double> lv = loss_valid(gt, out, FilterMap(3, 3, 0));
    CHECK(lv.value == 0.0);
    CHECK(lv.degenerate);
    for (index_t i = 0; i < lv.grad.size(); ++i) CHECK(lv.grad.data()[i] == 0.0);

    LossValue<double> li = loss_invalid(gt, out, FilterMap(3, 3, 1));
    CHECK(li.value == 0.0);
    CHECK(li.degenerate);
}

TEST_CASE("loss_sr reproduces the hand-computed value") {
    Tensor<double> gt(1, 1, 2, 2, 0.5);
    Tensor<double> out = gt;
    CHECK(loss_sr(gt, out, 2).value == 0.0);

    out(0, 0, 1, 1) = 0.6; // one of four pixels differs by 0.1
    CHECK(loss_sr(gt, out, 2).value == Catch::Approx(0.0025).margin(1e-15));

    // quadratic scaling: doubling the error quadruples the loss
    Tensor<double> out2 = gt;
    out2(0, 0, 1, 1) = 0.7;
    CHECK(loss_sr(gt, out2, 2).value == Catch::Approx(0.01).epsilon(1e-12));
}

TEST_CASE("losses are non-negative and zero only at exact agreement") {
    std::mt19937_64 rng(67);
    for (int trial = 0; trial < 10; ++trial) {
        Tensor<double> gt = oracle::random_tensor<double>({1, 1, 4, 4}, rng);
        Tensor<double> out = oracle::random_tensor<double>({1, 1, 4, 4}, rng);
        FilterMap m = oracle::random_map(4, 4, rng, 0.5);
        CHECK(loss_valid(gt, out, m).value >= 0.0);
        CHECK(loss_invalid(gt, out, m).value >= 0.0);
        CHECK(loss_sr(gt, out, 2).value >= 0.0);
    }
    Tensor<double> gt = oracle::random_tensor<double>({1, 1, 4, 4}, rng);
    CHECK(loss_sr(gt, gt, 2).value == 0.0);
}

TEST_CASE("losses reject mismatched shapes") {
    Tensor<double> gt(1, 1, 2, 2, 0.0);
    Tensor<double> out(1, 1, 2, 3, 0.0);
    FilterMap m(2, 2, 1);
    CHECK_THROWS_AS(loss_valid(gt, out, m), ShapeError);
    CHECK_THROWS_AS(loss_sr(gt, out, 2), ShapeError);
}
