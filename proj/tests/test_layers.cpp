#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>

#include "argbd/layers.hpp"
#include "support/oracles.hpp"

using namespace argbd;

TEST_CASE("leaky relu branches") {
    Tensor<float> x(1, 1, 1, 3);
    x(0, 0, 0, 0) = 3.0f;
    x(0, 0, 0, 1) = -3.0f;
    x(0, 0, 0, 2) = 0.0f;
    Tensor<float> y = leaky_relu(x);
    CHECK(y(0, 0, 0, 0) == 3.0f);
    CHECK(y(0, 0, 0, 1) == -0.3f);
    CHECK(y(0, 0, 0, 2) == 0.0f); // x <= 0 takes the lambda branch

    Tensor<float> go(1, 1, 1, 3, 1.0f);
    Tensor<float> gx = leaky_relu_bwd(go, x);
    CHECK(gx(0, 0, 0, 0) == 1.0f);
    CHECK(gx(0, 0, 0, 1) == 0.1f);
    CHECK(gx(0, 0, 0, 2) == 0.1f);
}

TEST_CASE("batch norm: constant channel zeroes out, shift comes back via beta") {
    Tensor<float> x(2, 1, 3, 3, 4.2f);
    BatchNormState<float> st(1);
    Tensor<float> y = batch_norm_fwd(x, st, NormMode::train);
    for (index_t i = 0; i < y.size(); ++i) CHECK(y.data()[i] == Catch::Approx(0.0).margin(1e-6));

    BatchNormState<float> st2(1);
    st2.beta[0] = 5.0f;
    Tensor<float> y2 = batch_norm_fwd(x, st2, NormMode::train);
    for (index_t i = 0; i < y2.size(); ++i) CHECK(y2.data()[i] == Catch::Approx(5.0).margin(1e-6));
}

TEST_CASE("batch norm: train mode standardizes each channel") {
    std::mt19937_64 rng(31);
    Tensor<float> x = oracle::random_tensor<float>({4, 3, 8, 8}, rng, -2.0, 3.0);
    BatchNormState<float> st(3);
    Tensor<float> y = batch_norm_fwd(x, st, NormMode::train);
    const index_t n = 4 * 8 * 8;
    for (index_t c = 0; c < 3; ++c) {
        double sum = 0.0, sq = 0.0;
        for (index_t b = 0; b < 4; ++b) {
            const float* p = y.plane(b, c);
            for (index_t i = 0; i < 64; ++i) {
                sum += p[i];
                sq += static_cast<double>(p[i]) * p[i];
            }
        }
        const double mean = sum / n;
        const double var = sq / n - mean * mean;
        CHECK(std::abs(mean) <= 1e-5);
        CHECK(std::abs(var - 1.0) <= 1e-3);
    }
}

TEST_CASE("batch norm: running statistics feed inference") {
    std::mt19937_64 rng(37);
    Tensor<float> x = oracle::random_tensor<float>({2, 2, 4, 4}, rng);
    BatchNormState<float> st(2);
    for (int step = 0; step < 120; ++step) batch_norm_fwd(x, st, NormMode::train);
    // after many identical batches the running stats converge to the batch's
    Tensor<float> train_out = batch_norm_eval(x, st, NormMode::train);
    Tensor<float> infer_out = batch_norm_fwd(x, st, NormMode::infer);
    CHECK(oracle::max_abs_err(train_out, infer_out) <= 1e-3);
}

TEST_CASE("batch norm rejects channel mismatch") {
    Tensor<float> x(1, 2, 2, 2, 1.0f);
    BatchNormState<float> st(3);
    CHECK_THROWS_AS(batch_norm_fwd(x, st, NormMode::train), ShapeError);
}

TEST_CASE("pixel shuffle lays out channel groups as spatial cells") {
    Tensor<float> x(1, 4, 1, 1);
    for (index_t c = 0; c < 4; ++c) x(0, c, 0, 0) = static_cast<float>(c + 1);
    Tensor<float> y = pixel_shuffle(x, 2);
    REQUIRE(y.shape() == Shape{1, 1, 2, 2});
    CHECK(y(0, 0, 0, 0) == 1.0f);
    CHECK(y(0, 0, 0, 1) == 2.0f);
    CHECK(y(0, 0, 1, 0) == 3.0f);
    CHECK(y(0, 0, 1, 1) == 4.0f);
}

TEST_CASE("pixel shuffle handles the super-resolution head shape") {
    Tensor<float> x(1, 128, 8, 8, 1.0f);
    CHECK(pixel_shuffle(x, 4).shape() == Shape{1, 8, 32, 32});
}

TEST_CASE("pixel shuffle round-trips and preserves the value multiset") {
    std::mt19937_64 rng(41);
    Tensor<float> x = oracle::random_tensor<float>({2, 8, 3, 5}, rng);
    Tensor<float> y = pixel_shuffle(x, 2);
    CHECK(pixel_unshuffle(y, 2) == x);

    std::vector<float> a(x.data(), x.data() + x.size());
    std::vector<float> b(y.data(), y.data() + y.size());
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    CHECK(a == b);
}

TEST_CASE("pixel shuffle rejects indivisible channel counts") {
    Tensor<float> x(1, 6, 2, 2, 1.0f);
    CHECK_THROWS_AS(pixel_shuffle(x, 2), ShapeError);
}

TEST_CASE("1x1 convolution mixes channels per pixel") {
    Tensor<float> x(1, 2, 1, 2);
    x(0, 0, 0, 0) = 1.0f;
    x(0, 0, 0, 1) = 2.0f;
    x(0, 1, 0, 0) = 3.0f;
    x(0, 1, 0, 1) = 4.0f;
    Tensor<float> w(1, 2, 1, 1);
    w(0, 0, 0, 0) = 2.0f;
    w(0, 1, 0, 0) = -1.0f;
    Tensor<float> y = conv1x1_fwd(x, w, std::vector<float>{0.5f});
    CHECK(y(0, 0, 0, 0) == Catch::Approx(2.0 - 3.0 + 0.5));
    CHECK(y(0, 0, 0, 1) == Catch::Approx(4.0 - 4.0 + 0.5));
}

TEST_CASE("tanh head stays in the unit interval") {
    std::mt19937_64 rng(43);
    Tensor<float> x = oracle::random_tensor<float>({1, 1, 6, 6}, rng, -30.0, 30.0);
    Tensor<float> y = tanh_to_unit(x);
    for (index_t i = 0; i < y.size(); ++i) {
        CHECK(y.data()[i] >= 0.0f);
        CHECK(y.data()[i] <= 1.0f);
    }
    Tensor<float> zero(1, 1, 1, 1, 0.0f);
    CHECK(tanh_to_unit(zero)(0, 0, 0, 0) == Catch::Approx(0.5));
}

TEST_CASE("clamp gradient passes through strictly inside the range") {
    Tensor<float> x(1, 1, 1, 4);
    x(0, 0, 0, 0) = -0.5f;
    x(0, 0, 0, 1) = 0.25f;
    x(0, 0, 0, 2) = 0.75f;
    x(0, 0, 0, 3) = 1.5f;
    Tensor<float> y = clamp(x, 0.0f, 1.0f);
    CHECK(y(0, 0, 0, 0) == 0.0f);
    CHECK(y(0, 0, 0, 3) == 1.0f);
    Tensor<float> go(1, 1, 1, 4, 1.0f);
    Tensor<float> gx = clamp_bwd(go, x, 0.0f, 1.0f);
    CHECK(gx(0, 0, 0, 0) == 0.0f);
    CHECK(gx(0, 0, 0, 1) == 1.0f);
    CHECK(gx(0, 0, 0, 2) == 1.0f);
    CHECK(gx(0, 0, 0, 3) == 0.0f);
}
