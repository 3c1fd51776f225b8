#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "argbd/tensor.hpp"
#include "support/oracles.hpp"

using namespace argbd;

TEST_CASE("concat_channels copies both operands verbatim") {
    Tensor<float> a(1, 2, 2, 2);
    Tensor<float> b(1, 1, 2, 2);
    for (index_t i = 0; i < a.size(); ++i) a.data()[i] = static_cast<float>(i + 1);
    for (index_t i = 0; i < b.size(); ++i) b.data()[i] = static_cast<float>(100 + i);

    Tensor<float> cat = concat_channels(a, b);
    REQUIRE(cat.shape() == Shape{1, 3, 2, 2});
    for (index_t c = 0; c < 2; ++c) {
        for (index_t y = 0; y < 2; ++y) {
            for (index_t x = 0; x < 2; ++x) CHECK(cat(0, c, y, x) == a(0, c, y, x));
        }
    }
    // b's plane lands at channel index 2
    for (index_t y = 0; y < 2; ++y) {
        for (index_t x = 0; x < 2; ++x) CHECK(cat(0, 2, y, x) == b(0, 0, y, x));
    }
}

TEST_CASE("concat_channels matches the completion network skip sizes") {
    Tensor<float> a(1, 128, 16, 16, 1.0f);
    Tensor<float> b(1, 128, 16, 16, 2.0f);
    CHECK(concat_channels(a, b).shape() == Shape{1, 256, 16, 16});
}

TEST_CASE("concat then split recovers both operands bitwise") {
    std::mt19937_64 rng(7);
    Tensor<float> a = oracle::random_tensor<float>({2, 2, 3, 4}, rng);
    Tensor<float> b = oracle::random_tensor<float>({2, 3, 3, 4}, rng);
    auto [a2, b2] = split_channels(concat_channels(a, b), 2);
    CHECK(a2 == a);
    CHECK(b2 == b);
}

TEST_CASE("concat_channels rejects mismatched non-channel axes") {
    Tensor<float> a(1, 2, 2, 2);
    Tensor<float> b(1, 1, 3, 2);
    CHECK_THROWS_AS(concat_channels(a, b), ShapeError);
}

TEST_CASE("upsample_nearest replicates values") {
    Tensor<float> x(1, 1, 1, 1, 3.0f);
    Tensor<float> up = upsample_nearest(x, 2);
    REQUIRE(up.shape() == Shape{1, 1, 2, 2});
    for (index_t i = 0; i < up.size(); ++i) CHECK(up.data()[i] == 3.0f);

    Tensor<float> col(1, 1, 2, 1);
    col(0, 0, 0, 0) = 1.0f;
    col(0, 0, 1, 0) = 2.0f;
    Tensor<float> up2 = upsample_nearest(col, 2);
    REQUIRE(up2.shape() == Shape{1, 1, 4, 2});
    const float expect[4] = {1.0f, 1.0f, 2.0f, 2.0f};
    for (index_t y = 0; y < 4; ++y) {
        CHECK(up2(0, 0, y, 0) == expect[y]);
        CHECK(up2(0, 0, y, 1) == expect[y]);
    }
}

TEST_CASE("upsample_nearest factor 1 is the identity") {
    std::mt19937_64 rng(3);
    Tensor<float> x = oracle::random_tensor<float>({1, 2, 3, 5}, rng);
    CHECK(upsample_nearest(x, 1) == x);
}

TEST_CASE("upsample_nearest composes multiplicatively") {
    std::mt19937_64 rng(11);
    Tensor<float> x = oracle::random_tensor<float>({1, 2, 3, 2}, rng);
    CHECK(upsample_nearest(upsample_nearest(x, 2), 3) == upsample_nearest(x, 6));
}

TEST_CASE("pad_zero grows the border with zeros") {
    Tensor<float> x(1, 1, 1, 1, 5.0f);
    Tensor<float> p = pad_zero(x, 1, 1, 1, 1);
    REQUIRE(p.shape() == Shape{1, 1, 3, 3});
    for (index_t y = 0; y < 3; ++y) {
        for (index_t xx = 0; xx < 3; ++xx) {
            CHECK(p(0, 0, y, xx) == ((y == 1 && xx == 1) ? 5.0f : 0.0f));
        }
    }

    std::mt19937_64 rng(5);
    Tensor<float> r = oracle::random_tensor<float>({1, 2, 2, 2}, rng);
    CHECK(pad_zero(r, 0, 0, 0, 0) == r);

    Tensor<float> top = pad_zero(r, 1, 0, 0, 0);
    REQUIRE(top.shape() == Shape{1, 2, 3, 2});
    for (index_t c = 0; c < 2; ++c) {
        CHECK(top(0, c, 0, 0) == 0.0f);
        CHECK(top(0, c, 0, 1) == 0.0f);
        CHECK(top(0, c, 1, 0) == r(0, c, 0, 0));
    }
}

TEST_CASE("flatten then reshape to the same dims is bitwise identity") {
    std::mt19937_64 rng(13);
    Tensor<float> x = oracle::random_tensor<float>({2, 3, 4, 5}, rng);
    Tensor<float> flat = reshape(x, Shape{1, 1, 1, x.size()});
    CHECK(reshape(flat, x.shape()) == x);
}

TEST_CASE("concat_channels is associative up to channel order") {
    std::mt19937_64 rng(17);
    Tensor<float> a = oracle::random_tensor<float>({1, 1, 2, 2}, rng);
    Tensor<float> b = oracle::random_tensor<float>({1, 2, 2, 2}, rng);
    Tensor<float> c = oracle::random_tensor<float>({1, 3, 2, 2}, rng);
    CHECK(concat_channels(concat_channels(a, b), c) ==
          concat_channels(a, concat_channels(b, c)));
}

TEST_CASE("empty tensors are legal values") {
    Tensor<float> e(Shape{0, 3, 4, 5});
    CHECK(e.size() == 0);
    CHECK(e.empty());
    CHECK_THROWS_AS(Tensor<float>(Shape{-1, 1, 1, 1}), ShapeError);
}
