#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "argbd/metrics.hpp"
#include "support/oracles.hpp"

using namespace argbd;

TEST_CASE("masked errors vanish when prediction equals ground truth") {
    Tensor<float> gt(1, 1, 4, 4, 0.5f);
    ErrorReport r = masked_errors(gt, gt, FilterMap(4, 4, 1));
    CHECK(r.rmse == 0.0);
    CHECK(std::isinf(r.psnr));
    CHECK(r.evaluated == 16);
}

TEST_CASE("uniform error of 0.1 gives RMSE 0.1 and PSNR 20 dB") {
    Tensor<float> gt(1, 1, 8, 8, 0.4f);
    Tensor<float> pred(1, 1, 8, 8, 0.5f);
    ErrorReport r = masked_errors(gt, pred, FilterMap(8, 8, 1));
    CHECK(r.rmse == Catch::Approx(0.1).margin(1e-7));
    CHECK(r.psnr == Catch::Approx(20.0).margin(1e-4));
    CHECK(r.mean_abs == Catch::Approx(0.1).margin(1e-7));
    CHECK(r.max_abs == Catch::Approx(0.1).margin(1e-7));
}

TEST_CASE("errors on masked-out pixels do not count") {
    Tensor<float> gt(1, 1, 4, 4, 0.5f);
    Tensor<float> pred = gt;
    FilterMap map(4, 4, 1);
    map.set(1, 1, 0);
    map.set(2, 3, 0);
    pred(0, 0, 1, 1) = 0.9f;
    pred(0, 0, 2, 3) = 0.1f;
    ErrorReport r = masked_errors(gt, pred, map);
    CHECK(r.rmse == 0.0);
    CHECK(r.evaluated == 14);
    CHECK(r.error_map[1 * 4 + 1] == ErrorReport::kExcluded);
}

TEST_CASE("masked errors require a non-empty evaluation set") {
    Tensor<float> gt(1, 1, 2, 2, 0.5f);
    CHECK_THROWS_AS(masked_errors(gt, gt, FilterMap(2, 2, 0)), ShapeError);
}

TEST_CASE("squared-error identity holds in 64-bit") {
    std::mt19937_64 rng(83);
    Tensor<double> gt = oracle::random_tensor<double>({1, 1, 12, 12}, rng, 0.0, 1.0);
    Tensor<double> pred = oracle::random_tensor<double>({1, 1, 12, 12}, rng, 0.0, 1.0);
    FilterMap map = oracle::random_map(12, 12, rng);
    ErrorReport r = masked_errors(gt, pred, map);
    double sq = 0.0;
    for (double e : r.error_map) {
        if (e != ErrorReport::kExcluded) sq += e * e;
    }
    CHECK(r.rmse * r.rmse * static_cast<double>(r.evaluated) == Catch::Approx(sq).epsilon(1e-12));
}

TEST_CASE("PSNR strictly decreases as RMSE grows") {
    Tensor<float> gt(1, 1, 6, 6, 0.5f);
    double last_psnr = std::numeric_limits<double>::infinity();
    double last_rmse = 0.0;
    for (float err : {0.01f, 0.02f, 0.05f, 0.15f, 0.4f}) {
        Tensor<float> pred(1, 1, 6, 6, 0.5f + err);
        ErrorReport r = masked_errors(gt, pred, FilterMap(6, 6, 1));
        CHECK(r.rmse > last_rmse);
        CHECK(r.psnr < last_psnr);
        last_psnr = r.psnr;
        last_rmse = r.rmse;
    }
}

TEST_CASE("shrinking the mask never increases the evaluated count") {
    std::mt19937_64 rng(89);
    Tensor<float> gt = oracle::random_tensor<float>({1, 1, 8, 8}, rng, 0.0, 1.0);
    Tensor<float> pred = oracle::random_tensor<float>({1, 1, 8, 8}, rng, 0.0, 1.0);
    FilterMap big = oracle::random_map(8, 8, rng, 0.9);
    FilterMap small = big;
    for (int i = 0; i < 12; ++i) {
        small.set(static_cast<index_t>(rng() % 8), static_cast<index_t>(rng() % 8), 0);
    }
    if (small.count_valid() == 0) small.set(0, 0, 1);
    ErrorReport rb = masked_errors(gt, pred, big);
    ErrorReport rs = masked_errors(gt, pred, small);
    CHECK(rs.evaluated <= rb.evaluated);
}

TEST_CASE("error colormap renders the documented ramp") {
    ErrorReport r;
    r.width = 4;
    r.height = 1;
    r.error_map = {0.0, 0.05, 0.1, ErrorReport::kExcluded};
    r.evaluated = 3;
    RgbImage img = error_colormap(r, 0.1);
    // zero error: bottom of the ramp, pure blue
    CHECK(img.pixels[0] == 0);
    CHECK(img.pixels[2] == 255);
    // halfway
    CHECK(img.pixels[3] == 128);
    CHECK(img.pixels[5] == 128);
    // at (and beyond) the cap: saturated red
    CHECK(img.pixels[6] == 255);
    CHECK(img.pixels[8] == 0);
    // excluded: black
    CHECK(img.pixels[9] == 0);
    CHECK(img.pixels[10] == 0);
    CHECK(img.pixels[11] == 0);

    r.error_map[1] = 0.5; // beyond the cap saturates
    RgbImage img2 = error_colormap(r, 0.1);
    CHECK(img2.pixels[3] == 255);
    CHECK(img2.pixels[5] == 0);
}

TEST_CASE("report record writes line-delimited key-value pairs") {
    Tensor<float> gt(1, 1, 2, 2, 0.5f);
    Tensor<float> pred(1, 1, 2, 2, 0.6f);
    ErrorReport r = masked_errors(gt, pred, FilterMap(2, 2, 1));
    std::ostringstream os;
    write_report(r, os);
    CHECK(os.str().find("rmse=0.1") != std::string::npos);
    CHECK(os.str().find("evaluated_pixels=4") != std::string::npos);
}
