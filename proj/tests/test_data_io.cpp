#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <random>
#include <sstream>

#include <png.h>

#include "argbd/dataset.hpp"
#include "argbd/png_io.hpp"
#include "support/oracles.hpp"

using namespace argbd;

namespace {

std::string temp_path(const char* tag, const char* ext = ".png") {
    static int counter = 0;
    auto dir = std::filesystem::temp_directory_path() / "argbd_io_tests";
    std::filesystem::create_directories(dir);
    return (dir / (std::string(tag) + std::to_string(counter++) + ext)).string();
}

// an 8-bit grayscale png, which the depth loader must refuse
void write_gray8_png(const std::string& path, int w, int h) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    REQUIRE(f != nullptr);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    REQUIRE(setjmp(png_jmpbuf(png)) == 0);
    png_init_io(png, f);
    png_set_IHDR(png, info, w, h, 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_byte> row(static_cast<std::size_t>(w), 99);
    for (int y = 0; y < h; ++y) png_write_row(png, row.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(f);
}

} // namespace

TEST_CASE("depth png round-trips every sample exactly") {
    std::mt19937_64 rng(55);
    const index_t w = 23, h = 17;
    std::vector<std::uint16_t> depth(static_cast<std::size_t>(w * h));
    for (auto& d : depth) d = static_cast<std::uint16_t>(rng() % 65536);
    const std::string path = temp_path("depth");
    save_depth_png(depth, w, h, path);
    auto [loaded, dims] = load_depth_png(path);
    CHECK(dims.first == w);
    CHECK(dims.second == h);
    CHECK(loaded == depth);
}

TEST_CASE("rgb png round-trips") {
    std::mt19937_64 rng(56);
    RgbImage img;
    img.width = 9;
    img.height = 7;
    img.pixels.resize(static_cast<std::size_t>(9 * 7 * 3));
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng() % 256);
    const std::string path = temp_path("rgb");
    save_rgb_png(img, path);
    RgbImage loaded = load_rgb_png(path);
    CHECK(loaded.width == img.width);
    CHECK(loaded.height == img.height);
    CHECK(loaded.pixels == img.pixels);
}

TEST_CASE("depth loader rejects 8-bit files with a typed error") {
    const std::string path = temp_path("gray8");
    write_gray8_png(path, 6, 5);
    CHECK_THROWS_AS(load_depth_png(path), IoError);

    // color files are no depth images either
    RgbImage img;
    img.width = 4;
    img.height = 4;
    img.pixels.assign(48, 100);
    const std::string cpath = temp_path("color");
    save_rgb_png(img, cpath);
    CHECK_THROWS_AS(load_depth_png(cpath), IoError);
    CHECK_THROWS_AS(load_depth_png("/nonexistent/depth.png"), IoError);
}

TEST_CASE("16-bit color input is rejected by the rgb loader") {
    // write a 16-bit gray png and try to read it as color
    std::vector<std::uint16_t> depth(16, 1234);
    const std::string path = temp_path("gray16");
    save_depth_png(depth, 4, 4, path);
    CHECK_THROWS_AS(load_rgb_png(path), IoError);
}

TEST_CASE("rgbd pair loading checks dimension agreement") {
    RgbdImage img = synth_scene(3, 16, 12, 2);
    const std::string rgb_path = temp_path("pair_rgb");
    const std::string depth_path = temp_path("pair_depth");
    save_rgbd(img, rgb_path, depth_path);
    RgbdImage loaded = load_rgbd(rgb_path, depth_path);
    CHECK(loaded.width == img.width);
    CHECK(loaded.depth == img.depth);
    CHECK(loaded.rgb == img.rgb);

    const std::string small_path = temp_path("small_depth");
    save_depth_png(std::vector<std::uint16_t>(16, 7), 4, 4, small_path);
    CHECK_THROWS_AS(load_rgbd(rgb_path, small_path), IoError);
}

TEST_CASE("all-zero depth converts to an all-invalid filter map") {
    RgbdImage img = RgbdImage::allocate(5, 4);
    FilterMap map = filter_map_from_depth(img);
    CHECK(map.count_valid() == 0);
    img.set_depth(2, 3, 1200);
    CHECK(filter_map_from_depth(img).count_valid() == 1);
}

TEST_CASE("hole synthesis dilates a single invalid pixel into growing blocks") {
    const index_t size = 21;
    std::vector<std::uint16_t> depth(static_cast<std::size_t>(size * size), 1000);
    depth[static_cast<std::size_t>(10 * size + 10)] = 0;

    auto pairs = synthesize_holes(depth, size, size, 4, 1, 1);
    REQUIRE(pairs.size() == 4);
    // one 3x3 dilation produces a 3x3 block, each further one grows by 2
    for (int k = 1; k <= 4; ++k) {
        const index_t side = 2 * k + 1;
        const HolePair& p = pairs[static_cast<std::size_t>(k - 1)];
        CHECK(p.mask.size() - p.mask.count_valid() == side * side);
        for (index_t y = 0; y < size; ++y) {
            for (index_t x = 0; x < size; ++x) {
                const bool in_block = std::abs(y - 10) <= k && std::abs(x - 10) <= k;
                CHECK(p.mask.at(y, x) == (in_block ? 0 : 1));
                CHECK(p.depth[static_cast<std::size_t>(y * size + x)] ==
                      (in_block ? 0 : 1000));
            }
        }
    }
}

TEST_CASE("hole synthesis: masks are monotone and corruption only removes") {
    RgbdImage img = synth_scene(17, 32, 32, 3);
    auto pairs = synthesize_holes(img.depth, 32, 32, 4, 4, 99);
    REQUIRE(pairs.size() == 4);
    for (std::size_t k = 1; k < pairs.size(); ++k) {
        for (index_t y = 0; y < 32; ++y) {
            for (index_t x = 0; x < 32; ++x) {
                // every hole at level k-1 is still a hole at level k
                if (!pairs[k - 1].mask.at(y, x)) CHECK(pairs[k].mask.at(y, x) == 0);
            }
        }
    }
    for (const HolePair& p : pairs) {
        for (index_t y = 0; y < 32; ++y) {
            for (index_t x = 0; x < 32; ++x) {
                if (p.mask.at(y, x)) {
                    CHECK(p.depth[static_cast<std::size_t>(y * 32 + x)] == img.depth_at(y, x));
                } else {
                    CHECK(p.depth[static_cast<std::size_t>(y * 32 + x)] == 0);
                }
            }
        }
    }
}

TEST_CASE("hole synthesis with zero iterations reproduces the source") {
    RgbdImage img = synth_scene(19, 16, 16, 2);
    auto pairs = synthesize_holes(img.depth, 16, 16, 0, 4, 7);
    REQUIRE(pairs.size() == 1);
    CHECK(pairs[0].depth == img.depth);
    CHECK(pairs[0].mask.all_valid());
}

TEST_CASE("downsampling samples the stride grid") {
    RgbdImage img = RgbdImage::allocate(4, 4);
    for (index_t y = 0; y < 4; ++y) {
        for (index_t x = 0; x < 4; ++x) img.set_depth(y, x, 777);
    }
    RgbdImage down = downsample_nearest(img, 4);
    REQUIRE(down.width == 1);
    REQUIRE(down.height == 1);
    CHECK(down.depth_at(0, 0) == 777);

    RgbdImage same = downsample_nearest(img, 1);
    CHECK(same.depth == img.depth);

    // checkerboard collapses to one parity
    Tensor<float> board(1, 1, 4, 4);
    for (index_t y = 0; y < 4; ++y) {
        for (index_t x = 0; x < 4; ++x) board(0, 0, y, x) = static_cast<float>((x + y) % 2);
    }
    Tensor<float> flat = downsample_nearest(board, 2);
    for (index_t i = 0; i < flat.size(); ++i) CHECK(flat.data()[i] == 0.0f);
}

TEST_CASE("synthetic scenes are deterministic, complete and seed-sensitive") {
    RgbdImage a = synth_scene(123, 24, 24, 3);
    RgbdImage b = synth_scene(123, 24, 24, 3);
    CHECK(a.depth == b.depth);
    CHECK(a.rgb == b.rgb);

    RgbdImage c = synth_scene(124, 24, 24, 3);
    CHECK(a.depth != c.depth);

    for (std::uint16_t d : a.depth) {
        CHECK(d >= 500);
        CHECK(d <= 5000);
    }

    RgbdImage plain = synth_scene(9, 24, 24, 0);
    std::uint16_t lo = 65535, hi = 0;
    for (std::uint16_t d : plain.depth) {
        lo = std::min(lo, d);
        hi = std::max(hi, d);
    }
    // pure background: a smooth nonconstant ramp
    CHECK(hi > lo);
    CHECK(hi - lo < 2000);

    RgbdImage flat = synth_scene(9, 24, 24, 0, SceneStyle::flat_background);
    lo = 65535;
    hi = 0;
    for (std::uint16_t d : flat.depth) {
        lo = std::min(lo, d);
        hi = std::max(hi, d);
    }
    CHECK(hi - lo < 200);
}

TEST_CASE("point cloud export back-projects valid pixels only") {
    RgbdImage img = RgbdImage::allocate(8, 8);
    img.intrinsics = {100.0, 100.0, 4.0, 3.0};
    img.set_depth(3, 4, 1000); // the principal point
    img.set_depth(0, 0, 2000);
    img.rgb_at(3, 4)[0] = 200;

    const std::string path = temp_path("cloud", ".ply");
    export_pointcloud(img, path);

    std::ifstream is(path);
    std::string line;
    index_t vertex_count = -1;
    std::vector<std::string> body;
    bool header = true;
    while (std::getline(is, line)) {
        if (header) {
            if (line.rfind("element vertex", 0) == 0) {
                vertex_count = std::stol(line.substr(15));
            }
            if (line == "end_header") header = false;
            continue;
        }
        body.push_back(line);
    }
    CHECK(vertex_count == 2); // one per valid pixel
    REQUIRE(body.size() == 2);
    // second point is the principal-point pixel at depth 1 m
    std::istringstream ps(body[1]);
    double x, y, z;
    int r, g, b;
    ps >> x >> y >> z >> r >> g >> b;
    CHECK(x == Catch::Approx(0.0).margin(1e-9));
    CHECK(y == Catch::Approx(0.0).margin(1e-9));
    CHECK(z == Catch::Approx(1.0).margin(1e-9));
    CHECK(r == 200);
}

TEST_CASE("manifest round-trips and flags malformed lines") {
    DatasetManifest m;
    m.entries.push_back({"train", "a.png", "b.png", "c.png"});
    m.entries.push_back({"val", "d.png", "e.png", "f.png"});
    const std::string path = temp_path("manifest", ".tsv");
    save_manifest(m, path);
    DatasetManifest loaded = load_manifest(path);
    REQUIRE(loaded.entries.size() == 2);
    CHECK(loaded.entries[1].split == "val");
    CHECK(loaded.entries[1].mask == "f.png");

    std::ofstream bad(path);
    bad << "only two\tfields\n";
    bad.close();
    CHECK_THROWS_AS(load_manifest(path), ConfigError);
}

TEST_CASE("intrinsics config round-trips and validates") {
    CameraIntrinsics k{520.1, 521.2, 310.3, 242.4};
    const std::string path = temp_path("intr", ".cfg");
    save_intrinsics(k, path);
    CameraIntrinsics loaded = load_intrinsics(path);
    CHECK(loaded.fx == Catch::Approx(k.fx));
    CHECK(loaded.cy == Catch::Approx(k.cy));

    std::ofstream bad(path);
    bad << "fx=1\nfy=2\ncx=3\n"; // cy missing
    bad.close();
    CHECK_THROWS_AS(load_intrinsics(path), ConfigError);
}

TEST_CASE("dataset generation writes loadable, consistent triples") {
    const std::string dir =
        (std::filesystem::temp_directory_path() / "argbd_io_tests" / "dataset").string();
    DatasetManifest manifest = generate_dataset(dir, 31, 6, 32);
    REQUIRE(manifest.entries.size() == 6);
    auto samples = load_completion_dataset<float>(manifest);
    REQUIRE(samples.size() == 6);
    for (const auto& s : samples) {
        CHECK(s.input.shape() == Shape{1, 1, 32, 32});
        CHECK(s.target.shape() == Shape{1, 1, 32, 32});
        CHECK(s.map.size() == 32 * 32);
        CHECK_FALSE(s.map.all_valid()); // corruption actually happened
        for (index_t y = 0; y < 32; ++y) {
            for (index_t x = 0; x < 32; ++x) {
                if (!s.map.at(y, x)) CHECK(s.input(0, 0, y, x) == 0.0f);
            }
        }
    }
    // reproducible per seed
    DatasetManifest manifest2 = generate_dataset(dir + "_again", 31, 6, 32);
    auto samples2 = load_completion_dataset<float>(manifest2);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        CHECK(samples[i].input == samples2[i].input);
    }
}
