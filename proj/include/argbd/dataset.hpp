#pragma once

#include <filesystem>
#include <random>

#include "argbd/png_io.hpp"
#include "argbd/train.hpp"

namespace argbd {

// Scene flavors for the two training tasks. Both render complete depth in
// roughly [500, 5000] mm: a background plane plus axis-aligned rectangles and
// ellipses on distinct depth planes offset from the background under them.
//   sloped_background: the background ramps over 1-2 m across the image, so
//     completion must continue a wide, predictable structure through holes.
//   flat_background: the ramp stays shallow enough that, after per-image
//     normalization, neighboring low-resolution pixels fall inside the
//     depth-gate similarity threshold while object edges exceed it by an
//     order of magnitude; used for super-resolution pairs.
enum class SceneStyle { sloped_background, flat_background };

inline RgbdImage synth_scene(std::uint64_t seed, index_t width, index_t height,
                             int object_count,
                             SceneStyle style = SceneStyle::sloped_background) {
    RgbdImage img = RgbdImage::allocate(width, height);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    const double base = 2400.0 + 1000.0 * unit(rng); // background anchor depth
    const double span = style == SceneStyle::sloped_background ? 1200.0 + 600.0 * unit(rng)
                                                               : 60.0 + 60.0 * unit(rng);
    const double angle = 2.0 * 3.14159265358979 * unit(rng);
    const double gx = std::cos(angle) * span / std::max<index_t>(1, width - 1);
    const double gy = std::sin(angle) * span / std::max<index_t>(1, height - 1);
    const int bg_gray = 90 + static_cast<int>(100.0 * unit(rng));
    std::vector<double> background(static_cast<std::size_t>(width * height));
    for (index_t y = 0; y < height; ++y) {
        for (index_t x = 0; x < width; ++x) {
            const double mm =
                std::min(4900.0, std::max(600.0, base + gx * (x - width / 2) + gy * (y - height / 2)));
            background[static_cast<std::size_t>(y * width + x)] = mm;
            img.set_depth(y, x, static_cast<std::uint16_t>(std::lround(mm)));
            const int shade = bg_gray + static_cast<int>(30.0 * x / std::max<index_t>(1, width));
            std::uint8_t* px = img.rgb_at(y, x);
            px[0] = px[1] = px[2] = static_cast<std::uint8_t>(std::min(255, shade));
        }
    }

    for (int obj = 0; obj < object_count; ++obj) {
        // curved silhouettes dominate: their rasterized arcs are what make
        // sub-pixel edge placement learnable for the up-sampling network
        const bool ellipse = unit(rng) < 0.75;
        const index_t w = static_cast<index_t>((0.22 + 0.23 * unit(rng)) * width);
        const index_t h = static_cast<index_t>((0.22 + 0.23 * unit(rng)) * height);
        const index_t cx = static_cast<index_t>(unit(rng) * (width - 1));
        const index_t cy = static_cast<index_t>(unit(rng) * (height - 1));
        // a plane offset from the local background: a crisp edge without
        // making occluded content unguessable. Completion scenes use gentle
        // steps of either sign; super-resolution scenes keep objects strictly
        // in front of the background (they occlude it), which leaves the
        // depth across an edge inferable from one side alone.
        const double offset = style == SceneStyle::sloped_background
                                  ? (150.0 + 300.0 * unit(rng)) * (unit(rng) < 0.5 ? -1.0 : 1.0)
                                  : -(350.0 + 100.0 * unit(rng));
        const std::uint8_t cr = static_cast<std::uint8_t>(40 + 215 * unit(rng));
        const std::uint8_t cg = static_cast<std::uint8_t>(40 + 215 * unit(rng));
        const std::uint8_t cb = static_cast<std::uint8_t>(40 + 215 * unit(rng));
        const double local = background[static_cast<std::size_t>(
            std::min(height - 1, cy) * width + std::min(width - 1, cx))];
        const double mm = std::min(4900.0, std::max(600.0, local + offset));
        const std::uint16_t d = static_cast<std::uint16_t>(std::lround(mm));
        const index_t y0 = std::max<index_t>(0, cy - h / 2), y1 = std::min(height - 1, cy + h / 2);
        const index_t x0 = std::max<index_t>(0, cx - w / 2), x1 = std::min(width - 1, cx + w / 2);
        for (index_t y = y0; y <= y1; ++y) {
            for (index_t x = x0; x <= x1; ++x) {
                if (ellipse) {
                    const double ny = (y - cy) / (0.5 * std::max<index_t>(1, h));
                    const double nx = (x - cx) / (0.5 * std::max<index_t>(1, w));
                    if (nx * nx + ny * ny > 1.0) continue;
                }
                img.set_depth(y, x, d);
                std::uint8_t* px = img.rgb_at(y, x);
                px[0] = cr;
                px[1] = cg;
                px[2] = cb;
            }
        }
    }
    return img;
}

// Nearest-neighbor sub-sampling: out(i, j) = in(i * ratio, j * ratio).
inline RgbdImage downsample_nearest(const RgbdImage& img, index_t ratio) {
    if (ratio < 1) throw ShapeError("downsample_nearest: ratio must be >= 1");
    RgbdImage out = RgbdImage::allocate(img.width / ratio, img.height / ratio);
    out.intrinsics = img.intrinsics;
    for (index_t y = 0; y < out.height; ++y) {
        for (index_t x = 0; x < out.width; ++x) {
            out.set_depth(y, x, img.depth_at(y * ratio, x * ratio));
            const std::uint8_t* src = img.rgb_at(y * ratio, x * ratio);
            std::uint8_t* dst = out.rgb_at(y, x);
            dst[0] = src[0];
            dst[1] = src[1];
            dst[2] = src[2];
        }
    }
    return out;
}

template <typename T>
Tensor<T> downsample_nearest(const Tensor<T>& x, index_t ratio) {
    if (ratio < 1) throw ShapeError("downsample_nearest: ratio must be >= 1");
    const Shape& s = x.shape();
    Tensor<T> out(s.batch, s.channels, s.height / ratio, s.width / ratio);
    for (index_t b = 0; b < s.batch; ++b) {
        for (index_t c = 0; c < s.channels; ++c) {
            for (index_t y = 0; y < out.shape().height; ++y) {
                const T* src = x.row(b, c, y * ratio);
                T* dst = out.row(b, c, y);
                for (index_t xx = 0; xx < out.shape().width; ++xx) dst[xx] = src[xx * ratio];
            }
        }
    }
    return out;
}

// One synthetic corruption of a depth image: the surviving-pixel map and the
// depth with masked pixels zeroed.
struct HolePair {
    std::vector<std::uint16_t> depth;
    FilterMap mask; // 1 = kept
};

namespace detail {

inline std::vector<std::uint8_t> dilate3x3(const std::vector<std::uint8_t>& in, index_t w,
                                           index_t h) {
    std::vector<std::uint8_t> out(in.size(), 0);
    for (index_t y = 0; y < h; ++y) {
        for (index_t x = 0; x < w; ++x) {
            std::uint8_t v = 0;
            for (index_t dy = -1; dy <= 1 && !v; ++dy) {
                const index_t yy = y + dy;
                if (yy < 0 || yy >= h) continue;
                for (index_t dx = -1; dx <= 1; ++dx) {
                    const index_t xx = x + dx;
                    if (xx >= 0 && xx < w && in[static_cast<std::size_t>(yy * w + xx)]) {
                        v = 1;
                        break;
                    }
                }
            }
            out[static_cast<std::size_t>(y * w + x)] = v;
        }
    }
    return out;
}

} // namespace detail

// Multi-size hole synthesis: detect the invalid pixels, binarize them at a
// reduced resolution, dilate the binary image with a 3x3 structuring element
// k times for k = 1..iterations, up-sample each mask back and zero the masked
// depth. Emits one pair per k, so one source yields training holes of several
// sizes. A fully valid source gets a few seeded nuclei (from the given seed)
// as dilation support; iterations = 0 emits the undilated detection only.
inline std::vector<HolePair> synthesize_holes(const std::vector<std::uint16_t>& depth,
                                              index_t width, index_t height, int iterations,
                                              index_t down_factor, std::uint64_t seed) {
    if (down_factor < 1) throw ShapeError("synthesize_holes: down_factor must be >= 1");
    if (iterations < 0 || iterations > 4) {
        throw ShapeError("synthesize_holes: iterations must be in 0..4");
    }
    const index_t lw = (width + down_factor - 1) / down_factor;
    const index_t lh = (height + down_factor - 1) / down_factor;
    std::vector<std::uint8_t> invalid(static_cast<std::size_t>(lw * lh), 0); // 1 = hole
    for (index_t y = 0; y < height; ++y) {
        for (index_t x = 0; x < width; ++x) {
            if (depth[static_cast<std::size_t>(y * width + x)] == 0) {
                invalid[static_cast<std::size_t>((y / down_factor) * lw + x / down_factor)] = 1;
            }
        }
    }
    bool any = false;
    for (std::uint8_t v : invalid) any |= v != 0;
    if (!any && iterations >= 1) {
        std::mt19937_64 rng(seed);
        const int nuclei = 2 + static_cast<int>(rng() % 3);
        for (int i = 0; i < nuclei; ++i) {
            const index_t y = static_cast<index_t>(rng() % static_cast<std::uint64_t>(lh));
            const index_t x = static_cast<index_t>(rng() % static_cast<std::uint64_t>(lw));
            invalid[static_cast<std::size_t>(y * lw + x)] = 1;
        }
    }

    auto emit = [&](const std::vector<std::uint8_t>& lr) {
        HolePair pair;
        pair.mask = FilterMap(height, width, 1);
        pair.depth = depth;
        for (index_t y = 0; y < height; ++y) {
            for (index_t x = 0; x < width; ++x) {
                if (lr[static_cast<std::size_t>((y / down_factor) * lw + x / down_factor)]) {
                    pair.mask.set(y, x, 0);
                    pair.depth[static_cast<std::size_t>(y * width + x)] = 0;
                }
            }
        }
        return pair;
    };

    std::vector<HolePair> out;
    if (iterations == 0) {
        out.push_back(emit(invalid));
        return out;
    }
    std::vector<std::uint8_t> cur = invalid;
    for (int k = 1; k <= iterations; ++k) {
        cur = detail::dilate3x3(cur, lw, lh);
        out.push_back(emit(cur));
    }
    return out;
}

// (input, target, mask) file triples with a train/val split tag.
struct DatasetManifest {
    struct Entry {
        std::string split;
        std::string input;
        std::string target;
        std::string mask;
    };
    std::vector<Entry> entries;
};

inline void save_manifest(const DatasetManifest& m, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw IoError("manifest: cannot open '" + path + "' for writing");
    for (const auto& e : m.entries) {
        os << e.split << '\t' << e.input << '\t' << e.target << '\t' << e.mask << '\n';
    }
}

inline DatasetManifest load_manifest(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("manifest: cannot open '" + path + "'");
    DatasetManifest m;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        DatasetManifest::Entry e;
        std::size_t a = line.find('\t');
        std::size_t b = a == std::string::npos ? a : line.find('\t', a + 1);
        std::size_t c = b == std::string::npos ? b : line.find('\t', b + 1);
        if (c == std::string::npos) throw ConfigError("manifest: malformed line '" + line + "'");
        e.split = line.substr(0, a);
        e.input = line.substr(a + 1, b - a - 1);
        e.target = line.substr(b + 1, c - b - 1);
        e.mask = line.substr(c + 1);
        m.entries.push_back(std::move(e));
    }
    return m;
}

// Generates `count` corrupted/complete training triples under `dir` plus a
// manifest. Scene i uses hole iteration count (i mod 4) + 1, cycling through
// the four hole sizes. The binarization down-factor is 2 at desk scale: with
// the 64-pixel training images the op's default of 4 grows holes past half
// the image, where the hidden content stops being inferable from context.
inline DatasetManifest generate_dataset(const std::string& dir, std::uint64_t seed, int count,
                                        index_t size, index_t hole_down_factor = 2) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    DatasetManifest manifest;
    for (int i = 0; i < count; ++i) {
        const std::uint64_t scene_seed = seed * 1000003ull + static_cast<std::uint64_t>(i);
        RgbdImage scene = synth_scene(scene_seed, size, size, 1 + (i % 2));
        const int k = (i % 4) + 1;
        std::vector<HolePair> pairs =
            synthesize_holes(scene.depth, size, size, k, hole_down_factor, scene_seed ^ 0xabcdef);
        const HolePair& pair = pairs.back(); // the k-times dilated variant
        char name[64];
        std::snprintf(name, sizeof(name), "%05d", i);
        const std::string base = (fs::path(dir) / name).string();
        save_depth_png(scene.depth, size, size, base + "_target.png");
        save_depth_png(pair.depth, size, size, base + "_input.png");
        std::vector<std::uint16_t> mask_img(static_cast<std::size_t>(size * size));
        for (index_t y = 0; y < size; ++y) {
            for (index_t x = 0; x < size; ++x) {
                mask_img[static_cast<std::size_t>(y * size + x)] = pair.mask.at(y, x) ? 65535 : 0;
            }
        }
        save_depth_png(mask_img, size, size, base + "_mask.png");
        RgbImage rgb{size, size, scene.rgb};
        save_rgb_png(rgb, base + "_rgb.png");
        manifest.entries.push_back({"train", base + "_input.png", base + "_target.png",
                                    base + "_mask.png"});
    }
    save_manifest(manifest, (fs::path(dir) / "manifest.tsv").string());
    return manifest;
}

// Loads manifest triples into normalized training samples. The target's
// normalization range is reused for the corrupted input so both live on one
// scale.
template <typename T = float>
std::vector<CompletionSample<T>> load_completion_dataset(const DatasetManifest& manifest) {
    std::vector<CompletionSample<T>> out;
    for (const auto& e : manifest.entries) {
        auto [target_raw, tdims] = load_depth_png(e.target);
        auto [input_raw, idims] = load_depth_png(e.input);
        auto [mask_raw, mdims] = load_depth_png(e.mask);
        if (tdims != idims || tdims != mdims) {
            throw IoError("dataset: shape mismatch between '" + e.input + "' triple files");
        }
        const auto [w, h] = tdims;
        RgbdImage target;
        target.width = w;
        target.height = h;
        target.depth = target_raw;
        target.rgb.assign(static_cast<std::size_t>(w * h * 3), 0);
        CompletionSample<T> sample;
        auto [target_t, norm] = normalize_depth<T>(target);
        sample.target = std::move(target_t);
        sample.map = FilterMap(h, w, 1);
        sample.input = Tensor<T>(1, 1, h, w);
        const double inv = 1.0 / norm.span();
        for (index_t y = 0; y < h; ++y) {
            for (index_t x = 0; x < w; ++x) {
                const bool keep = mask_raw[static_cast<std::size_t>(y * w + x)] != 0;
                sample.map.set(y, x, keep ? 1 : 0);
                const std::uint16_t d = input_raw[static_cast<std::size_t>(y * w + x)];
                sample.input(0, 0, y, x) =
                    (keep && d != 0) ? static_cast<T>((d - norm.min_mm) * inv) : T(0);
            }
        }
        out.push_back(std::move(sample));
    }
    return out;
}

// In-memory dataset generation mirroring generate_dataset, for tests and
// training runs that never touch the filesystem.
template <typename T = float>
std::vector<CompletionSample<T>> make_completion_dataset(std::uint64_t seed, int count,
                                                         index_t size,
                                                         index_t hole_down_factor = 2) {
    std::vector<CompletionSample<T>> out;
    for (int i = 0; i < count; ++i) {
        const std::uint64_t scene_seed = seed * 1000003ull + static_cast<std::uint64_t>(i);
        RgbdImage scene = synth_scene(scene_seed, size, size, 1 + (i % 2));
        const int k = (i % 4) + 1;
        std::vector<HolePair> pairs =
            synthesize_holes(scene.depth, size, size, k, hole_down_factor, scene_seed ^ 0xabcdef);
        const HolePair& pair = pairs.back();
        CompletionSample<T> sample;
        auto [target_t, norm] = normalize_depth<T>(scene);
        sample.target = std::move(target_t);
        sample.map = pair.mask;
        sample.input = Tensor<T>(1, 1, size, size);
        const double inv = 1.0 / norm.span();
        for (index_t y = 0; y < size; ++y) {
            for (index_t x = 0; x < size; ++x) {
                const std::uint16_t d = pair.depth[static_cast<std::size_t>(y * size + x)];
                sample.input(0, 0, y, x) = d == 0 ? T(0) : static_cast<T>((d - norm.min_mm) * inv);
            }
        }
        out.push_back(std::move(sample));
    }
    return out;
}

// Low/high-resolution pairs for super-resolution training, built by
// nearest-neighbor sub-sampling of complete synthetic scenes.
template <typename T = float>
std::vector<SrSample<T>> make_sr_dataset(std::uint64_t seed, int count, index_t hr_size,
                                         index_t ratio) {
    std::vector<SrSample<T>> out;
    for (int i = 0; i < count; ++i) {
        const std::uint64_t scene_seed = seed * 2000003ull + static_cast<std::uint64_t>(i);
        RgbdImage scene =
            synth_scene(scene_seed, hr_size, hr_size, 2 + (i % 4), SceneStyle::flat_background);
        auto [hr, norm] = normalize_depth<T>(scene);
        SrSample<T> sample;
        sample.high = std::move(hr);
        sample.low = downsample_nearest(sample.high, ratio);
        out.push_back(std::move(sample));
    }
    return out;
}

} // namespace argbd
