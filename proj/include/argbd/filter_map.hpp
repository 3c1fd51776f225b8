#pragma once

#include <cassert>
#include <cstdint>
#include <vector>

#include "argbd/tensor.hpp"

namespace argbd {

// Per-pixel binary validity map aligned to a tensor's spatial grid.
// 1 marks a pixel whose value may enter a convolution, 0 one that is gated
// out. Values are strictly binary.
class FilterMap {
public:
    FilterMap() = default;

    FilterMap(index_t height, index_t width, std::uint8_t fill = 1)
        : height_(height), width_(width),
          v_(static_cast<std::size_t>(height * width), fill) {
        if (height < 0 || width < 0) throw ShapeError("FilterMap dims must be non-negative");
        if (fill > 1) throw ShapeError("FilterMap values must be 0 or 1");
    }

    index_t height() const { return height_; }
    index_t width() const { return width_; }
    index_t size() const { return height_ * width_; }

    std::uint8_t at(index_t y, index_t x) const { return v_[offset(y, x)]; }

    void set(index_t y, index_t x, std::uint8_t value) {
        if (value > 1) throw ShapeError("FilterMap values must be 0 or 1");
        v_[offset(y, x)] = value;
    }

    const std::uint8_t* row(index_t y) const { return v_.data() + offset(y, 0); }
    std::uint8_t* row(index_t y) { return v_.data() + offset(y, 0); }

    index_t count_valid() const {
        index_t n = 0;
        for (std::uint8_t m : v_) n += m;
        return n;
    }
    bool all_valid() const { return count_valid() == size(); }

    bool operator==(const FilterMap&) const = default;

private:
    std::size_t offset(index_t y, index_t x) const {
        assert(y >= 0 && y < height_);
        assert(x >= 0 && x < width_);
        return static_cast<std::size_t>(y * width_ + x);
    }

    index_t height_ = 0;
    index_t width_ = 0;
    std::vector<std::uint8_t> v_;
};

// Validity map derived from one spatial plane: nonzero values are valid.
template <typename T>
FilterMap filter_map_from_plane(const Tensor<T>& x, index_t b = 0, index_t c = 0) {
    const Shape& s = x.shape();
    FilterMap map(s.height, s.width, 0);
    for (index_t y = 0; y < s.height; ++y) {
        const T* src = x.row(b, c, y);
        std::uint8_t* dst = map.row(y);
        for (index_t xx = 0; xx < s.width; ++xx) dst[xx] = src[xx] != T(0) ? 1 : 0;
    }
    return map;
}

// Propagates validity through one convolution: an output pixel becomes valid
// iff any pixel of its k x k receptive field (centered at stride multiples,
// out-of-image treated as invalid) was valid. Repeated application closes
// missing regions from the outside in.
inline FilterMap update_filter_map(const FilterMap& map, index_t kernel, index_t stride) {
    if (kernel < 1 || kernel % 2 == 0) throw ShapeError("update_filter_map: kernel must be odd");
    if (stride < 1) throw ShapeError("update_filter_map: stride must be >= 1");
    const index_t h = map.height(), w = map.width();
    const index_t oh = (h + stride - 1) / stride;
    const index_t ow = (w + stride - 1) / stride;
    const index_t r = kernel / 2;
    FilterMap out(oh, ow, 0);
    for (index_t oy = 0; oy < oh; ++oy) {
        const index_t y0 = std::max<index_t>(0, oy * stride - r);
        const index_t y1 = std::min<index_t>(h - 1, oy * stride + r);
        for (index_t ox = 0; ox < ow; ++ox) {
            const index_t x0 = std::max<index_t>(0, ox * stride - r);
            const index_t x1 = std::min<index_t>(w - 1, ox * stride + r);
            std::uint8_t any = 0;
            for (index_t y = y0; y <= y1 && !any; ++y) {
                const std::uint8_t* src = map.row(y);
                for (index_t x = x0; x <= x1; ++x) {
                    if (src[x]) { any = 1; break; }
                }
            }
            out.set(oy, ox, any);
        }
    }
    return out;
}

// Pixelwise OR; used where two feature paths with separate validity merge.
inline FilterMap filter_map_or(const FilterMap& a, const FilterMap& b) {
    if (a.height() != b.height() || a.width() != b.width()) {
        throw ShapeError("filter_map_or: dims differ");
    }
    FilterMap out(a.height(), a.width(), 0);
    for (index_t y = 0; y < a.height(); ++y) {
        for (index_t x = 0; x < a.width(); ++x) out.set(y, x, a.at(y, x) | b.at(y, x));
    }
    return out;
}

inline FilterMap upsample_nearest(const FilterMap& map, index_t factor) {
    if (factor < 1) throw ShapeError("upsample_nearest: factor must be >= 1");
    FilterMap out(map.height() * factor, map.width() * factor, 0);
    for (index_t y = 0; y < out.height(); ++y) {
        for (index_t x = 0; x < out.width(); ++x) out.set(y, x, map.at(y / factor, x / factor));
    }
    return out;
}

} // namespace argbd
