#pragma once

#include <algorithm>
#include <cassert>
#include <sstream>
#include <vector>

#include "argbd/common.hpp"

namespace argbd {

// Dimensions of a dense 4-axis tensor. A zero in any axis denotes an empty
// tensor; such values are legal but rejected by network operations.
struct Shape {
    index_t batch = 0;
    index_t channels = 0;
    index_t height = 0;
    index_t width = 0;

    index_t count() const { return batch * channels * height * width; }
    bool operator==(const Shape&) const = default;

    std::string str() const {
        std::ostringstream os;
        os << "(" << batch << "," << channels << "," << height << "," << width << ")";
        return os.str();
    }
};

// Dense batch-channel-row-column tensor of contiguous scalars, width
// innermost. All feature maps, weights and depth images use this layout so
// convolution inner loops stride unit width.
template <typename T = float>
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(Shape s, T fill = T(0)) : shape_(s) {
        if (s.batch < 0 || s.channels < 0 || s.height < 0 || s.width < 0) {
            throw ShapeError("tensor dims must be non-negative, got " + s.str());
        }
        data_.assign(static_cast<std::size_t>(s.count()), fill);
    }

    Tensor(index_t b, index_t c, index_t h, index_t w, T fill = T(0))
        : Tensor(Shape{b, c, h, w}, fill) {}

    const Shape& shape() const { return shape_; }
    index_t size() const { return static_cast<index_t>(data_.size()); }
    bool empty() const { return data_.empty(); }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }

    T& operator()(index_t b, index_t c, index_t y, index_t x) {
        return data_[offset(b, c, y, x)];
    }
    T operator()(index_t b, index_t c, index_t y, index_t x) const {
        return data_[offset(b, c, y, x)];
    }

    // Start of the contiguous (height x width) plane for one batch/channel.
    T* plane(index_t b, index_t c) { return data_.data() + offset(b, c, 0, 0); }
    const T* plane(index_t b, index_t c) const { return data_.data() + offset(b, c, 0, 0); }

    T* row(index_t b, index_t c, index_t y) { return data_.data() + offset(b, c, y, 0); }
    const T* row(index_t b, index_t c, index_t y) const { return data_.data() + offset(b, c, y, 0); }

    void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

    bool operator==(const Tensor& o) const { return shape_ == o.shape_ && data_ == o.data_; }

    // Converts element type; used to run gradient checks in 64-bit.
    template <typename U>
    Tensor<U> cast() const {
        Tensor<U> out(shape_);
        for (index_t i = 0; i < size(); ++i) out.data()[i] = static_cast<U>(data_[i]);
        return out;
    }

private:
    std::size_t offset(index_t b, index_t c, index_t y, index_t x) const {
        assert(b >= 0 && b < shape_.batch);
        assert(c >= 0 && c < shape_.channels);
        assert(y >= 0 && y < shape_.height);
        assert(x >= 0 && x < shape_.width);
        return static_cast<std::size_t>(
            ((b * shape_.channels + c) * shape_.height + y) * shape_.width + x);
    }

    Shape shape_{};
    std::vector<T> data_;
};

namespace detail {

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw ShapeError(msg);
}

} // namespace detail

// Reinterprets the flat contents under new dims; element count must match.
template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape s) {
    detail::require(s.count() == x.shape().count(),
                    "reshape count mismatch: " + x.shape().str() + " -> " + s.str());
    Tensor<T> out(s);
    std::copy(x.data(), x.data() + x.size(), out.data());
    return out;
}

// Stacks b's channels after a's. Non-channel axes must agree.
template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
    const Shape& sa = a.shape();
    const Shape& sb = b.shape();
    detail::require(sa.batch == sb.batch && sa.height == sb.height && sa.width == sb.width,
                    "concat_channels: non-channel axes differ, " + sa.str() + " vs " + sb.str());
    Tensor<T> out(sa.batch, sa.channels + sb.channels, sa.height, sa.width);
    const index_t plane = sa.height * sa.width;
    for (index_t n = 0; n < sa.batch; ++n) {
        std::copy(a.plane(n, 0), a.plane(n, 0) + sa.channels * plane, out.plane(n, 0));
        std::copy(b.plane(n, 0), b.plane(n, 0) + sb.channels * plane, out.plane(n, sa.channels));
    }
    return out;
}

// Inverse of concat_channels at the given channel index.
template <typename T>
std::pair<Tensor<T>, Tensor<T>> split_channels(const Tensor<T>& x, index_t at) {
    const Shape& s = x.shape();
    detail::require(at >= 0 && at <= s.channels, "split_channels: bad split index");
    Tensor<T> a(s.batch, at, s.height, s.width);
    Tensor<T> b(s.batch, s.channels - at, s.height, s.width);
    const index_t plane = s.height * s.width;
    for (index_t n = 0; n < s.batch; ++n) {
        if (at > 0) std::copy(x.plane(n, 0), x.plane(n, 0) + at * plane, a.plane(n, 0));
        if (at < s.channels) {
            std::copy(x.plane(n, at), x.plane(n, at) + (s.channels - at) * plane, b.plane(n, 0));
        }
    }
    return {std::move(a), std::move(b)};
}

// Nearest-neighbor spatial up-sampling by an integer factor.
template <typename T>
Tensor<T> upsample_nearest(const Tensor<T>& x, index_t factor) {
    detail::require(factor >= 1, "upsample_nearest: factor must be >= 1");
    const Shape& s = x.shape();
    Tensor<T> out(s.batch, s.channels, s.height * factor, s.width * factor);
    for (index_t n = 0; n < s.batch; ++n) {
        for (index_t c = 0; c < s.channels; ++c) {
            for (index_t y = 0; y < s.height * factor; ++y) {
                const T* src = x.row(n, c, y / factor);
                T* dst = out.row(n, c, y);
                for (index_t xx = 0; xx < s.width * factor; ++xx) dst[xx] = src[xx / factor];
            }
        }
    }
    return out;
}

// Adjoint of upsample_nearest: sums each factor x factor block of the
// incoming gradient back onto its source pixel.
template <typename T>
Tensor<T> upsample_nearest_bwd(const Tensor<T>& grad_out, index_t factor) {
    detail::require(factor >= 1, "upsample_nearest_bwd: factor must be >= 1");
    const Shape& s = grad_out.shape();
    detail::require(s.height % factor == 0 && s.width % factor == 0,
                    "upsample_nearest_bwd: dims not divisible by factor");
    Tensor<T> out(s.batch, s.channels, s.height / factor, s.width / factor);
    for (index_t n = 0; n < s.batch; ++n) {
        for (index_t c = 0; c < s.channels; ++c) {
            for (index_t y = 0; y < s.height; ++y) {
                const T* src = grad_out.row(n, c, y);
                T* dst = out.row(n, c, y / factor);
                for (index_t xx = 0; xx < s.width; ++xx) dst[xx / factor] += src[xx];
            }
        }
    }
    return out;
}

// Grows the spatial extent with zero borders.
template <typename T>
Tensor<T> pad_zero(const Tensor<T>& x, index_t top, index_t bottom, index_t left, index_t right) {
    detail::require(top >= 0 && bottom >= 0 && left >= 0 && right >= 0,
                    "pad_zero: pads must be non-negative");
    const Shape& s = x.shape();
    Tensor<T> out(s.batch, s.channels, s.height + top + bottom, s.width + left + right);
    for (index_t n = 0; n < s.batch; ++n) {
        for (index_t c = 0; c < s.channels; ++c) {
            for (index_t y = 0; y < s.height; ++y) {
                std::copy(x.row(n, c, y), x.row(n, c, y) + s.width, out.row(n, c, y + top) + left);
            }
        }
    }
    return out;
}

} // namespace argbd
