#pragma once

#include "argbd/filter_map.hpp"
#include "argbd/tensor.hpp"

namespace argbd {

// Balance between the valid-region and invalid-region completion losses.
struct LossWeights {
    double w_alpha = 1.0;
    double w_beta = 6.0;
};

template <typename T>
struct LossValue {
    double value = 0.0;
    Tensor<T> grad;       // d loss / d out
    bool degenerate = false; // mask selected no pixels; value defined as 0
};

namespace detail {

template <typename T>
LossValue<T> masked_mse(const Tensor<T>& gt, const Tensor<T>& out, const FilterMap& map,
                        bool over_valid) {
    const Shape& s = gt.shape();
    if (s != out.shape()) throw ShapeError("masked loss: gt/out shapes differ");
    if (map.height() != s.height || map.width() != s.width) {
        throw ShapeError("masked loss: map dims do not match");
    }
    LossValue<T> r;
    r.grad = Tensor<T>(s);
    double count = 0.0;
    for (index_t y = 0; y < s.height; ++y) {
        const std::uint8_t* m = map.row(y);
        for (index_t x = 0; x < s.width; ++x) {
            if ((m[x] != 0) == over_valid) count += 1.0;
        }
    }
    count *= static_cast<double>(s.batch * s.channels);
    if (count == 0.0) {
        r.degenerate = true;
        return r; // 0 with zero gradient by convention
    }
    double sum = 0.0;
    for (index_t b = 0; b < s.batch; ++b) {
        for (index_t c = 0; c < s.channels; ++c) {
            for (index_t y = 0; y < s.height; ++y) {
                const std::uint8_t* m = map.row(y);
                const T* g = gt.row(b, c, y);
                const T* o = out.row(b, c, y);
                T* gr = r.grad.row(b, c, y);
                for (index_t x = 0; x < s.width; ++x) {
                    if ((m[x] != 0) != over_valid) continue;
                    const double d = static_cast<double>(o[x]) - static_cast<double>(g[x]);
                    sum += d * d;
                    gr[x] = static_cast<T>(2.0 * d / count);
                }
            }
        }
    }
    r.value = sum / count;
    return r;
}

} // namespace detail

// Mean squared error over pixels the map marks valid.
template <typename T>
LossValue<T> loss_valid(const Tensor<T>& gt, const Tensor<T>& out, const FilterMap& map) {
    return detail::masked_mse(gt, out, map, true);
}

// Mean squared error over pixels the map marks invalid.
template <typename T>
LossValue<T> loss_invalid(const Tensor<T>& gt, const Tensor<T>& out, const FilterMap& map) {
    return detail::masked_mse(gt, out, map, false);
}

// Completion loss, w_alpha * L_valid + w_beta * L_invalid.
template <typename T>
LossValue<T> loss_completion(const Tensor<T>& gt, const Tensor<T>& out, const FilterMap& map,
                             const LossWeights& w = {}) {
    LossValue<T> lv = loss_valid(gt, out, map);
    LossValue<T> li = loss_invalid(gt, out, map);
    LossValue<T> r;
    r.value = w.w_alpha * lv.value + w.w_beta * li.value;
    r.degenerate = lv.degenerate || li.degenerate;
    r.grad = Tensor<T>(gt.shape());
    const T wa = static_cast<T>(w.w_alpha), wb = static_cast<T>(w.w_beta);
    const T* a = lv.grad.empty() ? nullptr : lv.grad.data();
    const T* b = li.grad.empty() ? nullptr : li.grad.data();
    for (index_t i = 0; i < r.grad.size(); ++i) {
        r.grad.data()[i] = (a ? wa * a[i] : T(0)) + (b ? wb * b[i] : T(0));
    }
    return r;
}

// Super-resolution loss: squared error summed across channels, averaged over
// the r*W x r*H high-resolution grid.
template <typename T>
LossValue<T> loss_sr(const Tensor<T>& gt_hr, const Tensor<T>& out_hr, index_t r) {
    const Shape& s = gt_hr.shape();
    if (s != out_hr.shape()) throw ShapeError("loss_sr: shapes differ");
    if (r < 1 || s.height % r != 0 || s.width % r != 0) {
        throw ShapeError("loss_sr: dims must be multiples of the up-sampling ratio");
    }
    LossValue<T> lr;
    lr.grad = Tensor<T>(s);
    const double denom = static_cast<double>(s.batch * s.height * s.width);
    double sum = 0.0;
    for (index_t i = 0; i < s.count(); ++i) {
        const double d = static_cast<double>(out_hr.data()[i]) - static_cast<double>(gt_hr.data()[i]);
        sum += d * d;
        lr.grad.data()[i] = static_cast<T>(2.0 * d / denom);
    }
    lr.value = sum / denom;
    return lr;
}

} // namespace argbd
