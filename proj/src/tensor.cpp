#include "semdiff/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace semdiff {

namespace {

std::size_t checked_size(const std::vector<std::size_t>& shape) {
    if (shape.empty())
        throw std::invalid_argument("tensor shape must have at least one extent");
    std::size_t n = 1;
    for (std::size_t e : shape) {
        if (e == 0)
            throw std::invalid_argument("zero-extent tensors are not constructible");
        n *= e;
    }
    return n;
}

std::size_t clamp_idx(std::ptrdiff_t i, std::size_t extent) {
    if (i < 0) return 0;
    if (i >= static_cast<std::ptrdiff_t>(extent)) return extent - 1;
    return static_cast<std::size_t>(i);
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(checked_size(shape_), 0.0) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (checked_size(shape_) != data_.size())
        throw std::invalid_argument("tensor data length does not match shape");
}

Tensor Tensor::full(std::vector<std::size_t> shape, double value) {
    Tensor t(std::move(shape));
    std::fill(t.data_.begin(), t.data_.end(), value);
    return t;
}

FeatureMap pad_replicate(const FeatureMap& x, std::size_t margin) {
    if (margin == 0) return x;
    const std::size_t c = x.channels(), h = x.height(), w = x.width();
    FeatureMap out(c, h + 2 * margin, w + 2 * margin);
    const auto m = static_cast<std::ptrdiff_t>(margin);
    for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t y = 0; y < h + 2 * margin; ++y) {
            const std::size_t sy = clamp_idx(static_cast<std::ptrdiff_t>(y) - m, h);
            for (std::size_t xx = 0; xx < w + 2 * margin; ++xx) {
                const std::size_t sx = clamp_idx(static_cast<std::ptrdiff_t>(xx) - m, w);
                out.at(ch, y, xx) = x.at(ch, sy, sx);
            }
        }
    return out;
}

FeatureMap crop(const FeatureMap& x, std::size_t margin) {
    if (margin == 0) return x;
    if (x.height() <= 2 * margin || x.width() <= 2 * margin)
        throw std::invalid_argument("crop margin exceeds spatial extents");
    const std::size_t c = x.channels();
    const std::size_t h = x.height() - 2 * margin, w = x.width() - 2 * margin;
    FeatureMap out(c, h, w);
    for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t xx = 0; xx < w; ++xx)
                out.at(ch, y, xx) = x.at(ch, y + margin, xx + margin);
    return out;
}

namespace {

struct LerpTap {
    std::size_t lo, hi;
    double w_hi;  // weight on hi; lo gets 1 - w_hi
};

LerpTap source_tap(std::size_t dst, std::size_t out_n, std::size_t in_n) {
    const double scale = static_cast<double>(in_n) / static_cast<double>(out_n);
    double s = (static_cast<double>(dst) + 0.5) * scale - 0.5;
    if (s < 0.0) s = 0.0;
    const double max_s = static_cast<double>(in_n - 1);
    if (s > max_s) s = max_s;
    const auto lo = static_cast<std::size_t>(s);
    const std::size_t hi = std::min(lo + 1, in_n - 1);
    return {lo, hi, s - static_cast<double>(lo)};
}

}  // namespace

FeatureMap bilinear_upsample(const FeatureMap& x, std::size_t out_h, std::size_t out_w) {
    const std::size_t c = x.channels(), h = x.height(), w = x.width();
    if (out_h < h || out_w < w)
        throw std::invalid_argument("bilinear_upsample does not downsample");
    if (out_h == h && out_w == w) return x;
    FeatureMap out(c, out_h, out_w);
    std::vector<LerpTap> col_taps(out_w);
    for (std::size_t xx = 0; xx < out_w; ++xx) col_taps[xx] = source_tap(xx, out_w, w);
    for (std::size_t y = 0; y < out_h; ++y) {
        const LerpTap ry = source_tap(y, out_h, h);
        for (std::size_t ch = 0; ch < c; ++ch)
            for (std::size_t xx = 0; xx < out_w; ++xx) {
                const LerpTap& rx = col_taps[xx];
                const double top = (1.0 - rx.w_hi) * x.at(ch, ry.lo, rx.lo) +
                                   rx.w_hi * x.at(ch, ry.lo, rx.hi);
                const double bot = (1.0 - rx.w_hi) * x.at(ch, ry.hi, rx.lo) +
                                   rx.w_hi * x.at(ch, ry.hi, rx.hi);
                out.at(ch, y, xx) = (1.0 - ry.w_hi) * top + ry.w_hi * bot;
            }
    }
    return out;
}

FeatureMap bilinear_upsample_adjoint(const FeatureMap& grad_out, std::size_t in_h,
                                     std::size_t in_w) {
    const std::size_t c = grad_out.channels();
    const std::size_t out_h = grad_out.height(), out_w = grad_out.width();
    if (out_h == in_h && out_w == in_w) return grad_out;
    FeatureMap grad_in = FeatureMap::full(c, in_h, in_w, 0.0);
    std::vector<LerpTap> col_taps(out_w);
    for (std::size_t xx = 0; xx < out_w; ++xx) col_taps[xx] = source_tap(xx, out_w, in_w);
    for (std::size_t y = 0; y < out_h; ++y) {
        const LerpTap ry = source_tap(y, out_h, in_h);
        for (std::size_t ch = 0; ch < c; ++ch)
            for (std::size_t xx = 0; xx < out_w; ++xx) {
                const LerpTap& rx = col_taps[xx];
                const double g = grad_out.at(ch, y, xx);
                grad_in.at(ch, ry.lo, rx.lo) += (1.0 - ry.w_hi) * (1.0 - rx.w_hi) * g;
                grad_in.at(ch, ry.lo, rx.hi) += (1.0 - ry.w_hi) * rx.w_hi * g;
                grad_in.at(ch, ry.hi, rx.lo) += ry.w_hi * (1.0 - rx.w_hi) * g;
                grad_in.at(ch, ry.hi, rx.hi) += ry.w_hi * rx.w_hi * g;
            }
    }
    return grad_in;
}

FeatureMap concat_channels(const FeatureMap& a, const FeatureMap& b) {
    if (!a.same_extents(b))
        throw std::invalid_argument("concat_channels: spatial extents differ");
    FeatureMap out(a.channels() + b.channels(), a.height(), a.width());
    auto dst = out.values();
    auto av = a.values();
    auto bv = b.values();
    std::copy(av.begin(), av.end(), dst.begin());
    std::copy(bv.begin(), bv.end(), dst.begin() + static_cast<std::ptrdiff_t>(av.size()));
    return out;
}

FeatureMap channel_slice(const FeatureMap& x, std::size_t begin, std::size_t end) {
    if (begin >= end || end > x.channels())
        throw std::invalid_argument("channel_slice: bad channel range");
    FeatureMap out(end - begin, x.height(), x.width());
    const std::size_t plane = x.height() * x.width();
    auto src = x.values();
    auto dst = out.values();
    std::copy(src.begin() + static_cast<std::ptrdiff_t>(begin * plane),
              src.begin() + static_cast<std::ptrdiff_t>(end * plane), dst.begin());
    return out;
}

}  // namespace semdiff
