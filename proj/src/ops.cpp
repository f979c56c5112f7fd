#include "semdiff/ops.hpp"

#include <cmath>

#include "semdiff/diffusion.hpp"
#include "semdiff/parallel.hpp"

namespace semdiff {

SdcKernel::SdcKernel(Tensor weights_, std::size_t dilation_, double lambda_)
    : weights(std::move(weights_)), dilation(dilation_), lambda(lambda_) {
    if (weights.rank() != 4)
        throw std::invalid_argument("kernel weights must be (C_out, C_in, h, w)");
    if (kernel_h() % 2 == 0 || kernel_w() % 2 == 0)
        throw std::invalid_argument("kernel extents must be odd");
    if (dilation < 1) throw std::invalid_argument("dilation must be >= 1");
    if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
}

namespace {

std::size_t clamp_idx(std::ptrdiff_t i, std::size_t extent) {
    if (i < 0) return 0;
    if (i >= static_cast<std::ptrdiff_t>(extent)) return extent - 1;
    return static_cast<std::size_t>(i);
}

void check_channels(const FeatureMap& x, const SdcKernel& k) {
    if (x.channels() != k.in_channels())
        throw std::invalid_argument("operator input channel count does not match kernel");
}

}  // namespace

FeatureMap conv2d(const FeatureMap& x, const SdcKernel& k, std::size_t stride) {
    check_channels(x, k);
    if (stride < 1) throw std::invalid_argument("stride must be >= 1");
    const std::size_t h = x.height(), w = x.width();
    const std::size_t oh = (h + stride - 1) / stride, ow = (w + stride - 1) / stride;
    const auto rh = static_cast<std::ptrdiff_t>(k.kernel_h() / 2);
    const auto rw = static_cast<std::ptrdiff_t>(k.kernel_w() / 2);
    const auto dil = static_cast<std::ptrdiff_t>(k.dilation);

    FeatureMap out(k.out_channels(), oh, ow);
    parallel_rows(oh, ow * k.out_channels() * k.in_channels() * k.kernel_h() * k.kernel_w(),
                  [&](std::size_t m) {
        const auto cy = static_cast<std::ptrdiff_t>(m * stride);
        for (std::size_t n = 0; n < ow; ++n) {
            const auto cx = static_cast<std::ptrdiff_t>(n * stride);
            for (std::size_t co = 0; co < k.out_channels(); ++co) {
                double acc = 0.0;
                for (std::size_t ky = 0; ky < k.kernel_h(); ++ky)
                    for (std::size_t kx = 0; kx < k.kernel_w(); ++kx) {
                        const std::size_t i = clamp_idx(
                            cy + (static_cast<std::ptrdiff_t>(ky) - rh) * dil, h);
                        const std::size_t j = clamp_idx(
                            cx + (static_cast<std::ptrdiff_t>(kx) - rw) * dil, w);
                        for (std::size_t ci = 0; ci < k.in_channels(); ++ci)
                            acc += k.weight(co, ci, ky, kx) * x.at(ci, i, j);
                    }
                out.at(co, m, n) = acc;
            }
        }
    });
    return out;
}

FeatureMap cdc2d(const FeatureMap& x, const SdcKernel& k) {
    check_channels(x, k);
    const std::size_t h = x.height(), w = x.width();
    const auto rh = static_cast<std::ptrdiff_t>(k.kernel_h() / 2);
    const auto rw = static_cast<std::ptrdiff_t>(k.kernel_w() / 2);
    const auto dil = static_cast<std::ptrdiff_t>(k.dilation);

    FeatureMap out(k.out_channels(), h, w);
    parallel_rows(h, w * k.out_channels() * k.in_channels() * k.kernel_h() * k.kernel_w(),
                  [&](std::size_t m) {
        for (std::size_t n = 0; n < w; ++n)
            for (std::size_t co = 0; co < k.out_channels(); ++co) {
                double acc = 0.0;
                for (std::size_t ky = 0; ky < k.kernel_h(); ++ky)
                    for (std::size_t kx = 0; kx < k.kernel_w(); ++kx) {
                        const std::size_t i = clamp_idx(
                            static_cast<std::ptrdiff_t>(m) +
                                (static_cast<std::ptrdiff_t>(ky) - rh) * dil, h);
                        const std::size_t j = clamp_idx(
                            static_cast<std::ptrdiff_t>(n) +
                                (static_cast<std::ptrdiff_t>(kx) - rw) * dil, w);
                        for (std::size_t ci = 0; ci < k.in_channels(); ++ci)
                            acc += k.weight(co, ci, ky, kx) *
                                   (x.at(ci, i, j) - x.at(ci, m, n));
                    }
                out.at(co, m, n) = acc;
            }
    });
    return out;
}

double semantic_similarity(std::span<const double> va, std::span<const double> vb,
                           double lambda) {
    if (va.size() != vb.size())
        throw std::invalid_argument("semantic_similarity: vector lengths differ");
    if (va.empty()) throw std::invalid_argument("semantic_similarity: empty vectors");
    double s = 0.0;
    for (std::size_t i = 0; i < va.size(); ++i) {
        const double d = va[i] - vb[i];
        s += d * d;
    }
    s /= static_cast<double>(va.size());
    return diffusivity(s, DiffusivityConfig(lambda));
}

FeatureMap sdc2d(const FeatureMap& u, const FeatureMap& v, const SdcKernel& k) {
    check_channels(u, k);
    if (!u.same_extents(v))
        throw std::invalid_argument("sdc2d: U and V spatial extents differ");
    const std::size_t h = u.height(), w = u.width();
    const std::size_t cf = v.channels();
    const auto rh = static_cast<std::ptrdiff_t>(k.kernel_h() / 2);
    const auto rw = static_cast<std::ptrdiff_t>(k.kernel_w() / 2);
    const auto dil = static_cast<std::ptrdiff_t>(k.dilation);
    const double inv_l2 = 1.0 / (k.lambda * k.lambda);
    const std::size_t taps = k.kernel_h() * k.kernel_w();

    FeatureMap out(k.out_channels(), h, w);
    parallel_rows(h, w * taps * (k.out_channels() * k.in_channels() + cf),
                  [&](std::size_t m) {
        std::vector<double> sim(taps);
        std::vector<std::size_t> ti(taps), tj(taps);
        for (std::size_t n = 0; n < w; ++n) {
            std::size_t t = 0;
            for (std::size_t ky = 0; ky < k.kernel_h(); ++ky)
                for (std::size_t kx = 0; kx < k.kernel_w(); ++kx, ++t) {
                    const std::size_t i = clamp_idx(
                        static_cast<std::ptrdiff_t>(m) +
                            (static_cast<std::ptrdiff_t>(ky) - rh) * dil, h);
                    const std::size_t j = clamp_idx(
                        static_cast<std::ptrdiff_t>(n) +
                            (static_cast<std::ptrdiff_t>(kx) - rw) * dil, w);
                    ti[t] = i;
                    tj[t] = j;
                    double s = 0.0;
                    for (std::size_t f = 0; f < cf; ++f) {
                        const double d = v.at(f, i, j) - v.at(f, m, n);
                        s += d * d;
                    }
                    sim[t] = 1.0 / std::sqrt(1.0 + s / static_cast<double>(cf) * inv_l2);
                }
            for (std::size_t co = 0; co < k.out_channels(); ++co) {
                double acc = 0.0;
                // fixed order: row-major taps, then input channels
                for (t = 0; t < taps; ++t) {
                    const std::size_t ky = t / k.kernel_w(), kx = t % k.kernel_w();
                    for (std::size_t ci = 0; ci < k.in_channels(); ++ci)
                        acc += k.weight(co, ci, ky, kx) * sim[t] *
                               (u.at(ci, ti[t], tj[t]) - u.at(ci, m, n));
                }
                out.at(co, m, n) = acc;
            }
        }
    });
    return out;
}

std::uint64_t flop_estimate(std::uint64_t h_img, std::uint64_t w_img, std::uint64_t h_k,
                            std::uint64_t w_k, std::uint64_t c_in, std::uint64_t c_out,
                            std::uint64_t c_f) {
    if (h_img == 0 || w_img == 0 || h_k == 0 || w_k == 0 || c_in == 0 || c_out == 0)
        throw std::invalid_argument("flop_estimate arguments must be positive");
    return h_img * w_img * h_k * w_k * (c_in * c_out + c_f);
}

}  // namespace semdiff
