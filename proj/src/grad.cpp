#include "semdiff/grad.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "semdiff/rng.hpp"

namespace semdiff {

namespace {

std::size_t clamp_idx(std::ptrdiff_t i, std::size_t extent) {
    if (i < 0) return 0;
    if (i >= static_cast<std::ptrdiff_t>(extent)) return extent - 1;
    return static_cast<std::size_t>(i);
}

}  // namespace

GradTriple conv2d_backward(const FeatureMap& grad_out, const FeatureMap& x,
                           const SdcKernel& k, std::size_t stride) {
    if (grad_out.channels() != k.out_channels())
        throw std::invalid_argument("conv2d_backward: grad_out channel mismatch");
    const std::size_t h = x.height(), w = x.width();
    const std::size_t oh = grad_out.height(), ow = grad_out.width();
    if (oh != (h + stride - 1) / stride || ow != (w + stride - 1) / stride)
        throw std::invalid_argument("conv2d_backward: grad_out extents mismatch");
    const auto rh = static_cast<std::ptrdiff_t>(k.kernel_h() / 2);
    const auto rw = static_cast<std::ptrdiff_t>(k.kernel_w() / 2);
    const auto dil = static_cast<std::ptrdiff_t>(k.dilation);

    GradTriple g{Tensor(x.tensor().shape()), Tensor(x.tensor().shape()),
                 Tensor(k.weights.shape())};
    FeatureMap gx(std::move(g.grad_input));
    for (std::size_t m = 0; m < oh; ++m)
        for (std::size_t n = 0; n < ow; ++n) {
            const auto cy = static_cast<std::ptrdiff_t>(m * stride);
            const auto cx = static_cast<std::ptrdiff_t>(n * stride);
            for (std::size_t co = 0; co < k.out_channels(); ++co) {
                const double go = grad_out.at(co, m, n);
                if (go == 0.0) continue;
                for (std::size_t ky = 0; ky < k.kernel_h(); ++ky)
                    for (std::size_t kx = 0; kx < k.kernel_w(); ++kx) {
                        const std::size_t i =
                            clamp_idx(cy + (static_cast<std::ptrdiff_t>(ky) - rh) * dil, h);
                        const std::size_t j =
                            clamp_idx(cx + (static_cast<std::ptrdiff_t>(kx) - rw) * dil, w);
                        for (std::size_t ci = 0; ci < k.in_channels(); ++ci) {
                            const std::size_t widx =
                                ((co * k.in_channels() + ci) * k.kernel_h() + ky) *
                                    k.kernel_w() + kx;
                            g.grad_weights[widx] += go * x.at(ci, i, j);
                            gx.at(ci, i, j) += go * k.weights[widx];
                        }
                    }
            }
        }
    g.grad_input = std::move(gx.tensor());
    return g;
}

GradTriple cdc2d_backward(const FeatureMap& grad_out, const FeatureMap& x,
                          const SdcKernel& k) {
    if (grad_out.channels() != k.out_channels() || !grad_out.same_extents(x))
        throw std::invalid_argument("cdc2d_backward: grad_out shape mismatch");
    const std::size_t h = x.height(), w = x.width();
    const auto rh = static_cast<std::ptrdiff_t>(k.kernel_h() / 2);
    const auto rw = static_cast<std::ptrdiff_t>(k.kernel_w() / 2);
    const auto dil = static_cast<std::ptrdiff_t>(k.dilation);

    GradTriple g{Tensor(x.tensor().shape()), Tensor(x.tensor().shape()),
                 Tensor(k.weights.shape())};
    FeatureMap gx(std::move(g.grad_input));
    for (std::size_t m = 0; m < h; ++m)
        for (std::size_t n = 0; n < w; ++n)
            for (std::size_t co = 0; co < k.out_channels(); ++co) {
                const double go = grad_out.at(co, m, n);
                if (go == 0.0) continue;
                for (std::size_t ky = 0; ky < k.kernel_h(); ++ky)
                    for (std::size_t kx = 0; kx < k.kernel_w(); ++kx) {
                        const std::size_t i = clamp_idx(
                            static_cast<std::ptrdiff_t>(m) +
                                (static_cast<std::ptrdiff_t>(ky) - rh) * dil, h);
                        const std::size_t j = clamp_idx(
                            static_cast<std::ptrdiff_t>(n) +
                                (static_cast<std::ptrdiff_t>(kx) - rw) * dil, w);
                        for (std::size_t ci = 0; ci < k.in_channels(); ++ci) {
                            const std::size_t widx =
                                ((co * k.in_channels() + ci) * k.kernel_h() + ky) *
                                    k.kernel_w() + kx;
                            g.grad_weights[widx] += go * (x.at(ci, i, j) - x.at(ci, m, n));
                            const double gw = go * k.weights[widx];
                            gx.at(ci, i, j) += gw;
                            gx.at(ci, m, n) -= gw;
                        }
                    }
            }
    g.grad_input = std::move(gx.tensor());
    return g;
}

GradTriple sdc2d_backward(const FeatureMap& grad_out, const FeatureMap& u,
                          const FeatureMap& v, const SdcKernel& k) {
    if (grad_out.channels() != k.out_channels() || !grad_out.same_extents(u) ||
        !u.same_extents(v))
        throw std::invalid_argument("sdc2d_backward: shape mismatch");
    const std::size_t h = u.height(), w = u.width();
    const std::size_t cf = v.channels();
    const auto rh = static_cast<std::ptrdiff_t>(k.kernel_h() / 2);
    const auto rw = static_cast<std::ptrdiff_t>(k.kernel_w() / 2);
    const auto dil = static_cast<std::ptrdiff_t>(k.dilation);
    const double inv_l2 = 1.0 / (k.lambda * k.lambda);

    GradTriple g{Tensor(u.tensor().shape()), Tensor(v.tensor().shape()),
                 Tensor(k.weights.shape())};
    FeatureMap gu(std::move(g.grad_input));
    FeatureMap gv(std::move(g.grad_guidance));
    for (std::size_t m = 0; m < h; ++m)
        for (std::size_t n = 0; n < w; ++n)
            for (std::size_t ky = 0; ky < k.kernel_h(); ++ky)
                for (std::size_t kx = 0; kx < k.kernel_w(); ++kx) {
                    const std::size_t i = clamp_idx(
                        static_cast<std::ptrdiff_t>(m) +
                            (static_cast<std::ptrdiff_t>(ky) - rh) * dil, h);
                    const std::size_t j = clamp_idx(
                        static_cast<std::ptrdiff_t>(n) +
                            (static_cast<std::ptrdiff_t>(kx) - rw) * dil, w);
                    double s = 0.0;
                    for (std::size_t f = 0; f < cf; ++f) {
                        const double d = v.at(f, i, j) - v.at(f, m, n);
                        s += d * d;
                    }
                    const double s_mean = s / static_cast<double>(cf);
                    const double root = std::sqrt(1.0 + s_mean * inv_l2);
                    const double sim = 1.0 / root;
                    // d sim / d s_mean
                    const double dsim = -0.5 * inv_l2 / (root * root * root);

                    // loss sensitivity to this tap's similarity value
                    double a = 0.0;
                    for (std::size_t co = 0; co < k.out_channels(); ++co) {
                        const double go = grad_out.at(co, m, n);
                        if (go == 0.0) continue;
                        for (std::size_t ci = 0; ci < k.in_channels(); ++ci) {
                            const double du = u.at(ci, i, j) - u.at(ci, m, n);
                            const std::size_t widx =
                                ((co * k.in_channels() + ci) * k.kernel_h() + ky) *
                                    k.kernel_w() + kx;
                            g.grad_weights[widx] += go * sim * du;
                            const double gws = go * k.weights[widx] * sim;
                            gu.at(ci, i, j) += gws;
                            gu.at(ci, m, n) -= gws;
                            a += go * k.weights[widx] * du;
                        }
                    }
                    if (a != 0.0) {
                        const double coeff =
                            a * dsim * 2.0 / static_cast<double>(cf);
                        for (std::size_t f = 0; f < cf; ++f) {
                            const double dv = v.at(f, i, j) - v.at(f, m, n);
                            gv.at(f, i, j) += coeff * dv;
                            gv.at(f, m, n) -= coeff * dv;
                        }
                    }
                }
    g.grad_input = std::move(gu.tensor());
    g.grad_guidance = std::move(gv.tensor());
    return g;
}

double GradCheckResult::max() const { return std::max({input, guidance, weights}); }

namespace {

double loss_of(OpKind op, const FeatureMap& x, const FeatureMap& guidance,
               const SdcKernel& k, std::span<const double> cot) {
    FeatureMap y = [&] {
        switch (op) {
            case OpKind::Vanilla: return conv2d(x, k);
            case OpKind::Cdc: return cdc2d(x, k);
            case OpKind::Sdc: return sdc2d(x, guidance, k);
        }
        throw std::logic_error("unknown operator kind");
    }();
    double loss = 0.0;
    auto yv = y.values();
    for (std::size_t i = 0; i < yv.size(); ++i) loss += cot[i] * yv[i];
    return loss;
}

double block_error(Tensor& block, const Tensor& analytic, double step,
                   const std::function<double()>& loss) {
    double worst = 0.0;
    for (std::size_t i = 0; i < block.size(); ++i) {
        const double saved = block[i];
        block[i] = saved + step;
        const double lp = loss();
        block[i] = saved - step;
        const double lm = loss();
        block[i] = saved;
        const double fd = (lp - lm) / (2.0 * step);
        const double a = analytic[i];
        const double denom = std::max({1e-8, std::abs(a), std::abs(fd)});
        worst = std::max(worst, std::abs(a - fd) / denom);
    }
    return worst;
}

}  // namespace

GradCheckResult finite_diff_check(OpKind op, const FeatureMap& x, const FeatureMap& guidance,
                                  const SdcKernel& k, double step,
                                  std::uint64_t cotangent_seed) {
    if (!(step > 0.0)) throw std::invalid_argument("step must be positive");
    FeatureMap xm = x;
    FeatureMap gm = guidance;
    SdcKernel km = k;

    FeatureMap y0 = op == OpKind::Vanilla ? conv2d(xm, km)
                  : op == OpKind::Cdc     ? cdc2d(xm, km)
                                          : sdc2d(xm, gm, km);
    Rng rng(cotangent_seed);
    std::vector<double> cot(y0.values().size());
    for (auto& c : cot) c = rng.uniform(-1.0, 1.0);
    FeatureMap cot_map(Tensor(y0.tensor().shape(), cot));

    GradTriple analytic = op == OpKind::Vanilla ? conv2d_backward(cot_map, xm, km)
                        : op == OpKind::Cdc     ? cdc2d_backward(cot_map, xm, km)
                                                : sdc2d_backward(cot_map, xm, gm, km);

    const auto loss = [&] { return loss_of(op, xm, gm, km, cot); };

    GradCheckResult r;
    r.input = block_error(xm.tensor(), analytic.grad_input, step, loss);
    if (op == OpKind::Sdc)
        r.guidance = block_error(gm.tensor(), analytic.grad_guidance, step, loss);
    r.weights = block_error(km.weights, analytic.grad_weights, step, loss);
    return r;
}

std::vector<GradCheckRow> run_gradcheck_suite(int instances_per_op, double step,
                                              std::uint64_t seed) {
    Rng rng(seed);
    auto random_map = [&rng](std::size_t c, std::size_t h, std::size_t w) {
        FeatureMap m(c, h, w);
        for (auto& v : m.values()) v = rng.normal();
        return m;
    };

    GradCheckResult conv_max, conv2_max, cdc_max, sdc_max;
    for (int inst = 0; inst < instances_per_op; ++inst) {
        const std::size_t ci = 1 + rng.below(2);
        const std::size_t co = 1 + rng.below(2);
        const std::size_t h = 4 + rng.below(3);
        const std::size_t w = 4 + rng.below(3);
        const std::size_t cf = 1 + rng.below(3);
        const std::size_t dil = 1 + rng.below(2);
        const double lambda = rng.uniform(0.5, 1.5);

        Tensor weights({co, ci, 3, 3});
        for (auto& v : weights.values()) v = rng.normal();
        SdcKernel k(weights, dil, lambda);

        FeatureMap x = random_map(ci, h, w);
        FeatureMap v = random_map(cf, h, w);
        const std::uint64_t cseed = rng.next_u64();

        auto fold = [](GradCheckResult& acc, const GradCheckResult& r) {
            acc.input = std::max(acc.input, r.input);
            acc.guidance = std::max(acc.guidance, r.guidance);
            acc.weights = std::max(acc.weights, r.weights);
        };
        fold(conv_max, finite_diff_check(OpKind::Vanilla, x, v, k, step, cseed));
        fold(cdc_max, finite_diff_check(OpKind::Cdc, x, v, k, step, cseed));
        fold(sdc_max, finite_diff_check(OpKind::Sdc, x, v, k, step, cseed));

        // stride-2 conv (guidance projection path): checked through the same
        // machinery with a hand-rolled loop since loss_of is stride-1
        {
            FeatureMap y0 = conv2d(x, k, 2);
            Rng crng(cseed);
            std::vector<double> cot(y0.values().size());
            for (auto& cv : cot) cv = crng.uniform(-1.0, 1.0);
            FeatureMap cmap(Tensor(y0.tensor().shape(), cot));
            GradTriple analytic = conv2d_backward(cmap, x, k, 2);
            FeatureMap xm = x;
            SdcKernel km = k;
            auto loss = [&] {
                FeatureMap y = conv2d(xm, km, 2);
                double l = 0.0;
                for (std::size_t i = 0; i < cot.size(); ++i) l += cot[i] * y.values()[i];
                return l;
            };
            GradCheckResult r;
            r.input = block_error(xm.tensor(), analytic.grad_input, step, loss);
            r.weights = block_error(km.weights, analytic.grad_weights, step, loss);
            fold(conv2_max, r);
        }
    }

    return {
        {"conv2d", "input", conv_max.input},
        {"conv2d", "weights", conv_max.weights},
        {"conv2d_stride2", "input", conv2_max.input},
        {"conv2d_stride2", "weights", conv2_max.weights},
        {"cdc2d", "input", cdc_max.input},
        {"cdc2d", "weights", cdc_max.weights},
        {"sdc2d", "input", sdc_max.input},
        {"sdc2d", "guidance", sdc_max.guidance},
        {"sdc2d", "weights", sdc_max.weights},
    };
}

}  // namespace semdiff
