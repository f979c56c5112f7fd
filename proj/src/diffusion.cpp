#include "semdiff/diffusion.hpp"

#include <cmath>

#include "semdiff/parallel.hpp"

namespace semdiff {

DiffusionSchedule DiffusionSchedule::make(int steps, double alpha, double beta,
                                          std::size_t kernel_h, std::size_t kernel_w) {
    if (steps < 0) throw std::invalid_argument("steps must be nonnegative");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must be in (0,1]");
    if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
    if (kernel_h < 1 || kernel_w < 1) throw std::invalid_argument("empty neighborhood");
    DiffusionSchedule s;
    s.steps = steps;
    s.alpha = alpha;
    s.beta = beta;
    s.kernel_h = kernel_h;
    s.kernel_w = kernel_w;
    s.stability_warning =
        beta * static_cast<double>(kernel_h * kernel_w - 1) > 1.0 + 1e-12;
    return s;
}

double diffusivity(double s, const DiffusivityConfig& cfg) {
    if (s < 0.0) throw std::invalid_argument("squared difference must be nonnegative");
    return 1.0 / std::sqrt(1.0 + s / (cfg.lambda * cfg.lambda));
}

namespace {

std::size_t clamp_idx(std::ptrdiff_t i, std::size_t extent) {
    if (i < 0) return 0;
    if (i >= static_cast<std::ptrdiff_t>(extent)) return extent - 1;
    return static_cast<std::size_t>(i);
}

// Utilde with optional alpha/beta blend folded in.
FeatureMap run_step(const FeatureMap& u, const FeatureMap& v, const DiffusionSchedule& sched,
                    const DiffusivityConfig& cfg, bool blend) {
    if (!u.same_extents(v))
        throw std::invalid_argument("diffusion: U and V spatial extents differ");
    const std::size_t c = u.channels(), h = u.height(), w = u.width();
    const std::size_t cf = v.channels();
    const auto rh = static_cast<std::ptrdiff_t>(sched.kernel_h / 2);
    const auto rw = static_cast<std::ptrdiff_t>(sched.kernel_w / 2);
    const std::ptrdiff_t top = -static_cast<std::ptrdiff_t>(sched.kernel_h - 1) + rh;
    const std::ptrdiff_t left = -static_cast<std::ptrdiff_t>(sched.kernel_w - 1) + rw;

    const std::size_t taps = sched.kernel_h * sched.kernel_w;
    FeatureMap out(c, h, w);
    parallel_rows(h, w * c * taps, [&](std::size_t m) {
        std::vector<double> g(taps);
        std::vector<std::size_t> ti(taps), tj(taps);
        for (std::size_t n = 0; n < w; ++n) {
            // one shared similarity field per pixel, reused by every U channel
            std::size_t t = 0;
            for (std::ptrdiff_t di = top; di < top + static_cast<std::ptrdiff_t>(sched.kernel_h); ++di)
                for (std::ptrdiff_t dj = left; dj < left + static_cast<std::ptrdiff_t>(sched.kernel_w); ++dj, ++t) {
                    const std::size_t i = clamp_idx(static_cast<std::ptrdiff_t>(m) + di, h);
                    const std::size_t j = clamp_idx(static_cast<std::ptrdiff_t>(n) + dj, w);
                    ti[t] = i;
                    tj[t] = j;
                    double s = 0.0;
                    for (std::size_t f = 0; f < cf; ++f) {
                        const double d = v.at(f, i, j) - v.at(f, m, n);
                        s += d * d;
                    }
                    g[t] = diffusivity(s / static_cast<double>(cf), cfg);
                }
            for (std::size_t ch = 0; ch < c; ++ch) {
                const double center_u = u.at(ch, m, n);
                double acc = 0.0;
                for (t = 0; t < taps; ++t)
                    acc += g[t] * (u.at(ch, ti[t], tj[t]) - center_u);
                out.at(ch, m, n) = blend ? sched.alpha * center_u + sched.beta * acc : acc;
            }
        }
    });
    return out;
}

}  // namespace

FeatureMap diffusion_step(const FeatureMap& u, const FeatureMap& v,
                          const DiffusionSchedule& sched, const DiffusivityConfig& cfg) {
    return run_step(u, v, sched, cfg, /*blend=*/true);
}

FeatureMap diffusion_increment(const FeatureMap& u, const FeatureMap& v,
                               const DiffusionSchedule& sched, const DiffusivityConfig& cfg) {
    return run_step(u, v, sched, cfg, /*blend=*/false);
}

FeatureMap diffuse(const FeatureMap& u, const FeatureMap& v, const DiffusionSchedule& sched,
                   const DiffusivityConfig& cfg) {
    FeatureMap cur = u;
    for (int t = 0; t < sched.steps; ++t) cur = diffusion_step(cur, v, sched, cfg);
    return cur;
}

}  // namespace semdiff
