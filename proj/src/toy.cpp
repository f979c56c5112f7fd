#include "semdiff/toy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "semdiff/grad.hpp"
#include "semdiff/ops.hpp"
#include "semdiff/rng.hpp"

namespace semdiff {

namespace {

// fixed per-class palette (RGB in [0,1])
constexpr double kPalette[4][3] = {
    {0.10, 0.10, 0.15},
    {0.90, 0.30, 0.20},
    {0.20, 0.85, 0.30},
    {0.30, 0.35, 0.90},
};

}  // namespace

Scene gen_scene(const SceneConfig& cfg) {
    if (cfg.height < 16 || cfg.width < 16)
        throw std::invalid_argument("scene extents must be at least 16");
    if (cfg.n_classes < 2 || cfg.n_classes > 4)
        throw std::invalid_argument("n_classes must be in [2, 4]");
    if (cfg.texture < 0.0) throw std::invalid_argument("texture amplitude must be >= 0");

    Rng rng(cfg.seed);
    const std::size_t h = cfg.height, w = cfg.width;
    LabelMap labels(h, w, 0);

    for (int s = 0; s < cfg.shapes; ++s) {
        const int cls = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.n_classes - 1)));
        const bool circle = rng.below(2) == 1;
        if (circle) {
            const std::size_t cy = 4 + rng.below(h - 8);
            const std::size_t cx = 4 + rng.below(w - 8);
            const std::size_t r = 3 + rng.below(std::min(h, w) / 4);
            for (std::size_t y = 0; y < h; ++y)
                for (std::size_t x = 0; x < w; ++x) {
                    const double dy = static_cast<double>(y) - static_cast<double>(cy);
                    const double dx = static_cast<double>(x) - static_cast<double>(cx);
                    if (dy * dy + dx * dx <= static_cast<double>(r * r))
                        labels.at(y, x) = cls;
                }
        } else {
            const std::size_t y0 = rng.below(h - 8);
            const std::size_t x0 = rng.below(w - 8);
            const std::size_t hh = 4 + rng.below(h / 2);
            const std::size_t ww = 4 + rng.below(w / 2);
            for (std::size_t y = y0; y < std::min(h, y0 + hh); ++y)
                for (std::size_t x = x0; x < std::min(w, x0 + ww); ++x)
                    labels.at(y, x) = cls;
        }
    }

    FeatureMap image(3, h, w);
    // random checker phase per scene so the texture cannot be memorized
    const std::size_t oy = rng.below(8), ox = rng.below(8);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
            // period-8 checker plus per-pixel noise, shared across channels
            const double checker = ((((x + ox) >> 2) + ((y + oy) >> 2)) & 1) ? 1.0 : -1.0;
            const double t = cfg.texture * (0.5 * checker + 0.5 * rng.uniform(-1.0, 1.0));
            const int cls = labels.at(y, x);
            for (std::size_t c = 0; c < 3; ++c)
                image.at(c, y, x) = kPalette[cls][c] + t;
        }
    return {std::move(image), std::move(labels)};
}

std::string to_string(NeckKind k) {
    switch (k) {
        case NeckKind::None: return "none";
        case NeckKind::Vanilla: return "vanilla";
        case NeckKind::Cdc: return "cdc";
        case NeckKind::Sdn: return "sdn";
    }
    throw std::logic_error("unknown neck kind");
}

NeckKind neck_from_string(const std::string& s) {
    if (s == "none") return NeckKind::None;
    if (s == "vanilla") return NeckKind::Vanilla;
    if (s == "cdc") return NeckKind::Cdc;
    if (s == "sdn") return NeckKind::Sdn;
    throw std::invalid_argument("unknown neck variant '" + s + "'");
}

std::vector<Tensor*> ToyModel::parameters() {
    std::vector<Tensor*> p{&enc1, &enc2};
    if (!neck_op.empty()) p.push_back(&neck_op);
    if (!phi.empty()) p.push_back(&phi);
    if (!fusion.empty()) p.push_back(&fusion);
    p.push_back(&dec);
    return p;
}

std::vector<const Tensor*> ToyModel::parameters() const {
    auto mut = const_cast<ToyModel*>(this)->parameters();
    return {mut.begin(), mut.end()};
}

namespace {

Tensor he_init(std::vector<std::size_t> shape, Rng& rng) {
    Tensor t(std::move(shape));
    const double fan_in = static_cast<double>(t.shape()[1] * t.shape()[2] * t.shape()[3]);
    const double bound = std::sqrt(6.0 / fan_in);
    for (auto& v : t.values()) v = rng.uniform(-bound, bound);
    return t;
}

FeatureMap relu(const FeatureMap& x) {
    FeatureMap out = x;
    for (auto& v : out.values())
        if (v < 0.0) v = 0.0;
    return out;
}

FeatureMap relu_backward(const FeatureMap& grad, const FeatureMap& pre) {
    FeatureMap out = grad;
    auto g = out.values();
    auto p = pre.values();
    for (std::size_t i = 0; i < g.size(); ++i)
        if (p[i] <= 0.0) g[i] = 0.0;
    return out;
}

void add_into(Tensor& dst, const Tensor& src) {
    auto d = dst.values();
    auto s = src.values();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
}

// intermediates needed by the backward pass
struct Trace {
    FeatureMap a1, r1, a2, r2;       // encoder
    FeatureMap y;                    // neck operator response
    FeatureMap cat;                  // concat(r2, y)
    FeatureMap fn;                   // neck output
    FeatureMap phi_out, guidance;    // sdn only
    FeatureMap scores_low, scores;
};

Trace forward_trace(const ToyModel& m, const FeatureMap& image) {
    SdcKernel k1(m.enc1), k2(m.enc2);
    FeatureMap a1 = conv2d(image, k1, 2);
    FeatureMap r1 = relu(a1);
    FeatureMap a2 = conv2d(r1, k2, 2);
    FeatureMap r2 = relu(a2);

    FeatureMap y(1, 1, 1), cat(1, 1, 1), fn = r2;
    FeatureMap phi_out(1, 1, 1), guidance(1, 1, 1);
    if (m.neck != NeckKind::None) {
        SdcKernel nk(m.neck_op, 1, m.cfg.lambda);
        switch (m.neck) {
            case NeckKind::Vanilla:
                y = conv2d(r2, nk);
                break;
            case NeckKind::Cdc:
                y = cdc2d(r2, nk);
                break;
            case NeckKind::Sdn: {
                SdcKernel pk(m.phi);
                phi_out = conv2d(r2, pk, 2);
                guidance = bilinear_upsample(phi_out, r2.height(), r2.width());
                y = sdc2d(r2, guidance, nk);
                break;
            }
            default:
                break;
        }
        cat = concat_channels(r2, y);
        SdcKernel fk(m.fusion);
        fn = conv2d(cat, fk);
    }
    SdcKernel dk(m.dec);
    FeatureMap scores_low = conv2d(fn, dk);
    FeatureMap scores = bilinear_upsample(scores_low, image.height(), image.width());
    return {std::move(a1), std::move(r1), std::move(a2), std::move(r2),
            std::move(y),  std::move(cat), std::move(fn), std::move(phi_out),
            std::move(guidance), std::move(scores_low), std::move(scores)};
}

}  // namespace

ToyModel init_model(NeckKind neck, const ToyConfig& cfg, std::uint64_t seed) {
    Rng rng(seed);
    const std::size_t c = cfg.enc_channels;
    ToyModel m;
    m.neck = neck;
    m.cfg = cfg;
    m.enc1 = he_init({c, 3, 3, 3}, rng);
    m.enc2 = he_init({c, c, 3, 3}, rng);
    if (neck != NeckKind::None) {
        m.neck_op = he_init({c, c, 3, 3}, rng);
        m.fusion = he_init({c, 2 * c, 1, 1}, rng);
    }
    if (neck == NeckKind::Sdn) m.phi = he_init({cfg.guidance_channels, c, 3, 3}, rng);
    m.dec = he_init({static_cast<std::size_t>(cfg.n_classes), c, 1, 1}, rng);
    return m;
}

FeatureMap model_forward(const ToyModel& m, const FeatureMap& image) {
    return forward_trace(m, image).scores;
}

std::pair<double, FeatureMap> loss_and_grad(const FeatureMap& scores, const LabelMap& labels) {
    const std::size_t k = scores.channels(), h = scores.height(), w = scores.width();
    if (labels.height != h || labels.width != w)
        throw std::invalid_argument("loss_and_grad: label extents mismatch");
    const double inv_n = 1.0 / static_cast<double>(h * w);
    double loss = 0.0;
    FeatureMap grad(k, h, w);
    std::vector<double> p(k);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
            const int lbl = labels.at(y, x);
            if (lbl < 0 || static_cast<std::size_t>(lbl) >= k)
                throw std::out_of_range("label outside score channels");
            double mx = scores.at(0, y, x);
            for (std::size_t c = 1; c < k; ++c) mx = std::max(mx, scores.at(c, y, x));
            double z = 0.0;
            for (std::size_t c = 0; c < k; ++c) {
                p[c] = std::exp(scores.at(c, y, x) - mx);
                z += p[c];
            }
            for (std::size_t c = 0; c < k; ++c) p[c] /= z;
            loss -= std::log(p[static_cast<std::size_t>(lbl)]) * inv_n;
            for (std::size_t c = 0; c < k; ++c)
                grad.at(c, y, x) =
                    (p[c] - (c == static_cast<std::size_t>(lbl) ? 1.0 : 0.0)) * inv_n;
        }
    return {loss, std::move(grad)};
}

double model_loss_and_gradients(const ToyModel& m, const FeatureMap& image,
                                const LabelMap& labels, std::vector<Tensor>& grads) {
    Trace t = forward_trace(m, image);
    auto [loss, g_scores] = loss_and_grad(t.scores, labels);

    FeatureMap g_low =
        bilinear_upsample_adjoint(g_scores, t.scores_low.height(), t.scores_low.width());
    SdcKernel dk(m.dec);
    GradTriple dec_g = conv2d_backward(g_low, t.fn, dk);
    Tensor grad_dec = std::move(dec_g.grad_weights);
    FeatureMap g_fn(std::move(dec_g.grad_input));

    Tensor grad_neckop, grad_phi, grad_fusion;
    FeatureMap g_r2 = g_fn;
    if (m.neck != NeckKind::None) {
        SdcKernel fk(m.fusion);
        GradTriple fus_g = conv2d_backward(g_fn, t.cat, fk);
        grad_fusion = std::move(fus_g.grad_weights);
        FeatureMap g_cat(std::move(fus_g.grad_input));
        const std::size_t c = m.cfg.enc_channels;
        g_r2 = channel_slice(g_cat, 0, c);
        FeatureMap g_y = channel_slice(g_cat, c, 2 * c);

        SdcKernel nk(m.neck_op, 1, m.cfg.lambda);
        switch (m.neck) {
            case NeckKind::Vanilla: {
                GradTriple og = conv2d_backward(g_y, t.r2, nk);
                grad_neckop = std::move(og.grad_weights);
                add_into(g_r2.tensor(), og.grad_input);
                break;
            }
            case NeckKind::Cdc: {
                GradTriple og = cdc2d_backward(g_y, t.r2, nk);
                grad_neckop = std::move(og.grad_weights);
                add_into(g_r2.tensor(), og.grad_input);
                break;
            }
            case NeckKind::Sdn: {
                GradTriple og = sdc2d_backward(g_y, t.r2, t.guidance, nk);
                grad_neckop = std::move(og.grad_weights);
                add_into(g_r2.tensor(), og.grad_input);
                FeatureMap g_guid(std::move(og.grad_guidance));
                FeatureMap g_phi_out = bilinear_upsample_adjoint(
                    g_guid, t.phi_out.height(), t.phi_out.width());
                SdcKernel pk(m.phi);
                GradTriple pg = conv2d_backward(g_phi_out, t.r2, pk, 2);
                grad_phi = std::move(pg.grad_weights);
                add_into(g_r2.tensor(), pg.grad_input);
                break;
            }
            default:
                break;
        }
    }

    FeatureMap g_a2 = relu_backward(g_r2, t.a2);
    SdcKernel k2(m.enc2);
    GradTriple e2g = conv2d_backward(g_a2, t.r1, k2, 2);
    FeatureMap g_a1 = relu_backward(FeatureMap(std::move(e2g.grad_input)), t.a1);
    SdcKernel k1(m.enc1);
    GradTriple e1g = conv2d_backward(g_a1, image, k1, 2);

    grads.clear();
    grads.push_back(std::move(e1g.grad_weights));
    grads.push_back(std::move(e2g.grad_weights));
    if (!m.neck_op.empty()) grads.push_back(std::move(grad_neckop));
    if (!m.phi.empty()) grads.push_back(std::move(grad_phi));
    if (!m.fusion.empty()) grads.push_back(std::move(grad_fusion));
    grads.push_back(std::move(grad_dec));
    return loss;
}

TrainRecord train(ToyModel& m, const std::vector<Scene>& scenes, int epochs,
                  double learning_rate, std::uint64_t seed) {
    if (scenes.empty()) throw std::invalid_argument("train: empty dataset");
    auto params = m.parameters();
    std::vector<Tensor> velocity;
    velocity.reserve(params.size());
    for (Tensor* p : params) velocity.emplace_back(p->shape());

    // fixed seeded scene order, reused every epoch
    std::vector<std::size_t> order(scenes.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(seed);
    for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[rng.below(i)]);

    TrainRecord rec;
    std::vector<Tensor> grads;
    for (int e = 0; e < epochs; ++e)
        for (std::size_t idx : order) {
            const Scene& sc = scenes[idx];
            const double loss = model_loss_and_gradients(m, sc.image, sc.labels, grads);
            if (!std::isfinite(loss))
                throw std::runtime_error("training diverged: non-finite loss at step " +
                                         std::to_string(rec.losses.size()));
            rec.losses.push_back(loss);
            for (std::size_t p = 0; p < params.size(); ++p) {
                auto v = velocity[p].values();
                auto g = grads[p].values();
                auto wv = params[p]->values();
                for (std::size_t i = 0; i < v.size(); ++i) {
                    v[i] = 0.9 * v[i] + g[i];
                    wv[i] -= learning_rate * v[i];
                }
            }
        }
    return rec;
}

LabelMap argmax_labels(const FeatureMap& scores) {
    LabelMap out(scores.height(), scores.width());
    for (std::size_t y = 0; y < scores.height(); ++y)
        for (std::size_t x = 0; x < scores.width(); ++x) {
            int best = 0;
            double best_v = scores.at(0, y, x);
            for (std::size_t c = 1; c < scores.channels(); ++c)
                if (scores.at(c, y, x) > best_v) {  // ties keep the lower index
                    best_v = scores.at(c, y, x);
                    best = static_cast<int>(c);
                }
            out.at(y, x) = best;
        }
    return out;
}

EvalAggregates evaluate_model(const ToyModel& m, const std::vector<Scene>& scenes) {
    if (scenes.empty()) throw std::invalid_argument("evaluate_model: no scenes");
    EvalAggregates agg;
    for (const Scene& sc : scenes) {
        const LabelMap pred = argmax_labels(model_forward(m, sc.image));
        const auto cm = confusion_matrix(pred, sc.labels, m.cfg.n_classes);
        agg.miou += miou(cm).value_or(0.0);
        agg.f1px += boundary_fscore(pred, sc.labels, 1).value_or(0.0);
        agg.f3px += boundary_fscore(pred, sc.labels, 3).value_or(0.0);
    }
    const double n = static_cast<double>(scenes.size());
    agg.miou /= n;
    agg.f1px /= n;
    agg.f3px /= n;
    return agg;
}

}  // namespace semdiff
