#include <doctest.h>

#include <cmath>

#include "semdiff/diffusion.hpp"
#include "semdiff/metrics.hpp"
#include "semdiff/ops.hpp"
#include "semdiff/rng.hpp"
#include "semdiff/toy.hpp"

using namespace semdiff;

namespace {

FeatureMap random_map(std::size_t c, std::size_t h, std::size_t w, std::uint64_t seed) {
    Rng rng(seed);
    FeatureMap m(c, h, w);
    for (auto& v : m.values()) v = rng.uniform(-1.0, 1.0);
    return m;
}

std::size_t clampi(std::ptrdiff_t i, std::size_t n) {
    return i < 0 ? 0 : (i >= static_cast<std::ptrdiff_t>(n) ? n - 1 : static_cast<std::size_t>(i));
}

// brute-force reference cross-correlation with replicate clamping
FeatureMap ref_conv(const FeatureMap& x, const SdcKernel& k, std::size_t stride) {
    const std::size_t oh = (x.height() + stride - 1) / stride;
    const std::size_t ow = (x.width() + stride - 1) / stride;
    FeatureMap out(k.out_channels(), oh, ow);
    const auto rh = static_cast<std::ptrdiff_t>(k.kernel_h() / 2);
    const auto rw = static_cast<std::ptrdiff_t>(k.kernel_w() / 2);
    for (std::size_t co = 0; co < k.out_channels(); ++co)
        for (std::size_t m = 0; m < oh; ++m)
            for (std::size_t n = 0; n < ow; ++n) {
                double acc = 0.0;
                for (std::size_t ci = 0; ci < k.in_channels(); ++ci)
                    for (std::size_t ky = 0; ky < k.kernel_h(); ++ky)
                        for (std::size_t kx = 0; kx < k.kernel_w(); ++kx) {
                            const std::size_t i = clampi(
                                static_cast<std::ptrdiff_t>(m * stride) +
                                    (static_cast<std::ptrdiff_t>(ky) - rh) *
                                        static_cast<std::ptrdiff_t>(k.dilation),
                                x.height());
                            const std::size_t j = clampi(
                                static_cast<std::ptrdiff_t>(n * stride) +
                                    (static_cast<std::ptrdiff_t>(kx) - rw) *
                                        static_cast<std::ptrdiff_t>(k.dilation),
                                x.width());
                            acc += k.weight(co, ci, ky, kx) * x.at(ci, i, j);
                        }
                out.at(co, m, n) = acc;
            }
    return out;
}

}  // namespace

TEST_CASE("SdcKernel invariants") {
    CHECK_THROWS_AS(SdcKernel(Tensor({1, 1, 2, 3})), std::invalid_argument);  // even h
    CHECK_THROWS_AS(SdcKernel(Tensor({1, 1, 3, 3}), 0), std::invalid_argument);
    CHECK_THROWS_AS(SdcKernel(Tensor({1, 1, 3, 3}), 1, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(SdcKernel(Tensor({3, 3})), std::invalid_argument);
}

TEST_CASE("conv2d") {
    SUBCASE("identity kernel passes input through") {
        const std::size_t c = 3;
        Tensor w({c, c, 3, 3});
        for (std::size_t i = 0; i < c; ++i) w[((i * c + i) * 3 + 1) * 3 + 1] = 1.0;
        FeatureMap x = random_map(c, 5, 6, 1);
        FeatureMap y = conv2d(x, SdcKernel(w));
        for (std::size_t i = 0; i < x.values().size(); ++i)
            CHECK(y.values()[i] == x.values()[i]);
    }
    SUBCASE("all-ones kernel on constant input") {
        SdcKernel k(Tensor::full({1, 1, 3, 3}, 1.0));
        FeatureMap y = conv2d(FeatureMap::full(1, 4, 4, 2.0), k);
        for (double v : y.values()) CHECK(v == doctest::Approx(18.0).epsilon(1e-15));
    }
    SUBCASE("hand cross-correlation of the 1..9 grid") {
        FeatureMap x(Tensor({1, 3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9}));
        SdcKernel k(Tensor::full({1, 1, 3, 3}, 1.0));
        FeatureMap y = conv2d(x, k);
        const double expect[3][3] = {{21, 27, 33}, {39, 45, 51}, {57, 63, 69}};
        for (std::size_t m = 0; m < 3; ++m)
            for (std::size_t n = 0; n < 3; ++n)
                CHECK(y.at(0, m, n) == doctest::Approx(expect[m][n]).epsilon(1e-15));
    }
    SUBCASE("matches the brute-force reference on random cases") {
        Rng rng(42);
        for (int inst = 0; inst < 10; ++inst) {
            const std::size_t ci = 1 + rng.below(3), co = 1 + rng.below(3);
            const std::size_t h = 4 + rng.below(4), w = 4 + rng.below(4);
            const std::size_t dil = 1 + rng.below(2);
            const std::size_t stride = 1 + rng.below(2);
            Tensor weights({co, ci, 3, 3});
            for (auto& v : weights.values()) v = rng.normal();
            SdcKernel k(weights, dil);
            FeatureMap x = random_map(ci, h, w, rng.next_u64());
            FeatureMap got = conv2d(x, k, stride);
            FeatureMap ref = ref_conv(x, k, stride);
            REQUIRE(got.values().size() == ref.values().size());
            for (std::size_t i = 0; i < got.values().size(); ++i)
                CHECK(got.values()[i] == doctest::Approx(ref.values()[i]).epsilon(1e-12));
        }
    }
    SUBCASE("channel mismatch rejected") {
        SdcKernel k(Tensor::full({1, 2, 3, 3}, 1.0));
        CHECK_THROWS_AS(conv2d(FeatureMap(1, 4, 4), k), std::invalid_argument);
    }
    SUBCASE("stride-2 extents use ceil division") {
        SdcKernel k(Tensor::full({1, 1, 3, 3}, 1.0));
        CHECK(conv2d(FeatureMap(1, 8, 8), k, 2).height() == 4);
        CHECK(conv2d(FeatureMap(1, 7, 7), k, 2).width() == 4);
    }
}

TEST_CASE("cdc2d") {
    SUBCASE("constant input gives zeros") {
        Tensor w({2, 1, 3, 3});
        Rng rng(3);
        for (auto& v : w.values()) v = rng.normal();
        FeatureMap y = cdc2d(FeatureMap::full(1, 5, 5, 3.3), SdcKernel(w));
        for (double v : y.values()) CHECK(v == 0.0);
    }
    SUBCASE("output invariant to the center tap weight") {
        Tensor w = Tensor::full({1, 2, 3, 3}, 0.5);
        FeatureMap x = random_map(2, 5, 5, 8);
        FeatureMap y1 = cdc2d(x, SdcKernel(w));
        w[(0 * 2 + 0) * 9 + 4] = 123.0;  // center tap of channel 0
        w[(0 * 2 + 1) * 9 + 4] = -55.0;  // center tap of channel 1
        FeatureMap y2 = cdc2d(x, SdcKernel(w));
        for (std::size_t i = 0; i < y1.values().size(); ++i)
            CHECK(y1.values()[i] == y2.values()[i]);
    }
    SUBCASE("impulse hand case") {
        FeatureMap x(1, 3, 3);
        x.at(0, 1, 1) = 1.0;
        SdcKernel k(Tensor::full({1, 1, 3, 3}, 1.0));
        FeatureMap y = cdc2d(x, k);
        CHECK(y.at(0, 1, 1) == doctest::Approx(-8.0).epsilon(1e-15));
        CHECK(y.at(0, 0, 0) == doctest::Approx(1.0).epsilon(1e-15));
    }
}

TEST_CASE("semantic_similarity") {
    const std::vector<double> a{0.5, -0.25, 1.0};
    CHECK(semantic_similarity(a, a, 0.3) == 1.0);
    const std::vector<double> b1{0.0}, b2{1.0};
    CHECK(semantic_similarity(b1, b2, 1.0) ==
          doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));
    const std::vector<double> c1{0, 0, 0, 0}, c2{1, 1, 1, 1};
    CHECK(semantic_similarity(c1, c2, 1.0) ==
          doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));
    CHECK_THROWS_AS(semantic_similarity(b1, a, 1.0), std::invalid_argument);

    SUBCASE("symmetry on random vectors") {
        Rng rng(77);
        for (int i = 0; i < 50; ++i) {
            std::vector<double> va(3), vb(3);
            for (auto& v : va) v = rng.normal();
            for (auto& v : vb) v = rng.normal();
            const double lambda = rng.uniform(0.2, 2.0);
            CHECK(semantic_similarity(va, vb, lambda) == semantic_similarity(vb, va, lambda));
        }
    }
}

TEST_CASE("sdc2d") {
    SUBCASE("constant U gives zeros") {
        Tensor w({1, 2, 3, 3});
        Rng rng(5);
        for (auto& v : w.values()) v = rng.normal();
        FeatureMap v = random_map(2, 4, 4, 6);
        FeatureMap y = sdc2d(FeatureMap::full(2, 4, 4, 1.5), v, SdcKernel(w, 1, 0.8));
        for (double val : y.values()) CHECK(val == 0.0);
    }
    SUBCASE("constant V reduces to the pure difference convolution") {
        Tensor w({2, 2, 3, 3});
        Rng rng(9);
        for (auto& val : w.values()) val = rng.normal();
        SdcKernel k(w, 1, 0.7);
        FeatureMap u = random_map(2, 5, 6, 10);
        FeatureMap v = FeatureMap::full(1, 5, 6, 4.2);
        FeatureMap y_sdc = sdc2d(u, v, k);
        FeatureMap y_cdc = cdc2d(u, k);
        for (std::size_t i = 0; i < y_sdc.values().size(); ++i)
            CHECK(y_sdc.values()[i] == doctest::Approx(y_cdc.values()[i]).epsilon(1e-14));
    }
    SUBCASE("impulse hand case with constant guidance") {
        FeatureMap u(1, 3, 3);
        u.at(0, 1, 1) = 1.0;
        FeatureMap v = FeatureMap::full(1, 3, 3, 0.0);
        SdcKernel k(Tensor::full({1, 1, 3, 3}, 1.0), 1, 1.0);
        FeatureMap y = sdc2d(u, v, k);
        CHECK(y.at(0, 1, 1) == doctest::Approx(-8.0).epsilon(1e-15));
        CHECK(y.at(0, 0, 0) == doctest::Approx(1.0).epsilon(1e-15));
    }
    SUBCASE("center tap is dead") {
        Tensor w = Tensor::full({1, 1, 3, 3}, 0.3);
        FeatureMap u = random_map(1, 4, 4, 11);
        FeatureMap v = random_map(2, 4, 4, 12);
        FeatureMap y1 = sdc2d(u, v, SdcKernel(w, 1, 0.9));
        w[4] = 1e6;
        FeatureMap y2 = sdc2d(u, v, SdcKernel(w, 1, 0.9));
        for (std::size_t i = 0; i < y1.values().size(); ++i)
            CHECK(y1.values()[i] == y2.values()[i]);
    }
    SUBCASE("matches the diffusion increment with all-ones weights") {
        FeatureMap u = random_map(1, 6, 7, 13);
        FeatureMap v = random_map(2, 6, 7, 14);
        SdcKernel k(Tensor::full({1, 1, 3, 3}, 1.0), 1, 0.8);
        const auto sched = DiffusionSchedule::make(1, 1.0, 1.0);
        FeatureMap utilde = diffusion_increment(u, v, sched, DiffusivityConfig(0.8));
        FeatureMap y = sdc2d(u, v, k);
        for (std::size_t i = 0; i < y.values().size(); ++i)
            CHECK(std::abs(y.values()[i] - utilde.values()[i]) < 1e-12);
    }
}

TEST_CASE("texture rejection: SDC quiet inside regions, both respond at boundaries") {
    SceneConfig cfg;
    cfg.height = 32;
    cfg.width = 32;
    cfg.n_classes = 2;
    cfg.shapes = 3;
    cfg.texture = 0.15;
    cfg.seed = 7;
    Scene scene = gen_scene(cfg);

    // single-channel U: channel mean of the textured image
    FeatureMap u(1, cfg.height, cfg.width);
    for (std::size_t y = 0; y < cfg.height; ++y)
        for (std::size_t x = 0; x < cfg.width; ++x)
            u.at(0, y, x) = (scene.image.at(0, y, x) + scene.image.at(1, y, x) +
                             scene.image.at(2, y, x)) / 3.0;
    // clean region indicator as guidance
    FeatureMap v(1, cfg.height, cfg.width);
    for (std::size_t i = 0; i < v.values().size(); ++i)
        v.values()[i] = static_cast<double>(scene.labels.labels[i]);

    SdcKernel k(Tensor::full({1, 1, 3, 3}, 1.0), 1, 1.0);
    FeatureMap y_sdc = sdc2d(u, v, k);
    FeatureMap y_cdc = cdc2d(u, k);

    const BinaryMask band = boundary_mask(scene.labels, 1);
    REQUIRE(band.popcount() > 0);
    auto means = [&](const FeatureMap& y) {
        double in_sum = 0.0, band_sum = 0.0;
        std::size_t in_n = 0, band_n = 0;
        for (std::size_t yy = 0; yy < cfg.height; ++yy)
            for (std::size_t xx = 0; xx < cfg.width; ++xx) {
                const double a = std::abs(y.at(0, yy, xx));
                if (band.at(yy, xx)) {
                    band_sum += a;
                    ++band_n;
                } else {
                    in_sum += a;
                    ++in_n;
                }
            }
        return std::pair{in_sum / in_n, band_sum / band_n};
    };
    auto [sdc_in, sdc_band] = means(y_sdc);
    auto [cdc_in, cdc_band] = means(y_cdc);
    CHECK(sdc_in < cdc_in);          // SDC rejects boundary leakage inside regions
    CHECK(sdc_band > sdc_in);        // but still fires on the true boundary
    CHECK(cdc_band > cdc_in);
}

TEST_CASE("flop_estimate") {
    CHECK(flop_estimate(4, 4, 3, 3, 2, 2, 3) == 1008);
    CHECK(flop_estimate(8, 4, 3, 3, 2, 2, 3) == 2 * 1008);
    CHECK(flop_estimate(5, 7, 1, 1, 3, 4, 0) == 5 * 7 * 3 * 4);
    SUBCASE("exactly multiplicative in each spatial factor") {
        const std::uint64_t base = flop_estimate(3, 5, 3, 3, 2, 4, 6);
        CHECK(flop_estimate(6, 5, 3, 3, 2, 4, 6) == 2 * base);
        CHECK(flop_estimate(3, 10, 3, 3, 2, 4, 6) == 2 * base);
        CHECK(flop_estimate(3, 5, 9, 3, 2, 4, 6) == 3 * base);
        CHECK(flop_estimate(3, 5, 3, 15, 2, 4, 6) == 5 * base);
    }
    CHECK_THROWS_AS(flop_estimate(0, 1, 1, 1, 1, 1, 1), std::invalid_argument);
}
