#include <doctest.h>

#include <cstdio>

#include "semdiff/rng.hpp"
#include "semdiff/tensor.hpp"
#include "semdiff/tensor_io.hpp"

using namespace semdiff;

namespace {

FeatureMap random_map(std::size_t c, std::size_t h, std::size_t w, std::uint64_t seed) {
    Rng rng(seed);
    FeatureMap m(c, h, w);
    for (auto& v : m.values()) v = rng.uniform(-2.0, 2.0);
    return m;
}

}  // namespace

TEST_CASE("tensor construction invariants") {
    Tensor t({2, 3});
    CHECK(t.size() == 6);
    CHECK_THROWS_AS(Tensor({2, 0, 3}), std::invalid_argument);
    CHECK_THROWS_AS(Tensor({2, 2}, {1.0, 2.0, 3.0}), std::invalid_argument);
    CHECK_THROWS_AS(FeatureMap(Tensor({4, 4})), std::invalid_argument);
}

TEST_CASE("pad_replicate") {
    SUBCASE("margin 0 is the identity") {
        FeatureMap x = random_map(2, 3, 4, 1);
        FeatureMap p = pad_replicate(x, 0);
        for (std::size_t i = 0; i < x.values().size(); ++i)
            CHECK(p.values()[i] == x.values()[i]);
    }
    SUBCASE("constants are fixed points") {
        FeatureMap p = pad_replicate(FeatureMap::full(1, 2, 2, 3.5), 2);
        CHECK(p.height() == 6);
        CHECK(p.width() == 6);
        for (double v : p.values()) CHECK(v == 3.5);
    }
    SUBCASE("hand-enumerated 2x2 grid, margin 1") {
        FeatureMap x(Tensor({1, 2, 2}, {1, 2, 3, 4}));
        FeatureMap p = pad_replicate(x, 1);
        const double expect[4][4] = {
            {1, 1, 2, 2}, {1, 1, 2, 2}, {3, 3, 4, 4}, {3, 3, 4, 4}};
        for (std::size_t y = 0; y < 4; ++y)
            for (std::size_t xx = 0; xx < 4; ++xx)
                CHECK(p.at(0, y, xx) == expect[y][xx]);
    }
    SUBCASE("pad then crop round-trips") {
        FeatureMap x = random_map(3, 5, 7, 2);
        FeatureMap back = crop(pad_replicate(x, 3), 3);
        for (std::size_t i = 0; i < x.values().size(); ++i)
            CHECK(back.values()[i] == x.values()[i]);
    }
}

TEST_CASE("bilinear_upsample") {
    SUBCASE("identity when extents match") {
        FeatureMap x = random_map(2, 4, 4, 3);
        FeatureMap y = bilinear_upsample(x, 4, 4);
        for (std::size_t i = 0; i < x.values().size(); ++i)
            CHECK(y.values()[i] == x.values()[i]);
    }
    SUBCASE("constants preserved at any size") {
        FeatureMap y = bilinear_upsample(FeatureMap::full(1, 2, 3, 0.7), 9, 11);
        for (double v : y.values()) CHECK(v == doctest::Approx(0.7).epsilon(1e-15));
    }
    SUBCASE("hand-computed 2x2 -> 4x4 grid") {
        FeatureMap x(Tensor({1, 2, 2}, {0, 1, 2, 3}));
        FeatureMap y = bilinear_upsample(x, 4, 4);
        // value(y, x) = 2*wy + wx with weights {0, 0.25, 0.75, 1}
        const double wgt[4] = {0.0, 0.25, 0.75, 1.0};
        for (std::size_t r = 0; r < 4; ++r)
            for (std::size_t c = 0; c < 4; ++c)
                CHECK(y.at(0, r, c) == doctest::Approx(2 * wgt[r] + wgt[c]).epsilon(1e-15));
    }
    SUBCASE("downsampling is rejected") {
        FeatureMap x(1, 4, 4);
        CHECK_THROWS_AS(bilinear_upsample(x, 2, 4), std::invalid_argument);
    }
    SUBCASE("output stays within input min/max") {
        FeatureMap x = random_map(1, 3, 5, 7);
        double mn = x.values()[0], mx = x.values()[0];
        for (double v : x.values()) {
            mn = std::min(mn, v);
            mx = std::max(mx, v);
        }
        FeatureMap y = bilinear_upsample(x, 10, 17);
        for (double v : y.values()) {
            CHECK(v >= mn - 1e-12);
            CHECK(v <= mx + 1e-12);
        }
    }
    SUBCASE("adjoint satisfies the dot-product identity") {
        FeatureMap x = random_map(2, 3, 4, 11);
        FeatureMap cot = random_map(2, 7, 9, 12);
        FeatureMap ax = bilinear_upsample(x, 7, 9);
        FeatureMap aty = bilinear_upsample_adjoint(cot, 3, 4);
        double lhs = 0.0, rhs = 0.0;
        for (std::size_t i = 0; i < ax.values().size(); ++i)
            lhs += ax.values()[i] * cot.values()[i];
        for (std::size_t i = 0; i < x.values().size(); ++i)
            rhs += x.values()[i] * aty.values()[i];
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    }
}

TEST_CASE("concat_channels") {
    FeatureMap a = random_map(2, 4, 4, 20);
    FeatureMap b = random_map(3, 4, 4, 21);
    FeatureMap cat = concat_channels(a, b);
    CHECK(cat.channels() == 5);
    CHECK(cat.at(0, 1, 2) == a.at(0, 1, 2));
    CHECK(cat.at(2, 3, 1) == b.at(0, 3, 1));

    SUBCASE("slice recovers both inputs") {
        FeatureMap ra = channel_slice(cat, 0, 2);
        FeatureMap rb = channel_slice(cat, 2, 5);
        for (std::size_t i = 0; i < a.values().size(); ++i)
            CHECK(ra.values()[i] == a.values()[i]);
        for (std::size_t i = 0; i < b.values().size(); ++i)
            CHECK(rb.values()[i] == b.values()[i]);
    }
    SUBCASE("spatial mismatch is rejected") {
        CHECK_THROWS_AS(concat_channels(a, FeatureMap(3, 5, 4)), std::invalid_argument);
    }
}

TEST_CASE("tns round-trip and format") {
    Tensor t({2, 3, 4});
    Rng rng(9);
    for (auto& v : t.values()) v = rng.normal();
    const std::string path = "roundtrip_test.tns";
    save_tns(t, path);
    Tensor back = load_tns(path);
    REQUIRE(back.shape() == t.shape());
    for (std::size_t i = 0; i < t.size(); ++i) CHECK(back[i] == t[i]);

    // header layout: magic + rank + extents
    FILE* f = std::fopen(path.c_str(), "rb");
    REQUIRE(f);
    unsigned char head[20];
    REQUIRE(std::fread(head, 1, 20, f) == 20);
    std::fclose(f);
    CHECK(head[0] == 'T');
    CHECK(head[3] == '1');
    CHECK(head[4] == 3);   // rank, little-endian
    CHECK(head[8] == 2);   // first extent
    CHECK(head[12] == 3);
    CHECK(head[16] == 4);
    std::remove(path.c_str());
}

TEST_CASE("pgm/ppm round-trip at 8-bit resolution") {
    FeatureMap img(3, 5, 6);
    Rng rng(4);
    for (auto& v : img.values()) v = rng.uniform();
    write_ppm(img, "io_test.ppm");
    FeatureMap back = read_ppm("io_test.ppm");
    REQUIRE(back.channels() == 3);
    for (std::size_t i = 0; i < img.values().size(); ++i)
        CHECK(back.values()[i] == doctest::Approx(img.values()[i]).epsilon(0.5 / 255.0 + 1e-9));
    std::remove("io_test.ppm");

    LabelMap lm(3, 4);
    lm.at(1, 2) = 3;
    write_label_pgm(lm, "io_test.pgm");
    LabelMap lback = read_label_pgm("io_test.pgm");
    CHECK(lback.at(1, 2) == 3);
    CHECK(lback.at(0, 0) == 0);
    std::remove("io_test.pgm");
}
