#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "nbrdf/texture/latent_texture.hpp"

#include "helpers.hpp"

using namespace nbrdf;

namespace {

LatentBrdf random_latent(RngStream &r, int channels = 1) {
    LatentBrdf l(channels);
    for (auto &v : l.data)
        v = r.next_float() * 2 - 1;
    return l;
}

} // namespace

TEST_CASE("interpolate: identity, linearity, and validation") {
    RngStream r(101, 0);
    LatentBrdf a = random_latent(r), b = random_latent(r);

    LatentBrdf id = interpolate({a}, {1.0});
    CHECK(id.data == a.data);

    double w = 0.3;
    LatentBrdf mix = interpolate({a, b}, {w, 1 - w});
    for (int c = 0; c < kLatentDim; ++c)
        CHECK(mix.data[c] ==
              doctest::Approx(w * a.data[c] + (1 - w) * b.data[c]).epsilon(1e-6));

    CHECK_THROWS_AS(interpolate({a, b}, {0.6, 0.6}), WeightSumError);
    LatentBrdf three = random_latent(r, 3);
    CHECK_THROWS_AS(interpolate({a, three}, {0.5, 0.5}), ChannelMismatch);
}

TEST_CASE("mipmap of a 2x2 texture is the exact mean") {
    RngStream r(103, 0);
    std::vector<LatentBrdf> base;
    for (int k = 0; k < 4; ++k)
        base.push_back(random_latent(r));
    LatentTexture tex = make_texture(2, 2, base);
    build_mipmap(&tex);
    REQUIRE(tex.n_levels() == 2);
    CHECK(tex.level_width(1) == 1);
    for (int c = 0; c < kLatentDim; ++c) {
        float mean = 0;
        for (int k = 0; k < 4; ++k)
            mean += base[k].data[c];
        mean /= 4;
        CHECK(tex.texel(1, 0, 0).data[c] == doctest::Approx(mean).epsilon(1e-6));
    }
}

TEST_CASE("mipmap chain is mean-preserving, including odd sizes") {
    RngStream r(107, 0);
    for (auto [w, h] : {std::pair{4, 4}, std::pair{5, 3}, std::pair{7, 1}}) {
        std::vector<LatentBrdf> base;
        for (int k = 0; k < w * h; ++k)
            base.push_back(random_latent(r));
        LatentTexture tex = make_texture(w, h, base);
        build_mipmap(&tex);
        CHECK(tex.level_width(tex.n_levels() - 1) == 1);
        CHECK(tex.level_height(tex.n_levels() - 1) == 1);
        for (int l = 1; l < tex.n_levels(); ++l) {
            CHECK(tex.level_width(l) == (tex.level_width(l - 1) + 1) / 2);
            CHECK(tex.level_height(l) == (tex.level_height(l - 1) + 1) / 2);
        }
        for (int c = 0; c < kLatentDim; ++c) {
            double mean = 0;
            for (int k = 0; k < w * h; ++k)
                mean += base[k].data[c];
            mean /= w * h;
            CHECK(tex.texel(tex.n_levels() - 1, 0, 0).data[c] ==
                  doctest::Approx(mean).epsilon(1e-5));
        }
    }
}

TEST_CASE("texture sampling: texel centers and coarse footprints") {
    RngStream r(109, 0);
    int w = 4, h = 4;
    std::vector<LatentBrdf> base;
    for (int k = 0; k < w * h; ++k)
        base.push_back(random_latent(r));
    LatentTexture tex = make_texture(w, h, base);
    build_mipmap(&tex);

    // A sub-texel footprint at a texel center returns that texel.
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            LatentBrdf s =
                sample_texture(tex, (x + 0.5) / w, (y + 0.5) / h, 0.5);
            for (int c = 0; c < kLatentDim; ++c)
                CHECK(s.data[c] == doctest::Approx(tex.texel(0, x, y).data[c]).epsilon(1e-6));
        }

    // A footprint covering the whole texture returns the global mean.
    LatentBrdf coarse = sample_texture(tex, 0.5, 0.5, 64.0);
    for (int c = 0; c < kLatentDim; ++c) {
        double mean = 0;
        for (int k = 0; k < w * h; ++k)
            mean += base[k].data[c];
        mean /= w * h;
        CHECK(coarse.data[c] == doctest::Approx(mean).epsilon(1e-5));
    }

    // Bilinear blend halfway between two texels.
    LatentBrdf mid = sample_texture(tex, 2.0 / w, 0.5 / h, 0.5);
    for (int c = 0; c < kLatentDim; ++c)
        CHECK(mid.data[c] ==
              doctest::Approx(0.5 * tex.texel(0, 1, 0).data[c] +
                              0.5 * tex.texel(0, 2, 0).data[c])
                  .epsilon(1e-5));
}

TEST_CASE("texture files round-trip") {
    RngStream r(113, 0);
    std::vector<LatentBrdf> base;
    for (int k = 0; k < 6; ++k)
        base.push_back(random_latent(r, 3));
    LatentTexture tex = make_texture(3, 2, base);
    build_mipmap(&tex);
    std::string path = testutil::temp_path("tex.nblt");
    save_texture(path, tex);
    LatentTexture loaded = load_texture(path);
    CHECK(loaded.width == tex.width);
    CHECK(loaded.height == tex.height);
    CHECK(loaded.channels == tex.channels);
    REQUIRE(loaded.n_levels() == tex.n_levels());
    for (int l = 0; l < tex.n_levels(); ++l)
        for (size_t i = 0; i < tex.levels[l].size(); ++i)
            CHECK(loaded.levels[l][i].data == tex.levels[l][i].data);
    std::filesystem::remove(path);
}
