#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "nbrdf/data/dataset.hpp"

#include "helpers.hpp"

using namespace nbrdf;

namespace {

DatasetManifest tiny_manifest() {
    DatasetManifest m;
    m.n_conductor = 3;
    m.n_dielectric = 3;
    m.n_two_layer = 6;
    m.n_three_layer = 2;
    m.n_two_layer_val = 2;
    m.n_theta = 2;
    m.n_phi = 3;
    m.mc_paths = 32;
    m.seed = 12;
    return m;
}

} // namespace

TEST_CASE("parameter distributions stay in their documented ranges") {
    RngStream r(61, 0);
    std::set<double> sigmas;
    double alpha_min = 1, alpha_max = 0;
    for (int k = 0; k < 5000; ++k) {
        ConductorParams c = sample_conductor_params(r);
        CHECK(c.alpha >= 0.216 * 0.216 * 0.216);
        CHECK(c.alpha <= 1.0);
        CHECK(c.r0 >= 0.0);
        CHECK(c.r0 <= 1.0);
        alpha_min = std::min(alpha_min, c.alpha);
        alpha_max = std::max(alpha_max, c.alpha);
        DielectricParams d = sample_dielectric_params(r);
        CHECK(d.eta >= 1.05);
        CHECK(d.eta <= 2.0);
        MediumParams m = sample_medium_params(r);
        CHECK(m.albedo >= 0.0);
        CHECK(m.albedo <= 1.0);
        sigmas.insert(m.sigma_t);
    }
    // Cube-root-biased roughness spans most of the range.
    CHECK(alpha_min < 0.02);
    CHECK(alpha_max > 0.9);
    CHECK(sigmas == std::set<double>{0.0, 1.0, 2.0, 5.0});
}

TEST_CASE("medium albedo is biased toward one") {
    // albedo = 1 - u^2 has mean 2/3.
    RngStream r(67, 0);
    double sum = 0;
    int n = 100000;
    for (int k = 0; k < n; ++k)
        sum += sample_medium_params(r).albedo;
    CHECK(sum / n == doctest::Approx(2.0 / 3.0).epsilon(5e-3));
}

TEST_CASE("generated corpus has the declared layout") {
    auto m = tiny_manifest();
    std::string path = testutil::temp_path("tiny_layout.nbds");
    generate_dataset(m, path);
    Dataset ds = load_dataset(path);
    int total = m.n_conductor + m.n_dielectric + m.n_two_layer + m.n_three_layer;
    REQUIRE(static_cast<int>(ds.records.size()) == total);
    auto grid = ds.grid();
    size_t pairs = grid.size() * grid.size();
    for (int i = 0; i < total; ++i) {
        const auto &rec = ds.records[i];
        CHECK(rec.values.size() == pairs);
        for (float v : rec.values) {
            CHECK(std::isfinite(v));
            CHECK(v >= 0);
        }
        if (i < ds.dielectric_begin())
            CHECK(rec.kind == BrdfKind::Conductor);
        else if (i < ds.two_layer_begin())
            CHECK(rec.kind == BrdfKind::Dielectric);
        else if (i < ds.three_layer_begin())
            CHECK(rec.kind == BrdfKind::TwoLayer);
        else
            CHECK(rec.kind == BrdfKind::ThreeLayer);
    }
    // Layered records reference existing single-layer components.
    for (int i = ds.two_layer_begin(); i < ds.three_layer_begin(); ++i) {
        const auto &p = ds.records[i].params;
        REQUIRE(p.size() == 8);
        int ti = static_cast<int>(p[6]), bi = static_cast<int>(p[7]);
        CHECK(p[0] == ds.records[ds.dielectric_begin() + ti].params[0]);
        CHECK(p[2] == ds.records[ds.conductor_begin() + bi].params[0]);
    }
    // Analytic records are tabulated exactly.
    const auto &c0 = ds.records[0];
    ConductorParams cp{c0.params[0], c0.params[1]};
    for (size_t i = 0; i < grid.size(); ++i)
        for (size_t o = 0; o < grid.size(); ++o)
            CHECK(c0.values[i * grid.size() + o] ==
                  static_cast<float>(eval_conductor(cp, grid[i], grid[o])));
    std::filesystem::remove(path);
}

TEST_CASE("dataset generation is bitwise deterministic") {
    auto m = tiny_manifest();
    std::string p1 = testutil::temp_path("det_a.nbds"), p2 = testutil::temp_path("det_b.nbds");
    generate_dataset(m, p1);
    generate_dataset(m, p2);
    std::ifstream a(p1, std::ios::binary), b(p2, std::ios::binary);
    std::string sa((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
    std::string sb((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
    CHECK(sa == sb);
    CHECK(!sa.empty());
    std::filesystem::remove(p1);
    std::filesystem::remove(p2);
}

TEST_CASE("save/load round-trips and rejects malformed files") {
    auto m = tiny_manifest();
    std::string path = testutil::temp_path("roundtrip.nbds");
    generate_dataset(m, path);
    Dataset ds = load_dataset(path);
    std::string copy = testutil::temp_path("roundtrip2.nbds");
    save_dataset(ds, copy);
    Dataset ds2 = load_dataset(copy);
    REQUIRE(ds2.records.size() == ds.records.size());
    for (size_t i = 0; i < ds.records.size(); ++i) {
        CHECK(ds2.records[i].params == ds.records[i].params);
        CHECK(ds2.records[i].values == ds.records[i].values);
    }

    std::string bad = testutil::temp_path("bad.nbds");
    {
        std::ofstream f(bad, std::ios::binary);
        f << "XXXX garbage";
    }
    CHECK_THROWS_AS(load_dataset(bad), FormatError);

    // Truncate a valid file.
    std::string trunc = testutil::temp_path("trunc.nbds");
    {
        std::ifstream in(path, std::ios::binary);
        std::string all((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        std::ofstream out(trunc, std::ios::binary);
        out.write(all.data(), static_cast<long>(all.size() / 2));
    }
    CHECK_THROWS_AS(load_dataset(trunc), TruncatedFile);

    for (const auto &p : {path, copy, bad, trunc})
        std::filesystem::remove(p);
}

TEST_CASE("batch iterator visits every tuple exactly once per epoch") {
    auto m = tiny_manifest();
    std::string path = testutil::temp_path("iter.nbds");
    generate_dataset(m, path);
    Dataset ds = load_dataset(path);
    std::vector<int> recs{ds.two_layer_begin(), ds.two_layer_begin() + 1,
                          ds.two_layer_begin() + 2};
    BatchIterator it(ds, recs, 7, 5);
    auto grid = ds.grid();
    size_t pairs = grid.size() * grid.size();
    std::set<std::pair<int, int>> seen;
    SampleBatch batch;
    size_t count = 0;
    while (it.next(&batch)) {
        CHECK(batch.size() <= 7);
        for (size_t k = 0; k < batch.size(); ++k) {
            int rec = batch.record[k];
            // Recover the pair index from the direction pointers.
            int iw = -1, ow = -1;
            for (size_t g = 0; g < grid.size(); ++g) {
                if ((grid[g] - batch.wi[k]).length() < 1e-12)
                    iw = static_cast<int>(g);
                if ((grid[g] - batch.wo[k]).length() < 1e-12)
                    ow = static_cast<int>(g);
            }
            REQUIRE(iw >= 0);
            REQUIRE(ow >= 0);
            int pair = iw * static_cast<int>(grid.size()) + ow;
            CHECK(batch.value[k] == ds.records[rec].values[pair]);
            seen.insert({rec, pair});
            ++count;
        }
    }
    CHECK(count == recs.size() * pairs);
    CHECK(seen.size() == count); // no duplicates

    // Same shuffle seed reproduces the same order.
    BatchIterator it2(ds, recs, 7, 5);
    it.reset(5);
    SampleBatch b1, b2;
    it.next(&b1);
    it2.next(&b2);
    CHECK(b1.record == b2.record);
    CHECK(b1.value == b2.value);
    std::filesystem::remove(path);
}
