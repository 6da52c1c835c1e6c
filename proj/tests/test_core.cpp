#include <doctest.h>

#include <cmath>
#include <set>

#include "nbrdf/core/rng.hpp"
#include "nbrdf/core/spherical.hpp"

#include "helpers.hpp"

using namespace nbrdf;

TEST_CASE("rng streams are deterministic and decorrelated") {
    RngStream a(42, 7), b(42, 7), c(42, 8);
    bool all_equal = true, any_diff = false;
    for (int i = 0; i < 1000; ++i) {
        uint32_t x = a.next_u32(), y = b.next_u32(), z = c.next_u32();
        all_equal = all_equal && (x == y);
        any_diff = any_diff || (x != z);
    }
    CHECK(all_equal);
    CHECK(any_diff);
}

TEST_CASE("rng output ranges") {
    RngStream r(1, 1);
    for (int i = 0; i < 10000; ++i) {
        double d = r.next_double();
        CHECK(d >= 0.0);
        CHECK(d < 1.0);
        uint32_t n = r.next_below(17);
        CHECK(n < 17);
    }
}

TEST_CASE("rng next_below covers all buckets") {
    RngStream r(3, 0);
    std::set<uint32_t> seen;
    for (int i = 0; i < 1000; ++i)
        seen.insert(r.next_below(8));
    CHECK(seen.size() == 8);
}

TEST_CASE("spherical_to_dir produces unit vectors with z = cos(theta)") {
    RngStream r(5, 0);
    for (int i = 0; i < 100; ++i) {
        double theta = r.next_double() * kPi / 2, phi = r.next_double() * kTwoPi;
        Direction d = spherical_to_dir(theta, phi);
        CHECK(d.length() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(d.z == doctest::Approx(std::cos(theta)).epsilon(1e-12));
    }
}

TEST_CASE("half_vector is the normalized sum and symmetric") {
    Direction wi = spherical_to_dir(0.4, 1.0), wo = spherical_to_dir(1.1, 2.5);
    Direction h = half_vector(wi, wo);
    CHECK(h.length() == doctest::Approx(1.0).epsilon(1e-12));
    Direction h2 = half_vector(wo, wi);
    CHECK(dot(h, h2) == doctest::Approx(1.0).epsilon(1e-12));
    // Equal angles to both arguments.
    CHECK(dot(h, wi) == doctest::Approx(dot(h, wo)).epsilon(1e-12));
    CHECK_THROWS_AS(half_vector(wi, -wi), DegenerateHalfVector);
}

TEST_CASE("reflect is an involution preserving length") {
    Direction h = spherical_to_dir(0.3, 0.7);
    Direction w = spherical_to_dir(0.9, 4.0);
    Direction r = reflect(w, h);
    CHECK(r.length() == doctest::Approx(1.0).epsilon(1e-12));
    Direction back = reflect(r, h);
    CHECK((back - w).length() == doctest::Approx(0.0).epsilon(1e-12));
    // Mirror about the normal: equal cosines with h.
    CHECK(dot(r, h) == doctest::Approx(dot(w, h)).epsilon(1e-12));
}

TEST_CASE("half_angle_jacobian matches a numeric solid-angle ratio") {
    // Perturb h by a small solid angle patch and measure the induced wo patch.
    Direction wi = spherical_to_dir(0.5, 0.0);
    Direction h = spherical_to_dir(0.3, 1.2);
    Direction wo = reflect(wi, h);
    double analytic = half_angle_jacobian(wo, h);
    double eps = 1e-5;
    Frame f(h);
    Direction h1 = normalize(f.to_world({eps, 0, std::sqrt(1 - eps * eps)}));
    Direction h2 = normalize(f.to_world({0, eps, std::sqrt(1 - eps * eps)}));
    Direction wo1 = reflect(wi, h1), wo2 = reflect(wi, h2);
    double area_h = cross(h1 - h, h2 - h).length();
    double area_o = cross(wo1 - wo, wo2 - wo).length();
    CHECK(analytic == doctest::Approx(area_h / area_o).epsilon(1e-3));
}

TEST_CASE("refract obeys Snell's law and reports TIR") {
    Direction h{0, 0, 1};
    Direction w = spherical_to_dir(0.8, 0.0);
    double eta = 1.0 / 1.5; // into the denser medium
    Direction wt;
    REQUIRE(refract(w, h, eta, &wt));
    CHECK(wt.length() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(wt.z < 0); // transmitted side
    double sin_i = std::sqrt(1 - w.z * w.z), sin_t = std::sqrt(1 - wt.z * wt.z);
    CHECK(sin_t == doctest::Approx(sin_i * eta).epsilon(1e-12));
    // From inside the denser medium beyond the critical angle: TIR.
    Direction grazing = spherical_to_dir(1.4, 0.0);
    CHECK_FALSE(refract(grazing, h, 1.5, &wt));
}

TEST_CASE("stratified grid covers every stratum, theta-major") {
    int nt = 4, np = 6;
    auto grid = stratified_hemisphere_grid(nt, np);
    REQUIRE(grid.size() == static_cast<size_t>(nt * np));
    for (int i = 0; i < nt; ++i)
        for (int j = 0; j < np; ++j) {
            const Direction &d = grid[i * np + j];
            CHECK(d.length() == doctest::Approx(1.0).epsilon(1e-12));
            double theta = std::acos(d.z);
            double phi = std::atan2(d.y, d.x);
            if (phi < 0)
                phi += kTwoPi;
            // Stratum centers.
            CHECK(theta == doctest::Approx((i + 0.5) * (kPi / 2) / nt).epsilon(1e-9));
            CHECK(phi == doctest::Approx((j + 0.5) * kTwoPi / np).epsilon(1e-9));
        }
}

TEST_CASE("hemisphere sampling moments") {
    RngStream r(11, 0);
    int n = 200000;
    double sum_cos = 0, sum_cos_u = 0, sum_z_s = 0;
    for (int i = 0; i < n; ++i) {
        sum_cos += cosine_sample_hemisphere(r).z;
        sum_cos_u += uniform_sample_hemisphere(r).z;
        sum_z_s += uniform_sample_sphere(r).z;
    }
    double se = 1.0 / std::sqrt(double(n)); // conservative bound on stderr
    CHECK(std::abs(sum_cos / n - 2.0 / 3.0) < 3 * se);
    CHECK(std::abs(sum_cos_u / n - 0.5) < 3 * se);
    CHECK(std::abs(sum_z_s / n) < 3 * se);
}

TEST_CASE("cosine hemisphere sampling matches its pdf (chi-square)") {
    RngStream r(13, 0);
    int bins = 20, n = 200000;
    std::vector<double> obs(bins, 0), expd(bins, 0);
    for (int i = 0; i < n; ++i) {
        double z = cosine_sample_hemisphere(r).z;
        int b = std::min(bins - 1, static_cast<int>(z * z * bins)); // cdf = z^2
        obs[b] += 1;
    }
    for (int b = 0; b < bins; ++b)
        expd[b] = double(n) / bins;
    auto cs = testutil::chi_square(obs, expd);
    CHECK(cs.p > 0.01);
}

TEST_CASE("frame is orthonormal and invertible") {
    RngStream r(17, 0);
    for (int i = 0; i < 50; ++i) {
        Direction n = uniform_sample_sphere(r);
        Frame f(n);
        CHECK(std::abs(dot(f.t, f.b)) < 1e-12);
        CHECK(std::abs(dot(f.t, f.n)) < 1e-12);
        CHECK(std::abs(dot(f.b, f.n)) < 1e-12);
        CHECK(f.t.length() == doctest::Approx(1.0).epsilon(1e-12));
        Vec3 v = uniform_sample_sphere(r) * 2.5;
        Vec3 round = f.to_world(f.to_local(v));
        CHECK((round - v).length() < 1e-12);
        CHECK((f.to_world({0, 0, 1}) - n).length() < 1e-12);
    }
}
