#include <doctest.h>

#include <cmath>

#include "nbrdf/brdf/microfacet.hpp"

#include "helpers.hpp"

using namespace nbrdf;

namespace {

// Midpoint quadrature over the upper hemisphere in (cos(theta), phi).
template <typename F> double hemisphere_integral(const F &fn, int n_ct = 400, int n_phi = 400) {
    double sum = 0;
    for (int i = 0; i < n_ct; ++i) {
        double ct = (i + 0.5) / n_ct;
        double st = std::sqrt(1.0 - ct * ct);
        for (int j = 0; j < n_phi; ++j) {
            double phi = (j + 0.5) * kTwoPi / n_phi;
            sum += fn(Direction{st * std::cos(phi), st * std::sin(phi), ct});
        }
    }
    return sum * (1.0 / n_ct) * (kTwoPi / n_phi);
}

} // namespace

TEST_CASE("ggx ndf integrates to one against the projected area") {
    // Quadrature in theta resolves the narrow peak at small roughness.
    for (double alpha : {0.1, 0.5, 1.0}) {
        const int n = 8192;
        double sum = 0;
        for (int i = 0; i < n; ++i) {
            double theta = (i + 0.5) * (kPi / 2) / n;
            sum += ggx_ndf(std::cos(theta), alpha) * std::cos(theta) * std::sin(theta);
        }
        double integral = sum * (kPi / 2) / n * kTwoPi;
        CHECK(integral == doctest::Approx(1.0).epsilon(1e-4));
    }
}

TEST_CASE("smith g1 bounds and limits") {
    for (double alpha : {0.05, 0.3, 0.9}) {
        for (double theta : {0.01, 0.5, 1.0, 1.4}) {
            double g = smith_g1(spherical_to_dir(theta, 0), alpha);
            CHECK(g > 0);
            CHECK(g <= 1.0);
        }
        CHECK(smith_g1({0, 0, 1}, alpha) == doctest::Approx(1.0));
    }
    // Rougher surfaces shadow more.
    Direction grazing = spherical_to_dir(1.3, 0);
    CHECK(smith_g1(grazing, 0.8) < smith_g1(grazing, 0.1));
}

TEST_CASE("fresnel limits") {
    CHECK(fresnel_schlick(1.0, 0.04) == doctest::Approx(0.04));
    CHECK(fresnel_schlick(0.0, 0.04) == doctest::Approx(1.0));
    double eta = 1.5;
    double r_normal = (eta - 1) * (eta - 1) / ((eta + 1) * (eta + 1));
    CHECK(fresnel_dielectric(1.0, eta) == doctest::Approx(r_normal).epsilon(1e-12));
    CHECK(fresnel_dielectric(0.0, eta) == doctest::Approx(1.0));
    // TIR from inside the denser medium.
    CHECK(fresnel_dielectric(0.2, 1.0 / 1.5) == doctest::Approx(1.0));
}

TEST_CASE("brdf evaluation is reciprocal and hemisphere-clamped") {
    RngStream r(23, 0);
    for (int k = 0; k < 50; ++k) {
        ConductorParams c{0.05 + 0.9 * r.next_double(), r.next_double()};
        DielectricParams d{0.05 + 0.9 * r.next_double(), 1.05 + 0.9 * r.next_double()};
        Direction wi = uniform_sample_hemisphere(r), wo = uniform_sample_hemisphere(r);
        CHECK(eval_conductor(c, wi, wo) ==
              doctest::Approx(eval_conductor(c, wo, wi)).epsilon(1e-10));
        CHECK(eval_dielectric_reflect(d, wi, wo) ==
              doctest::Approx(eval_dielectric_reflect(d, wo, wi)).epsilon(1e-10));
        CHECK(eval_conductor(c, wi, {wo.x, wo.y, -wo.z}) == 0.0);
    }
}

TEST_CASE("conductor sample weight equals f cos over pdf") {
    RngStream r(29, 0);
    ConductorParams p{0.35, 0.8};
    Direction wi = spherical_to_dir(0.6, 0.2);
    int checked = 0;
    for (int k = 0; k < 500; ++k) {
        MicrofacetSample s = sample_microfacet(p, wi, r);
        if (s.weight <= 0 || s.wo.z <= 1e-6)
            continue;
        double f = eval_conductor(p, wi, s.wo);
        CHECK(s.weight == doctest::Approx(f * s.wo.z / s.pdf).epsilon(1e-9));
        CHECK(s.pdf == doctest::Approx(pdf_microfacet_reflect(p.alpha, wi, s.wo)).epsilon(1e-9));
        ++checked;
    }
    CHECK(checked > 300);
}

TEST_CASE("conductor sampling matches its pdf (chi-square)") {
    ConductorParams p{0.5, 1.0};
    Direction wi = spherical_to_dir(kPi / 6, 0.0);
    const int nb_ct = 16, nb_phi = 16, n = 200000;
    std::vector<double> obs(nb_ct * nb_phi, 0), expd(nb_ct * nb_phi, 0);
    RngStream r(31, 0);
    long valid = 0;
    for (int k = 0; k < n; ++k) {
        MicrofacetSample s = sample_microfacet(p, wi, r);
        if (s.weight <= 0 || s.wo.z <= 0)
            continue;
        int bi = std::min(nb_ct - 1, static_cast<int>(s.wo.z * nb_ct));
        double phi = std::atan2(s.wo.y, s.wo.x);
        if (phi < 0)
            phi += kTwoPi;
        int bj = std::min(nb_phi - 1, static_cast<int>(phi / kTwoPi * nb_phi));
        obs[bi * nb_phi + bj] += 1;
        ++valid;
    }
    // Expected mass per bin by sub-quadrature of the sampling pdf.
    const int sub = 8;
    double total = 0;
    for (int bi = 0; bi < nb_ct; ++bi)
        for (int bj = 0; bj < nb_phi; ++bj) {
            double mass = 0;
            for (int si = 0; si < sub; ++si)
                for (int sj = 0; sj < sub; ++sj) {
                    double ct = (bi + (si + 0.5) / sub) / nb_ct;
                    double phi = (bj + (sj + 0.5) / sub) / nb_phi * kTwoPi;
                    double st = std::sqrt(1 - ct * ct);
                    Direction wo{st * std::cos(phi), st * std::sin(phi), ct};
                    mass += pdf_microfacet_reflect(p.alpha, wi, wo);
                }
            mass *= (1.0 / nb_ct) * (kTwoPi / nb_phi) / (sub * sub);
            expd[bi * nb_phi + bj] = mass;
            total += mass;
        }
    for (auto &e : expd)
        e *= valid / total; // condition on landing in the upper hemisphere
    auto cs = testutil::chi_square(obs, expd);
    CHECK(cs.p > 0.01);
}

TEST_CASE("directional albedo of a perfect reflector stays below one") {
    RngStream r(37, 0);
    for (double alpha : {0.1, 0.4, 0.9}) {
        ConductorParams p{alpha, 1.0};
        Direction wi = spherical_to_dir(0.7, 0.0);
        auto est = directional_albedo(
            [&](const Direction &a, const Direction &b) { return eval_conductor(p, a, b); }, wi,
            100000, r);
        CHECK(est.value <= 1.0 + 3 * est.stderr_);
        CHECK(est.value > 0.3); // and not degenerate
    }
}

TEST_CASE("dielectric sampling conserves energy in expectation") {
    RngStream r(41, 0);
    DielectricParams p{0.4, 1.5};
    Direction wi = spherical_to_dir(0.8, 0.0);
    double sum = 0;
    int n = 50000;
    for (int k = 0; k < n; ++k)
        sum += sample_microfacet(p, wi, r, p.eta).weight;
    CHECK(sum / n <= 1.0 + 0.01);
    CHECK(sum / n > 0.5);
}

TEST_CASE("index-matched dielectric transmits straight through") {
    RngStream r(43, 0);
    DielectricParams p{0.7, 1.0};
    Direction wi = spherical_to_dir(1.0, 0.4);
    for (int k = 0; k < 100; ++k) {
        MicrofacetSample s = sample_microfacet(p, wi, r, 1.0);
        CHECK(s.event == MicrofacetEvent::Transmit);
        CHECK(s.weight == doctest::Approx(1.0));
        CHECK((s.wo + wi).length() < 1e-12);
    }
}
