#include <doctest.h>

#include <cmath>

#include "nbrdf/neural/sampler.hpp"

#include "helpers.hpp"

using namespace nbrdf;

namespace {

// Midpoint quadrature of proxy_pdf over the upper hemisphere.
double pdf_integral(const ProxyParams &p, const Direction &wi, int n_ct = 512, int n_phi = 512) {
    double sum = 0;
    for (int i = 0; i < n_ct; ++i) {
        double ct = (i + 0.5) / n_ct;
        double st = std::sqrt(1 - ct * ct);
        for (int j = 0; j < n_phi; ++j) {
            double phi = (j + 0.5) * kTwoPi / n_phi;
            sum += proxy_pdf(p, wi, {st * std::cos(phi), st * std::sin(phi), ct});
        }
    }
    return sum * (1.0 / n_ct) * (kTwoPi / n_phi);
}

} // namespace

TEST_CASE("proxy pdf is normalized for moderate widths") {
    Direction wi = spherical_to_dir(kPi / 6, 0.0);
    for (double sigma : {0.03, 0.08, 0.15}) {
        for (double w : {0.1, 0.5, 0.9}) {
            double I = pdf_integral({sigma, w}, wi);
            CHECK(I == doctest::Approx(1.0).epsilon(1.5e-2));
        }
    }
}

TEST_CASE("proxy pdf gradients match finite differences") {
    RngStream r(91, 0);
    for (int k = 0; k < 200; ++k) {
        ProxyParams p{0.03 + 0.25 * r.next_double(), 0.05 + 0.9 * r.next_double()};
        Direction wi = uniform_sample_hemisphere(r);
        Direction wo = uniform_sample_hemisphere(r);
        double ds, dw;
        proxy_pdf_grad(p, wi, wo, &ds, &dw);
        double h = 1e-6;
        double fd_s = (proxy_pdf({p.sigma + h, p.w}, wi, wo) -
                       proxy_pdf({p.sigma - h, p.w}, wi, wo)) / (2 * h);
        double fd_w = (proxy_pdf({p.sigma, p.w + h}, wi, wo) -
                       proxy_pdf({p.sigma, p.w - h}, wi, wo)) / (2 * h);
        CHECK(ds == doctest::Approx(fd_s).epsilon(1e-4));
        CHECK(dw == doctest::Approx(fd_w).epsilon(1e-4));
    }
}

TEST_CASE("proxy sampling matches the reported pdf (chi-square)") {
    for (auto [sigma, w] : {std::pair{0.06, 0.3}, std::pair{0.1, 0.7}}) {
        ProxyParams p{sigma, w};
        Direction wi = spherical_to_dir(kPi / 6, 0.0);
        const int nb_ct = 16, nb_phi = 16, n = 200000;
        std::vector<double> obs(nb_ct * nb_phi, 0), expd(nb_ct * nb_phi, 0);
        RngStream r(93, 0);
        for (int k = 0; k < n; ++k) {
            ProxySample s = sample_proxy(p, wi, r);
            int bi = std::min(nb_ct - 1, static_cast<int>(s.wo.z * nb_ct));
            double phi = std::atan2(s.wo.y, s.wo.x);
            if (phi < 0)
                phi += kTwoPi;
            int bj = std::min(nb_phi - 1, static_cast<int>(phi / kTwoPi * nb_phi));
            obs[bi * nb_phi + bj] += 1;
            // The sampler must report the analytic density for its own draws.
            CHECK(s.pdf == doctest::Approx(proxy_pdf(p, wi, s.wo)).epsilon(1e-12));
        }
        const int sub = 8;
        for (int bi = 0; bi < nb_ct; ++bi)
            for (int bj = 0; bj < nb_phi; ++bj) {
                double mass = 0;
                for (int si = 0; si < sub; ++si)
                    for (int sj = 0; sj < sub; ++sj) {
                        double ct = (bi + (si + 0.5) / sub) / nb_ct;
                        double phi = (bj + (sj + 0.5) / sub) / nb_phi * kTwoPi;
                        double st = std::sqrt(1 - ct * ct);
                        mass += proxy_pdf(p, wi,
                                          {st * std::cos(phi), st * std::sin(phi), ct});
                    }
                expd[bi * nb_phi + bj] =
                    mass * (1.0 / nb_ct) * (kTwoPi / nb_phi) / (sub * sub) * n;
            }
        auto cs = testutil::chi_square(obs, expd);
        CHECK(cs.p > 0.01);
    }
}

TEST_CASE("gndf of a constant brdf is rotationally symmetric and normalized") {
    // Incoming-direction strata are chosen coprime with the outgoing grid so
    // that no half vector lands exactly on a histogram bin boundary.
    auto gndf = compute_gndf(
        [](const Direction &, const Direction &) { return 1.0; }, 24, 7, 8);
    double sum = 0;
    for (double v : gndf.grid)
        sum += v;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    // Quarter-turn symmetry of the (hx, hy) table.
    int R = gndf.resolution;
    for (int iy = 0; iy < R; ++iy)
        for (int ix = 0; ix < R; ++ix) {
            double a = gndf.at(ix, iy);
            double b = gndf.at(R - 1 - ix, iy);
            double c = gndf.at(ix, R - 1 - iy);
            CHECK(a == doctest::Approx(b).epsilon(1e-6));
            CHECK(a == doctest::Approx(c).epsilon(1e-6));
        }
}

TEST_CASE("gndf of a sharp specular brdf concentrates at the center") {
    ConductorParams p{0.02, 1.0};
    auto gndf = compute_gndf(
        [p](const Direction &a, const Direction &b) { return eval_conductor(p, a, b); }, 40, 8, 8);
    int R = gndf.resolution;
    double central = 0;
    for (int iy = 0; iy < R; ++iy)
        for (int ix = 0; ix < R; ++ix) {
            double hx = (ix + 0.5) / R * 2 - 1, hy = (iy + 0.5) / R * 2 - 1;
            if (hx * hx + hy * hy < 0.09)
                central += gndf.at(ix, iy);
        }
    CHECK(central > 0.9);
}

TEST_CASE("gndf rejects an all-zero brdf") {
    CHECK_THROWS_AS(
        compute_gndf([](const Direction &, const Direction &) { return 0.0; }, 16, 4, 4),
        AllZeroGndf);
}

TEST_CASE("batched and scalar gndf agree for a decoder") {
    // Init seed chosen so the raw decoder output is positive over the grid.
    Decoder dec{build_decoder(), nn::init_weights<float>(build_decoder(), 1)};
    LatentBrdf lat(1);
    auto scalar = compute_gndf(
        [&](const Direction &a, const Direction &b) { return eval_brdf(dec, lat, a, b)[0]; },
        16, 4, 4);
    auto batched = compute_gndf(dec, lat.channel(0), 16, 4, 4);
    REQUIRE(scalar.grid.size() == batched.grid.size());
    for (size_t i = 0; i < scalar.grid.size(); ++i)
        CHECK(scalar.grid[i] == doctest::Approx(batched.grid[i]).epsilon(1e-4));
}

TEST_CASE("sampler training runs and fit_params is deterministic") {
    ConductorParams glossy{0.1, 1.0}, rough{0.8, 1.0};
    std::vector<SamplerTrainItem> items(2);
    RngStream r(97, 0);
    for (auto &v : items[0].latent = std::vector<float>(kLatentDim))
        v = r.next_float();
    for (auto &v : items[1].latent = std::vector<float>(kLatentDim))
        v = r.next_float();
    items[0].gndf = compute_gndf(
        [&](const Direction &a, const Direction &b) { return eval_conductor(glossy, a, b); },
        40, 8, 8);
    items[1].gndf = compute_gndf(
        [&](const Direction &a, const Direction &b) { return eval_conductor(rough, a, b); },
        40, 8, 8);
    SamplerTrainConfig cfg;
    cfg.epochs = 2;
    cfg.n_wi_theta = 4;
    cfg.n_wi_phi = 4;
    auto res = train_sampler(items, cfg);
    REQUIRE(res.loss.size() == 2);
    for (double l : res.loss)
        CHECK(std::isfinite(l));

    ProxyParams p1 = fit_params(res.net, items[0].latent.data());
    ProxyParams p2 = fit_params(res.net, items[0].latent.data());
    CHECK(p1.sigma == p2.sigma);
    CHECK(p1.w == p2.w);
    CHECK(p1.sigma > 0);
    CHECK(p1.w >= 0);
    CHECK(p1.w <= 1);

    auto res2 = train_sampler(items, cfg);
    CHECK(res.loss == res2.loss);
    for (size_t i = 0; i < res.net.weights.params.size(); ++i)
        CHECK(res.net.weights.params[i].data == res2.net.weights.params[i].data);
}
