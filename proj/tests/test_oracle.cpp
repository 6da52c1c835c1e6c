#include <doctest.h>

#include <cmath>

#include "nbrdf/layered/oracle.hpp"

using namespace nbrdf;

TEST_CASE("index-matched clear stack reduces exactly to the bare conductor") {
    // eta = 1 and sigma_t = 0 make every walk contribute the conductor value
    // deterministically, so the estimate matches to machine precision.
    RngStream prng(51, 0);
    for (int k = 0; k < 5; ++k) {
        LayerStack st;
        st.top = {0.1 + 0.8 * prng.next_double(), 1.0};
        st.medium = {prng.next_double(), 0.0};
        st.bottom_conductor = {0.1 + 0.8 * prng.next_double(), prng.next_double()};
        Direction wi = spherical_to_dir(0.2 + 1.1 * prng.next_double(), 0.3);
        Direction wo = spherical_to_dir(0.2 + 1.1 * prng.next_double(), 2.9);
        auto est = eval_layered(st, wi, wo, 500, RngStream(60 + k, 1));
        CHECK(est.value ==
              doctest::Approx(eval_conductor(st.bottom_conductor, wi, wo)).epsilon(1e-10));
        CHECK(est.stderr_ < 1e-12);
    }
}

TEST_CASE("nee estimate agrees with full-walk throughput in total energy") {
    // Both the next-event estimator (integrated over wo) and the exit
    // throughput of full walks estimate the directional albedo.
    RngStream prng(53, 0);
    for (int k = 0; k < 2; ++k) {
        LayerStack st;
        st.top = {0.2 + 0.6 * prng.next_double(), 1.2 + 0.6 * prng.next_double()};
        st.medium = {1.0, 3.0 * prng.next_double()};
        st.bottom_conductor = {0.2 + 0.6 * prng.next_double(), 1.0};
        Direction wi = spherical_to_dir(0.3 + 0.8 * prng.next_double(), 1.0);
        RngStream r2(70 + k, 9);
        auto nee = directional_albedo(
            [&](const Direction &a, const Direction &b) {
                return eval_layered(st, a, b, 32, RngStream(r2.next_u32(), 3)).value;
            },
            wi, 8000, r2);
        RngStream rw(80 + k, 2);
        double sum = 0, sum2 = 0;
        long n = 50000;
        for (long i = 0; i < n; ++i) {
            double t = sample_layered(st, wi, rw).throughput;
            sum += t;
            sum2 += t * t;
        }
        double mean = sum / n;
        double sd = std::sqrt(std::max(0.0, sum2 / n - mean * mean) / n);
        double z = std::abs(nee.value - mean) /
                   std::sqrt(nee.stderr_ * nee.stderr_ + sd * sd);
        CHECK(z < 4.0);
    }
}

TEST_CASE("oracle is reciprocal within noise") {
    RngStream prng(99, 0);
    for (int k = 0; k < 3; ++k) {
        LayerStack st;
        st.top = {0.1 + 0.8 * prng.next_double(), 1.1 + 0.8 * prng.next_double()};
        st.medium = {prng.next_double(), 5.0 * prng.next_double()};
        st.bottom_conductor = {0.1 + 0.8 * prng.next_double(), prng.next_double()};
        double ti = 0.15 + 1.2 * prng.next_double(), pi_ = 6.28 * prng.next_double();
        double to = 0.15 + 1.2 * prng.next_double(), po = 6.28 * prng.next_double();
        Direction wi = spherical_to_dir(ti, pi_), wo = spherical_to_dir(to, po);
        auto a = eval_layered(st, wi, wo, 80000, RngStream(1000 + k, 1));
        auto b = eval_layered(st, wo, wi, 80000, RngStream(2000 + k, 2));
        double sd = std::sqrt(a.stderr_ * a.stderr_ + b.stderr_ * b.stderr_);
        CHECK(std::abs(a.value - b.value) < 4 * sd);
    }
}

TEST_CASE("lossless stacks never gain energy") {
    RngStream prng(5, 0);
    for (int k = 0; k < 3; ++k) {
        LayerStack st;
        st.top = {0.1 + 0.8 * prng.next_double(), 1.1 + 0.8 * prng.next_double()};
        st.medium = {1.0, 5.0 * prng.next_double()};
        st.bottom_conductor = {0.1 + 0.8 * prng.next_double(), 1.0};
        Direction wi = spherical_to_dir(0.2 + 1.1 * prng.next_double(), 1.0);
        RngStream r(400 + k, 2);
        double sum = 0, sum2 = 0;
        long n = 50000;
        for (long i = 0; i < n; ++i) {
            double t = sample_layered(st, wi, r).throughput;
            sum += t;
            sum2 += t * t;
        }
        double mean = sum / n;
        double sd = std::sqrt(std::max(0.0, sum2 / n - mean * mean) / n);
        CHECK(mean <= 1.0 + 3 * sd);
    }
}

TEST_CASE("nested stack with a transparent inner interface matches two layers") {
    // Three-layer stack whose inner dielectric is index-matched with an empty
    // medium is physically the same material as the flat two-layer stack.
    LayerStack two;
    two.top = {0.3, 1.5};
    two.medium = {0.8, 1.0};
    two.bottom_conductor = {0.4, 0.9};

    LayerStack three;
    three.top = {0.3, 1.5};
    three.medium = {0.8, 1.0};
    auto nested = std::make_shared<LayerStack>();
    nested->top = {0.5, 1.0}; // index-matched: invisible
    nested->medium = {1.0, 0.0};
    nested->bottom_conductor = {0.4, 0.9};
    three.bottom_stack = nested;

    Direction wi = spherical_to_dir(0.5, 0.0), wo = spherical_to_dir(0.9, 2.0);
    auto a = eval_layered(two, wi, wo, 150000, RngStream(7, 1));
    auto b = eval_layered(three, wi, wo, 150000, RngStream(8, 2));
    double sd = std::sqrt(a.stderr_ * a.stderr_ + b.stderr_ * b.stderr_);
    CHECK(std::abs(a.value - b.value) < 4 * sd);
}

TEST_CASE("tabulation is deterministic and rejects bad directions") {
    LayerStack st;
    st.top = {0.3, 1.5};
    st.medium = {0.8, 2.0};
    st.bottom_conductor = {0.4, 0.9};
    auto grid = stratified_hemisphere_grid(2, 3);
    auto t1 = tabulate_layered(st, grid, 64, 99);
    auto t2 = tabulate_layered(st, grid, 64, 99);
    CHECK(t1 == t2);
    CHECK(t1.size() == grid.size() * grid.size());
    for (float v : t1)
        CHECK(v >= 0);
    CHECK_THROWS_AS(eval_layered(st, {0, 0, -1}, {0, 0, 1}, 8, RngStream(1, 1)),
                    InvalidDirection);
}
