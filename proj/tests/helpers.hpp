#pragma once

// Shared statistical and numerical helpers for the test binaries.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "nbrdf/core/rng.hpp"
#include "nbrdf/nn/graph.hpp"

namespace testutil {

// Regularized incomplete gamma functions (series / continued fraction),
// good to ~1e-12 for the chi-square tail probabilities we need.
inline double gamma_p_series(double a, double x) {
    double sum = 1.0 / a, term = sum;
    for (int n = 1; n < 500; ++n) {
        term *= x / (a + n);
        sum += term;
        if (std::abs(term) < std::abs(sum) * 1e-15)
            break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

inline double gamma_q_contfrac(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
    for (int i = 1; i < 500; ++i) {
        double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-15)
            break;
    }
    return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Survival function of the chi-square distribution, P(X > stat).
inline double chi2_sf(double stat, double dof) {
    if (stat <= 0)
        return 1.0;
    double a = 0.5 * dof, x = 0.5 * stat;
    return (x < a + 1.0) ? 1.0 - gamma_p_series(a, x) : gamma_q_contfrac(a, x);
}

struct ChiSquare {
    double stat = 0;
    int dof = 0;
    double p = 1;
};

// Pearson chi-square of observed counts vs expected counts; bins with
// expected count below `min_expected` are pooled into one.
inline ChiSquare chi_square(const std::vector<double> &obs, const std::vector<double> &expd,
                            double min_expected = 5.0) {
    ChiSquare r;
    double pool_obs = 0, pool_exp = 0;
    int kept = 0;
    for (size_t i = 0; i < obs.size(); ++i) {
        if (expd[i] < min_expected) {
            pool_obs += obs[i];
            pool_exp += expd[i];
            continue;
        }
        double d = obs[i] - expd[i];
        r.stat += d * d / expd[i];
        ++kept;
    }
    if (pool_exp >= min_expected) {
        double d = pool_obs - pool_exp;
        r.stat += d * d / pool_exp;
        ++kept;
    }
    r.dof = kept - 1;
    r.p = r.dof > 0 ? chi2_sf(r.stat, r.dof) : 1.0;
    return r;
}

// 64-bit finite-difference gradient check of a graph: analytic backward
// gradients of a random linear functional of the output vs central
// differences, over (a sample of) parameter entries plus the input.
struct GradCheck {
    double max_rel_err = 0;
    size_t checked = 0;
};

inline GradCheck grad_check(const nbrdf::nn::MlpGraph &g, uint64_t seed, int batch,
                            size_t max_param_checks) {
    using namespace nbrdf::nn;
    auto w = init_weights<double>(g, seed);
    nbrdf::RngStream rng(seed, 0xABCD);
    TensorT<double> input({batch, g.input_dim});
    for (auto &v : input.data)
        v = 2.0 * rng.next_double() - 1.0;
    TensorT<double> c({batch, g.output_dim});
    for (auto &v : c.data)
        v = 2.0 * rng.next_double() - 1.0;

    auto loss_at = [&]() {
        TensorT<double> y = forward(g, w, input);
        double s = 0;
        for (size_t i = 0; i < y.data.size(); ++i)
            s += c.data[i] * y.data[i];
        return s;
    };

    ForwardTraceT<double> trace;
    forward(g, w, input, &trace);
    GradientsT<double> an = backward(g, w, trace, c);

    GradCheck res;
    auto check_entry = [&](double *theta, double analytic) {
        double h = 1e-6 * std::max(1.0, std::abs(*theta));
        double save = *theta;
        *theta = save + h;
        double lp = loss_at();
        *theta = save - h;
        double lm = loss_at();
        *theta = save;
        double fd = (lp - lm) / (2.0 * h);
        double rel = std::abs(fd - analytic) / std::max({std::abs(fd), std::abs(analytic), 1e-4});
        res.max_rel_err = std::max(res.max_rel_err, rel);
        ++res.checked;
    };

    size_t total = 0;
    for (const auto &p : w.params)
        total += p.numel();
    size_t stride = std::max<size_t>(1, total / std::max<size_t>(1, max_param_checks));
    size_t flat = rng.next_below(static_cast<uint32_t>(stride));
    for (size_t pi = 0, base = 0; pi < w.params.size(); base += w.params[pi].numel(), ++pi) {
        auto &p = w.params[pi];
        while (flat >= base && flat < base + p.numel()) {
            check_entry(&p.data[flat - base], an.params[pi].data[flat - base]);
            flat += stride;
        }
    }
    // Every input entry as well (input gradients feed latent optimization).
    for (size_t i = 0; i < input.data.size(); ++i)
        check_entry(&input.data[i], an.input.data[i]);
    return res;
}

// Tensor-wise directional finite-difference check. For every parameter
// tensor (and the input) the analytic directional derivative along a random
// +-1/sqrt(n) direction is compared against a fourth-order central
// difference. Aggregating whole tensors keeps the derivative magnitude well
// above the double-precision cancellation floor, which per-coordinate checks
// of 512-wide graphs cannot achieve.
// A directional difference through a ReLU kink is polluted at any single
// step size; a correct analytic gradient matches the best-conditioned step,
// while a genuine backward bug disagrees at every step size. Each tensor is
// therefore scored by its best step from a small ladder.
inline GradCheck grad_check_directional(const nbrdf::nn::MlpGraph &g, uint64_t seed, int batch) {
    using namespace nbrdf::nn;
    auto w = init_weights<double>(g, seed);
    nbrdf::RngStream rng(seed, 0xABCD);
    TensorT<double> input({batch, g.input_dim});
    for (auto &v : input.data)
        v = 2.0 * rng.next_double() - 1.0;
    TensorT<double> c({batch, g.output_dim});
    for (auto &v : c.data)
        v = 2.0 * rng.next_double() - 1.0;
    auto loss_at = [&]() {
        TensorT<double> y = forward(g, w, input);
        double s = 0;
        for (size_t i = 0; i < y.data.size(); ++i)
            s += c.data[i] * y.data[i];
        return s;
    };
    ForwardTraceT<double> trace;
    forward(g, w, input, &trace);
    GradientsT<double> an = backward(g, w, trace, c);

    GradCheck res;
    auto check_tensor = [&](std::vector<double> &theta, const std::vector<double> &gvec) {
        size_t n = theta.size();
        std::vector<double> v(n);
        double scale = 1.0 / std::sqrt(static_cast<double>(n));
        for (auto &e : v)
            e = rng.next_float() < 0.5f ? scale : -scale;
        double ana = 0;
        for (size_t i = 0; i < n; ++i)
            ana += gvec[i] * v[i];
        auto shift = [&](double t) {
            for (size_t i = 0; i < n; ++i)
                theta[i] += t * v[i];
        };
        double rel = std::numeric_limits<double>::infinity();
        for (double h : {1e-4, 3e-5, 1e-5}) {
            shift(h);
            double f1 = loss_at();
            shift(-2 * h);
            double fm1 = loss_at();
            shift(3 * h);
            double f2 = loss_at();
            shift(-4 * h);
            double fm2 = loss_at();
            shift(2 * h); // back to the original point
            double fd = (8 * (f1 - fm1) - (f2 - fm2)) / (12 * h);
            rel = std::min(rel,
                           std::abs(fd - ana) / std::max({std::abs(fd), std::abs(ana), 1e-6}));
        }
        res.max_rel_err = std::max(res.max_rel_err, rel);
        res.checked += n;
    };
    for (size_t p = 0; p < w.params.size(); ++p)
        check_tensor(w.params[p].data, an.params[p].data);
    check_tensor(input.data, an.input.data);
    return res;
}

inline std::string temp_path(const std::string &name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

} // namespace testutil
