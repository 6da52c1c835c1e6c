#include "nbrdf/brdf/microfacet.hpp"

#include <cmath>

namespace nbrdf {

double ggx_ndf(double cos_theta_h, double alpha) {
    if (cos_theta_h < 0)
        return 0;
    double a2 = alpha * alpha;
    double d = cos_theta_h * cos_theta_h * (a2 - 1.0) + 1.0;
    return a2 / (kPi * d * d);
}

double smith_g1(const Direction &w, double alpha) {
    double c = w.z;
    if (c <= 0)
        return 0;
    double tan2 = (1.0 - c * c) / (c * c);
    return 2.0 / (1.0 + std::sqrt(1.0 + alpha * alpha * tan2));
}

double smith_g(const Direction &wi, const Direction &wo, const Direction &h, double alpha) {
    if (dot(wi, h) <= 0 || dot(wo, h) <= 0)
        return 0;
    return smith_g1(wi, alpha) * smith_g1(wo, alpha);
}

double fresnel_schlick(double cos_i, double r0) {
    double m = 1.0 - cos_i;
    double m2 = m * m;
    return r0 + (1.0 - r0) * m2 * m2 * m;
}

double fresnel_dielectric(double cos_i, double eta) {
    cos_i = std::min(1.0, std::max(0.0, cos_i));
    double sin2t = (1.0 - cos_i * cos_i) / (eta * eta);
    if (sin2t >= 1.0)
        return 1.0;
    double cos_t = std::sqrt(1.0 - sin2t);
    double rs = (cos_i - eta * cos_t) / (cos_i + eta * cos_t);
    double rp = (eta * cos_i - cos_t) / (eta * cos_i + cos_t);
    return 0.5 * (rs * rs + rp * rp);
}

static double eval_microfacet_common(double alpha, double fresnel, const Direction &wi,
                                     const Direction &wo) {
    if (wi.z <= 0 || wo.z <= 0)
        return 0;
    Direction h = half_vector(wi, wo);
    double d = ggx_ndf(h.z, alpha);
    double g = smith_g(wi, wo, h, alpha);
    return d * fresnel * g / (4.0 * wi.z * wo.z);
}

double eval_conductor(const ConductorParams &p, const Direction &wi, const Direction &wo) {
    if (wi.z <= 0 || wo.z <= 0)
        return 0;
    Direction h = half_vector(wi, wo);
    double f = fresnel_schlick(std::abs(dot(wi, h)), p.r0);
    return eval_microfacet_common(p.alpha, f, wi, wo);
}

double eval_dielectric_reflect(const DielectricParams &p, const Direction &wi,
                               const Direction &wo) {
    if (wi.z <= 0 || wo.z <= 0)
        return 0;
    Direction h = half_vector(wi, wo);
    double f = fresnel_dielectric(std::abs(dot(wi, h)), p.eta);
    return eval_microfacet_common(p.alpha, f, wi, wo);
}

// Walter-style half-vector sampling, h ~ D(h) cos(theta_h).
static Direction sample_ggx_half_vector(double alpha, RngStream &rng) {
    double u1 = rng.next_double(), u2 = rng.next_double();
    double tan2 = alpha * alpha * u1 / std::max(1e-15, 1.0 - u1);
    double ct = 1.0 / std::sqrt(1.0 + tan2);
    double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
    double phi = kTwoPi * u2;
    return {st * std::cos(phi), st * std::sin(phi), ct};
}

// Weight of Walter's sampling scheme: f * cos / pdf with the Fresnel event
// probability folded in.
static double walter_weight(const Direction &w, const Direction &h, const Direction &wo,
                            double alpha) {
    double wh = std::abs(dot(w, h));
    if (w.z <= 1e-9 || h.z <= 1e-9)
        return 0;
    return wh * smith_g1(w, alpha) * smith_g1(wo, alpha) / (std::abs(w.z) * h.z);
}

MicrofacetSample sample_microfacet(const ConductorParams &p, const Direction &wi,
                                   RngStream &rng) {
    MicrofacetSample s;
    s.h = sample_ggx_half_vector(p.alpha, rng);
    double wh = dot(wi, s.h);
    if (wh <= 0) {
        s.weight = 0;
        s.pdf = 0;
        s.wo = {0, 0, 1};
        return s;
    }
    s.wo = reflect(wi, s.h);
    s.event = MicrofacetEvent::Reflect;
    double f = fresnel_schlick(wh, p.r0);
    s.weight = (s.wo.z > 0) ? f * walter_weight(wi, s.h, s.wo, p.alpha) : 0.0;
    s.pdf = ggx_ndf(s.h.z, p.alpha) * s.h.z / (4.0 * wh);
    return s;
}

MicrofacetSample sample_microfacet(const DielectricParams &p, const Direction &wi,
                                   RngStream &rng, double eta_rel) {
    MicrofacetSample s;
    s.h = sample_ggx_half_vector(p.alpha, rng);
    if (std::abs(eta_rel - 1.0) < 1e-9) {
        // Index-matched interface: straight transmission regardless of the
        // sampled facet; rejecting back-facing half vectors would lose energy.
        s.event = MicrofacetEvent::Transmit;
        s.wo = -wi;
        s.weight = 1.0;
        s.pdf = 0;
        return s;
    }
    double wh = dot(wi, s.h);
    if (wh <= 0) {
        s.weight = 0;
        s.pdf = 0;
        s.wo = {0, 0, 1};
        return s;
    }
    double f = fresnel_dielectric(wh, eta_rel);
    double base_pdf = ggx_ndf(s.h.z, p.alpha) * s.h.z;
    if (rng.next_double() < f) {
        s.event = MicrofacetEvent::Reflect;
        s.wo = reflect(wi, s.h);
        s.weight = (s.wo.z > 0) ? walter_weight(wi, s.h, s.wo, p.alpha) : 0.0;
        s.pdf = f * base_pdf / (4.0 * wh);
    } else {
        Direction wt;
        if (!refract(wi, s.h, 1.0 / eta_rel, &wt)) {
            // No refraction direction exists; treat as reflection.
            s.event = MicrofacetEvent::Reflect;
            s.wo = reflect(wi, s.h);
            s.weight = (s.wo.z > 0) ? walter_weight(wi, s.h, s.wo, p.alpha) : 0.0;
            s.pdf = (1.0 - f) * base_pdf / (4.0 * wh);
            return s;
        }
        s.event = MicrofacetEvent::Transmit;
        s.wo = wt;
        // Energy-complement transmission: Walter's weight, no extra loss.
        s.weight = walter_weight(wi, s.h, Direction{wt.x, wt.y, std::abs(wt.z)}, p.alpha);
        double denom = wh / eta_rel + dot(wt, s.h);
        double jac = std::abs(dot(wt, s.h)) / std::max(1e-15, denom * denom);
        s.pdf = (1.0 - f) * base_pdf * jac;
    }
    return s;
}

double pdf_microfacet_reflect(double alpha, const Direction &wi, const Direction &wo) {
    if (wi.z <= 0 || wo.z <= 0)
        return 0;
    Direction h = half_vector(wi, wo);
    double wh = dot(wi, h);
    if (wh <= 0)
        return 0;
    return ggx_ndf(h.z, alpha) * h.z / (4.0 * wh);
}

AlbedoEstimate directional_albedo(const std::function<double(const Direction &, const Direction &)> &eval_fn,
                                  const Direction &wi, int n, RngStream &rng) {
    double sum = 0, sum2 = 0;
    for (int k = 0; k < n; ++k) {
        Direction wo = cosine_sample_hemisphere(rng);
        // pdf = cos/pi, estimator = f * cos / pdf = f * pi.
        double v = eval_fn(wi, wo) * kPi;
        sum += v;
        sum2 += v * v;
    }
    AlbedoEstimate e;
    e.value = sum / n;
    double var = std::max(0.0, sum2 / n - e.value * e.value);
    e.stderr_ = std::sqrt(var / n);
    return e;
}

} // namespace nbrdf
