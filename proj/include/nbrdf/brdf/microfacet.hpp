#pragma once

#include <functional>

#include "nbrdf/core/rng.hpp"
#include "nbrdf/core/spherical.hpp"
#include "nbrdf/core/vec.hpp"

namespace nbrdf {

// GGX rough conductor with Schlick Fresnel, single channel.
struct ConductorParams {
    double alpha = 0.5; // GGX roughness, (0, 1]
    double r0 = 1.0;    // reflectance at normal incidence, [0, 1]
};

// GGX rough dielectric, single channel.
struct DielectricParams {
    double alpha = 0.5; // GGX roughness, (0, 1]
    double eta = 1.5;   // relative IOR (transmitted / incident from above)
};

double ggx_ndf(double cos_theta_h, double alpha);
double smith_g1(const Direction &w, double alpha);
double smith_g(const Direction &wi, const Direction &wo, const Direction &h, double alpha);
double fresnel_schlick(double cos_i, double r0);
// Exact unpolarized Fresnel; returns 1 on total internal reflection.
double fresnel_dielectric(double cos_i, double eta);

// BRDF value without the cosine term; 0 for lower-hemisphere wo.
double eval_conductor(const ConductorParams &p, const Direction &wi, const Direction &wo);
double eval_dielectric_reflect(const DielectricParams &p, const Direction &wi,
                               const Direction &wo);

enum class MicrofacetEvent { Reflect, Transmit };

struct MicrofacetSample {
    Direction wo;
    MicrofacetEvent event = MicrofacetEvent::Reflect;
    double weight = 0; // f * cos / pdf
    double pdf = 0;
    Direction h;
};

// Half vector sampled from D(h) cos(theta_h); reflect/transmit chosen by
// Fresnel (conductors always reflect). Failed refraction falls back to
// reflection.
MicrofacetSample sample_microfacet(const ConductorParams &p, const Direction &wi,
                                   RngStream &rng);
// eta_rel is the relative IOR for the incident side (p.eta from above,
// 1 / p.eta when hitting the interface from inside the medium).
MicrofacetSample sample_microfacet(const DielectricParams &p, const Direction &wi,
                                   RngStream &rng, double eta_rel);

// pdf (in solid angle of wo) of the reflected direction produced by
// sample_microfacet, excluding the Fresnel branch probability.
double pdf_microfacet_reflect(double alpha, const Direction &wi, const Direction &wo);

struct AlbedoEstimate {
    double value = 0;
    double stderr_ = 0;
};

// Monte Carlo estimate of the directional albedo
// integral f(wi, wo) cos(theta_o) d(omega_o) with cosine-weighted sampling.
AlbedoEstimate directional_albedo(const std::function<double(const Direction &, const Direction &)> &eval_fn,
                                  const Direction &wi, int n, RngStream &rng);

} // namespace nbrdf
