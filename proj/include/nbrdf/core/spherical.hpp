#pragma once

#include <vector>

#include "nbrdf/core/errors.hpp"
#include "nbrdf/core/rng.hpp"
#include "nbrdf/core/vec.hpp"

namespace nbrdf {

// (theta, phi) -> unit direction, theta measured from the macro normal.
Direction spherical_to_dir(double theta, double phi);

// normalize(wi + wo). Throws DegenerateHalfVector when |wi+wo| < 1e-9.
Direction half_vector(const Direction &wi, const Direction &wo);

// 2 (w.h) h - w.
Direction reflect(const Direction &w, const Direction &h);

// Density ratio d_omega_h / d_omega_o = 1 / (4 |wo.h|).
double half_angle_jacobian(const Direction &wo, const Direction &h);

// Refraction of w about microfacet normal h with relative IOR eta
// (eta = n_incident / n_transmitted). Returns false on total internal
// reflection. w points away from the surface on the incident side.
bool refract(const Direction &w, const Direction &h, double eta, Direction *wt);

// Stratum-center grid over the upper hemisphere, theta-major ordering.
std::vector<Direction> stratified_hemisphere_grid(int n_theta, int n_phi);

// Cosine-weighted hemisphere sample; pdf = cos(theta) / pi.
Direction cosine_sample_hemisphere(RngStream &rng);

// Uniform hemisphere sample; pdf = 1 / (2 pi).
Direction uniform_sample_hemisphere(RngStream &rng);

// Uniform direction on the full sphere; pdf = 1 / (4 pi).
Direction uniform_sample_sphere(RngStream &rng);

// Orthonormal basis with n as the z axis.
struct Frame {
    Vec3 t, b, n;
    explicit Frame(const Vec3 &normal);
    Vec3 to_world(const Vec3 &local) const { return t * local.x + b * local.y + n * local.z; }
    Vec3 to_local(const Vec3 &world) const {
        return {dot(world, t), dot(world, b), dot(world, n)};
    }
};

} // namespace nbrdf
