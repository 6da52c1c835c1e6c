#include "nbrdf/core/spherical.hpp"

#include <cmath>

namespace nbrdf {

Direction spherical_to_dir(double theta, double phi) {
    double st = std::sin(theta), ct = std::cos(theta);
    return {st * std::cos(phi), st * std::sin(phi), ct};
}

Direction half_vector(const Direction &wi, const Direction &wo) {
    Vec3 h = wi + wo;
    double len = h.length();
    if (len < 1e-9)
        throw DegenerateHalfVector("wi + wo is near zero");
    return h / len;
}

Direction reflect(const Direction &w, const Direction &h) {
    return h * (2.0 * dot(w, h)) - w;
}

double half_angle_jacobian(const Direction &wo, const Direction &h) {
    double d = std::abs(dot(wo, h));
    if (d < 1e-9)
        throw DegenerateHalfVector("wo.h is near zero");
    return 1.0 / (4.0 * d);
}

bool refract(const Direction &w, const Direction &h, double eta, Direction *wt) {
    double c = dot(w, h);
    double sin2t = eta * eta * (1.0 - c * c);
    if (sin2t >= 1.0)
        return false;
    double ct = std::sqrt(1.0 - sin2t);
    // Transmitted ray on the opposite side of h.
    *wt = -w * eta + h * (eta * c - ct);
    return true;
}

std::vector<Direction> stratified_hemisphere_grid(int n_theta, int n_phi) {
    std::vector<Direction> dirs;
    dirs.reserve(static_cast<size_t>(n_theta) * n_phi);
    for (int j = 0; j < n_theta; ++j) {
        double theta = (j + 0.5) / n_theta * (kPi / 2.0);
        for (int k = 0; k < n_phi; ++k) {
            double phi = (k + 0.5) / n_phi * kTwoPi;
            dirs.push_back(spherical_to_dir(theta, phi));
        }
    }
    return dirs;
}

Direction cosine_sample_hemisphere(RngStream &rng) {
    double u1 = rng.next_double(), u2 = rng.next_double();
    double r = std::sqrt(u1);
    double phi = kTwoPi * u2;
    double z = std::sqrt(std::max(0.0, 1.0 - u1));
    return {r * std::cos(phi), r * std::sin(phi), z};
}

Direction uniform_sample_hemisphere(RngStream &rng) {
    double u1 = rng.next_double(), u2 = rng.next_double();
    double z = u1;
    double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    double phi = kTwoPi * u2;
    return {r * std::cos(phi), r * std::sin(phi), z};
}

Direction uniform_sample_sphere(RngStream &rng) {
    double u1 = rng.next_double(), u2 = rng.next_double();
    double z = 1.0 - 2.0 * u1;
    double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    double phi = kTwoPi * u2;
    return {r * std::cos(phi), r * std::sin(phi), z};
}

Frame::Frame(const Vec3 &normal) : n(normal) {
    // Duff et al. branchless ONB.
    double sign = std::copysign(1.0, n.z);
    double a = -1.0 / (sign + n.z);
    double b_ = n.x * n.y * a;
    t = {1.0 + sign * n.x * n.x * a, sign * b_, -sign * n.x};
    b = {b_, sign + n.y * n.y * a, -n.y};
}

} // namespace nbrdf
