#pragma once

#include <memory>
#include <vector>

#include "nbrdf/brdf/microfacet.hpp"
#include "nbrdf/core/rng.hpp"
#include "nbrdf/core/spherical.hpp"

namespace nbrdf {

// Homogeneous slab medium, isotropic phase, unit slab thickness
// (sigma_t equals the optical depth at normal incidence).
struct MediumParams {
    double albedo = 1.0;  // single-scattering albedo A, [0, 1]
    double sigma_t = 0.0; // extinction coefficient, >= 0
};

// Top rough dielectric + medium + bottom (conductor or nested stack).
// Nesting depth is at most 3 in the dataset.
struct LayerStack {
    DielectricParams top;
    MediumParams medium;
    ConductorParams bottom_conductor;
    std::shared_ptr<const LayerStack> bottom_stack; // non-null for nested bottoms

    bool has_nested_bottom() const { return bottom_stack != nullptr; }
};

struct OracleEstimate {
    double value = 0;   // BRDF value, cosine excluded
    double stderr_ = 0;
    long n_paths = 0;
};

// Position-free Monte Carlo estimate of the layered BRDF f(wi, wo), cosine
// excluded. Next-event contributions are accumulated at every path vertex;
// the exit connection through the top interface uses the macro-normal
// refraction of wo with its flat Fresnel transmittance.
OracleEstimate eval_layered(const LayerStack &stack, const Direction &wi, const Direction &wo,
                            long n_paths, RngStream rng);

struct LayeredSample {
    Direction wo;          // exit direction, z > 0 when exited
    double throughput = 0; // 0 when the path was absorbed
};

// Full random walk until the path exits through the top (or is absorbed).
LayeredSample sample_layered(const LayerStack &stack, const Direction &wi, RngStream &rng);

// Dense table of eval_layered estimates over all (wi, wo) grid pairs,
// in-direction-major ordering. Deterministic given the seed; parallel over
// pairs with per-pair streams.
std::vector<float> tabulate_layered(const LayerStack &stack, const std::vector<Direction> &grid,
                                    long n_paths_per_pair, uint64_t seed);

// Russian roulette starts after this many vertices; hard cutoff at 64.
constexpr int kRouletteDepth = 8;
constexpr int kMaxWalkDepth = 64;

} // namespace nbrdf
