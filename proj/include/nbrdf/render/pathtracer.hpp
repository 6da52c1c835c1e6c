#pragma once

#include <functional>

#include "nbrdf/render/scene.hpp"

namespace nbrdf {

enum class Strategy { LightOnly, BrdfOnly, MIS };

struct RenderConfig {
    int spp = 16;
    Strategy strategy = Strategy::MIS;
    uint64_t seed = 1;
    int max_depth = 8;
    bool audit_pdf = false; // verify MIS uses exactly the sampler's pdf
};

struct RenderStats {
    // Mean over pixels of the per-pixel variance of the sample mean.
    double mean_pixel_variance = 0;
    double max_pdf_audit_error = 0;
    long neural_queries = 0;
    long flushes = 0;
};

// Deterministic per (seed, thread count); neural materials are evaluated in
// batched query-buffer flushes once per path depth.
ImageBuffer render(const Scene &scene, const RenderConfig &cfg, RenderStats *stats = nullptr);

struct MaterialSample {
    Direction wo;
    double pdf = 0;
    bool valid = false;
};

// Per-channel BRDF value, cosine excluded, in the local shading frame.
// Oracle materials consume rng for their Monte Carlo estimate.
Vec3 eval_material(const Material &m, const Direction &wi, const Direction &wo, RngStream &rng);

// pdf of sample_material in solid angle; analytic for every material kind.
double pdf_material(const Material &m, const Direction &wi, const Direction &wo);

MaterialSample sample_material(const Material &m, const Direction &wi, RngStream &rng);

// Square (hx, hy) projection of the outgoing hemisphere: pixel -> wo with
// wo.z = sqrt(1 - hx^2 - hy^2); stores eval(wi, wo) * cos(theta_o).
ImageBuffer render_lobe(const std::function<Vec3(const Direction &, const Direction &)> &eval,
                        const Direction &wi, int resolution);

} // namespace nbrdf
