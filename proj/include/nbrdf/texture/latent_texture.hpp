#pragma once

#include <string>
#include <vector>

#include "nbrdf/neural/decoder.hpp"

namespace nbrdf {

// Channel-wise weighted sum of latents; weights must sum to 1 +- 1e-6.
LatentBrdf interpolate(const std::vector<LatentBrdf> &latents, const std::vector<double> &weights);

// Per-texel latent image with a box-filtered mip chain. Level k+1 has
// ceil(w/2) x ceil(h/2) texels; odd edges use area-weighted averaging.
struct LatentTexture {
    int width = 0, height = 0;
    int channels = 1;
    // levels[0] is the base image, row-major; levels.back() is 1x1 once
    // build_mipmap has run.
    std::vector<std::vector<LatentBrdf>> levels;

    int level_width(int l) const;
    int level_height(int l) const;
    int n_levels() const { return static_cast<int>(levels.size()); }

    const LatentBrdf &texel(int level, int x, int y) const {
        return levels[level][static_cast<size_t>(y) * level_width(level) + x];
    }
};

LatentTexture make_texture(int width, int height, std::vector<LatentBrdf> base);

// Fills the chain down to 1x1; exact box filter, mean-preserving.
void build_mipmap(LatentTexture *tex);

// Trilinear lookup: level = clamp(log2(footprint), 0, L), bilinear within
// the two bracketing levels, clamp addressing. Footprint in level-0 texels.
LatentBrdf sample_texture(const LatentTexture &tex, double u, double v, double footprint);

// "NBLT" latent-texture file.
void save_texture(const std::string &path, const LatentTexture &tex);
LatentTexture load_texture(const std::string &path);

} // namespace nbrdf
