#pragma once

#include <string>
#include <vector>

#include "nbrdf/core/errors.hpp"

namespace nbrdf {

struct ImageBuffer {
    int width = 0, height = 0;
    std::vector<float> rgb; // 3 floats per pixel, row-major, top row first

    ImageBuffer() = default;
    ImageBuffer(int w, int h) : width(w), height(h), rgb(static_cast<size_t>(w) * h * 3, 0.0f) {}

    float *pixel(int x, int y) { return rgb.data() + (static_cast<size_t>(y) * width + x) * 3; }
    const float *pixel(int x, int y) const {
        return rgb.data() + (static_cast<size_t>(y) * width + x) * 3;
    }
};

// Portable float map, "PF" color variant, little-endian.
void write_pfm(const std::string &path, const ImageBuffer &img);
ImageBuffer read_pfm(const std::string &path);

// Tonemapped 8-bit sRGB output: clamp(pow(v * exposure, 1/2.2)).
void write_png(const std::string &path, const ImageBuffer &img, double exposure = 1.0);

struct ImageMetrics {
    double mse = 0;
    double rel_l1 = 0; // mean |a-b| / (mean |b| + 1e-6)
};

// Throws DimMismatch on differing dimensions.
ImageMetrics image_metrics(const ImageBuffer &a, const ImageBuffer &b);

} // namespace nbrdf
