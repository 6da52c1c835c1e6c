#include "nbrdf/render/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>

#include <png.h>

namespace nbrdf {

void write_pfm(const std::string &path, const ImageBuffer &img) {
    FILE *f = std::fopen(path.c_str(), "wb");
    if (!f)
        throw IoError("cannot open for writing: " + path);
    std::fprintf(f, "PF\n%d %d\n-1.0\n", img.width, img.height);
    // PFM stores rows bottom-up.
    for (int y = img.height - 1; y >= 0; --y)
        if (std::fwrite(img.pixel(0, y), sizeof(float), static_cast<size_t>(img.width) * 3, f) !=
            static_cast<size_t>(img.width) * 3) {
            std::fclose(f);
            throw IoError("PFM write failure: " + path);
        }
    std::fclose(f);
}

ImageBuffer read_pfm(const std::string &path) {
    FILE *f = std::fopen(path.c_str(), "rb");
    if (!f)
        throw IoError("cannot open for reading: " + path);
    char tag[3] = {};
    int w = 0, h = 0;
    double scale = 0;
    if (std::fscanf(f, "%2s %d %d %lf", tag, &w, &h, &scale) != 4 || std::strcmp(tag, "PF") != 0 ||
        w <= 0 || h <= 0) {
        std::fclose(f);
        throw FormatError("not a color PFM file: " + path);
    }
    if (scale > 0) {
        std::fclose(f);
        throw FormatError("big-endian PFM not supported: " + path);
    }
    std::fgetc(f); // single whitespace after the header
    ImageBuffer img(w, h);
    for (int y = h - 1; y >= 0; --y)
        if (std::fread(img.pixel(0, y), sizeof(float), static_cast<size_t>(w) * 3, f) !=
            static_cast<size_t>(w) * 3) {
            std::fclose(f);
            throw TruncatedFile("unexpected end of PFM file: " + path);
        }
    std::fclose(f);
    return img;
}

void write_png(const std::string &path, const ImageBuffer &img, double exposure) {
    FILE *f = std::fopen(path.c_str(), "wb");
    if (!f)
        throw IoError("cannot open for writing: " + path);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info || setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        std::fclose(f);
        throw IoError("PNG encode failure: " + path);
    }
    png_init_io(png, f);
    png_set_IHDR(png, info, img.width, img.height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_byte> row(static_cast<size_t>(img.width) * 3);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < 3; ++c) {
                double v = std::pow(std::max(0.0, double(img.pixel(x, y)[c]) * exposure),
                                    1.0 / 2.2);
                row[static_cast<size_t>(x) * 3 + c] =
                    static_cast<png_byte>(std::clamp(v, 0.0, 1.0) * 255.0 + 0.5);
            }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(f);
}

ImageMetrics image_metrics(const ImageBuffer &a, const ImageBuffer &b) {
    if (a.width != b.width || a.height != b.height)
        throw DimMismatch("image_metrics: dimension mismatch");
    ImageMetrics m;
    double abs_sum = 0, ref_sum = 0;
    const size_t n = a.rgb.size();
    for (size_t i = 0; i < n; ++i) {
        double d = double(a.rgb[i]) - b.rgb[i];
        m.mse += d * d;
        abs_sum += std::abs(d);
        ref_sum += std::abs(double(b.rgb[i]));
    }
    m.mse /= n;
    m.rel_l1 = (abs_sum / n) / (ref_sum / n + 1e-6);
    return m;
}

} // namespace nbrdf
