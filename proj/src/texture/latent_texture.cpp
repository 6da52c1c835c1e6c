#include "nbrdf/texture/latent_texture.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>

namespace nbrdf {

LatentBrdf interpolate(const std::vector<LatentBrdf> &latents,
                       const std::vector<double> &weights) {
    if (latents.empty() || latents.size() != weights.size())
        throw ShapeMismatch("interpolate: list sizes disagree or empty");
    double sum = 0;
    for (double w : weights)
        sum += w;
    if (std::abs(sum - 1.0) > 1e-6)
        throw WeightSumError("interpolate: weights sum to " + std::to_string(sum));
    const int ch = latents[0].channels;
    LatentBrdf out(ch);
    std::fill(out.data.begin(), out.data.end(), 0.0f);
    for (size_t i = 0; i < latents.size(); ++i) {
        if (latents[i].channels != ch)
            throw ChannelMismatch("interpolate: channel counts disagree");
        for (size_t k = 0; k < out.data.size(); ++k)
            out.data[k] += static_cast<float>(weights[i]) * latents[i].data[k];
    }
    return out;
}

int LatentTexture::level_width(int l) const {
    return std::max(1, (width + (1 << l) - 1) >> l);
}

int LatentTexture::level_height(int l) const {
    return std::max(1, (height + (1 << l) - 1) >> l);
}

LatentTexture make_texture(int width, int height, std::vector<LatentBrdf> base) {
    if (width <= 0 || height <= 0 ||
        base.size() != static_cast<size_t>(width) * height)
        throw ShapeMismatch("make_texture: texel count does not match dimensions");
    LatentTexture tex;
    tex.width = width;
    tex.height = height;
    tex.channels = base[0].channels;
    for (const auto &t : base)
        if (t.channels != tex.channels)
            throw ChannelMismatch("make_texture: mixed channel counts");
    tex.levels.clear();
    tex.levels.push_back(std::move(base));
    return tex;
}

void build_mipmap(LatentTexture *tex) {
    tex->levels.resize(1);
    // Track the number of base texels each coarse texel covers so that
    // odd-edge averaging stays mean-preserving.
    std::vector<double> area(tex->levels[0].size(), 1.0);
    int l = 0;
    while (tex->level_width(l) > 1 || tex->level_height(l) > 1) {
        int w = tex->level_width(l), h = tex->level_height(l);
        int nw = tex->level_width(l + 1), nh = tex->level_height(l + 1);
        std::vector<LatentBrdf> next(static_cast<size_t>(nw) * nh, LatentBrdf(tex->channels));
        std::vector<double> next_area(next.size(), 0.0);
        for (int y = 0; y < nh; ++y)
            for (int x = 0; x < nw; ++x) {
                LatentBrdf acc(tex->channels);
                std::fill(acc.data.begin(), acc.data.end(), 0.0f);
                double a = 0;
                for (int dy = 0; dy < 2; ++dy)
                    for (int dx = 0; dx < 2; ++dx) {
                        int cx = 2 * x + dx, cy = 2 * y + dy;
                        if (cx >= w || cy >= h)
                            continue;
                        size_t ci = static_cast<size_t>(cy) * w + cx;
                        double ca = area[ci];
                        const auto &child = tex->levels[l][ci];
                        for (size_t k = 0; k < acc.data.size(); ++k)
                            acc.data[k] += static_cast<float>(ca) * child.data[k];
                        a += ca;
                    }
                for (auto &v : acc.data)
                    v = static_cast<float>(v / a);
                size_t ni = static_cast<size_t>(y) * nw + x;
                next[ni] = std::move(acc);
                next_area[ni] = a;
            }
        tex->levels.push_back(std::move(next));
        area = std::move(next_area);
        ++l;
    }
}

namespace {

LatentBrdf bilinear(const LatentTexture &tex, int level, double u, double v) {
    int w = tex.level_width(level), h = tex.level_height(level);
    double x = u * w - 0.5, y = v * h - 0.5;
    int x0 = static_cast<int>(std::floor(x)), y0 = static_cast<int>(std::floor(y));
    double fx = x - x0, fy = y - y0;
    auto cx = [w](int i) { return std::clamp(i, 0, w - 1); };
    auto cy = [h](int i) { return std::clamp(i, 0, h - 1); };
    const LatentBrdf &t00 = tex.texel(level, cx(x0), cy(y0));
    const LatentBrdf &t10 = tex.texel(level, cx(x0 + 1), cy(y0));
    const LatentBrdf &t01 = tex.texel(level, cx(x0), cy(y0 + 1));
    const LatentBrdf &t11 = tex.texel(level, cx(x0 + 1), cy(y0 + 1));
    LatentBrdf out(tex.channels);
    for (size_t k = 0; k < out.data.size(); ++k)
        out.data[k] = static_cast<float>((1 - fx) * (1 - fy) * t00.data[k] +
                                         fx * (1 - fy) * t10.data[k] +
                                         (1 - fx) * fy * t01.data[k] + fx * fy * t11.data[k]);
    return out;
}

} // namespace

LatentBrdf sample_texture(const LatentTexture &tex, double u, double v, double footprint) {
    if (tex.levels.empty())
        throw ShapeMismatch("sample_texture: empty texture");
    if (u < 0 || u > 1 || v < 0 || v > 1 || !(footprint > 0))
        throw InvalidDirection("sample_texture: uv or footprint out of range");
    double L = tex.n_levels() - 1.0;
    double lambda = std::clamp(std::log2(footprint), 0.0, L);
    int l0 = static_cast<int>(std::floor(lambda));
    int l1 = std::min(l0 + 1, tex.n_levels() - 1);
    double t = lambda - l0;
    LatentBrdf a = bilinear(tex, l0, u, v);
    if (t == 0 || l1 == l0)
        return a;
    LatentBrdf b = bilinear(tex, l1, u, v);
    for (size_t k = 0; k < a.data.size(); ++k)
        a.data[k] = static_cast<float>((1 - t) * a.data[k] + t * b.data[k]);
    return a;
}

namespace {
constexpr char kTexMagic[4] = {'N', 'B', 'L', 'T'};
constexpr uint32_t kTexVersion = 1;
} // namespace

void save_texture(const std::string &path, const LatentTexture &tex) {
    FILE *f = std::fopen(path.c_str(), "wb");
    if (!f)
        throw IoError("cannot open for writing: " + path);
    auto wr = [f](const void *p, size_t n) {
        if (std::fwrite(p, 1, n, f) != n) {
            std::fclose(f);
            throw IoError("texture file write failure");
        }
    };
    wr(kTexMagic, 4);
    wr(&kTexVersion, 4);
    uint32_t w = tex.width, h = tex.height, ch = tex.channels;
    uint32_t dim = kLatentDim, nl = static_cast<uint32_t>(tex.n_levels());
    wr(&w, 4);
    wr(&h, 4);
    wr(&ch, 4);
    wr(&dim, 4);
    wr(&nl, 4);
    for (const auto &level : tex.levels)
        for (const auto &t : level)
            wr(t.data.data(), t.data.size() * sizeof(float));
    std::fclose(f);
}

LatentTexture load_texture(const std::string &path) {
    FILE *f = std::fopen(path.c_str(), "rb");
    if (!f)
        throw IoError("cannot open for reading: " + path);
    auto rd = [f](void *p, size_t n) {
        if (std::fread(p, 1, n, f) != n) {
            std::fclose(f);
            throw TruncatedFile("unexpected end of texture file");
        }
    };
    char magic[4];
    rd(magic, 4);
    if (std::memcmp(magic, kTexMagic, 4) != 0) {
        std::fclose(f);
        throw FormatError("not a NBLT texture file: " + path);
    }
    uint32_t ver, w, h, ch, dim, nl;
    rd(&ver, 4);
    rd(&w, 4);
    rd(&h, 4);
    rd(&ch, 4);
    rd(&dim, 4);
    rd(&nl, 4);
    if (ver != kTexVersion || dim != kLatentDim) {
        std::fclose(f);
        throw FormatError("unsupported NBLT layout");
    }
    LatentTexture tex;
    tex.width = static_cast<int>(w);
    tex.height = static_cast<int>(h);
    tex.channels = static_cast<int>(ch);
    for (uint32_t l = 0; l < nl; ++l) {
        size_t count = static_cast<size_t>(tex.level_width(l)) * tex.level_height(l);
        std::vector<LatentBrdf> level(count, LatentBrdf(tex.channels));
        for (auto &t : level)
            rd(t.data.data(), t.data.size() * sizeof(float));
        tex.levels.push_back(std::move(level));
    }
    std::fclose(f);
    return tex;
}

} // namespace nbrdf
