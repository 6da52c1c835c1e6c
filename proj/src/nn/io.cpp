#include "nbrdf/nn/io.hpp"

#include <cstdio>
#include <cstring>

namespace nbrdf::nn {

namespace {
constexpr char kMagic[4] = {'N', 'B', 'W', 'T'};
constexpr uint32_t kVersion = 1;
} // namespace

void save_weights(const std::string &path, const MlpGraph &graph, const Weights &w) {
    FILE *f = std::fopen(path.c_str(), "wb");
    if (!f)
        throw IoError("cannot open for writing: " + path);
    auto wr = [f, &path](const void *p, size_t n) {
        if (std::fwrite(p, 1, n, f) != n) {
            std::fclose(f);
            throw IoError("write failure: " + path);
        }
    };
    wr(kMagic, 4);
    wr(&kVersion, 4);
    uint64_t fp = graph.fingerprint();
    wr(&fp, 8);
    uint32_t np = static_cast<uint32_t>(w.params.size());
    wr(&np, 4);
    for (const auto &p : w.params) {
        uint32_t nd = static_cast<uint32_t>(p.shape.size());
        wr(&nd, 4);
        for (int d : p.shape) {
            uint32_t du = static_cast<uint32_t>(d);
            wr(&du, 4);
        }
        wr(p.data.data(), p.data.size() * sizeof(float));
    }
    std::fclose(f);
}

Weights load_weights(const std::string &path, const MlpGraph &graph) {
    FILE *f = std::fopen(path.c_str(), "rb");
    if (!f)
        throw IoError("cannot open for reading: " + path);
    auto rd = [f](void *p, size_t n) {
        if (std::fread(p, 1, n, f) != n) {
            std::fclose(f);
            throw TruncatedFile("unexpected end of weights file");
        }
    };
    char magic[4];
    rd(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0) {
        std::fclose(f);
        throw FormatError("not a NBWT weights file: " + path);
    }
    uint32_t ver;
    rd(&ver, 4);
    if (ver != kVersion) {
        std::fclose(f);
        throw FormatError("unsupported NBWT version");
    }
    uint64_t fp;
    rd(&fp, 8);
    if (fp != graph.fingerprint()) {
        std::fclose(f);
        throw FormatError("weights fingerprint does not match the graph: " + path);
    }
    uint32_t np;
    rd(&np, 4);
    Weights w;
    w.params.resize(np);
    for (auto &p : w.params) {
        uint32_t nd;
        rd(&nd, 4);
        p.shape.resize(nd);
        for (auto &d : p.shape) {
            uint32_t du;
            rd(&du, 4);
            d = static_cast<int>(du);
        }
        p.data.resize(Tensor::numel_of(p.shape));
        rd(p.data.data(), p.data.size() * sizeof(float));
    }
    std::fclose(f);
    return w;
}

uint64_t peek_fingerprint(const std::string &path) {
    FILE *f = std::fopen(path.c_str(), "rb");
    if (!f)
        throw IoError("cannot open for reading: " + path);
    char header[16];
    if (std::fread(header, 1, 16, f) != 16) {
        std::fclose(f);
        throw TruncatedFile("unexpected end of weights file");
    }
    std::fclose(f);
    if (std::memcmp(header, kMagic, 4) != 0)
        throw FormatError("not a NBWT weights file: " + path);
    uint64_t fp;
    std::memcpy(&fp, header + 8, 8);
    return fp;
}

} // namespace nbrdf::nn
