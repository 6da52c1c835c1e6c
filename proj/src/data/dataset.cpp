#include "nbrdf/data/dataset.hpp"

#include <cstdio>
#include <cstring>
#include <numeric>

#include "nbrdf/core/errors.hpp"

namespace nbrdf {

namespace {

constexpr char kMagic[4] = {'N', 'B', 'D', 'S'};
constexpr uint32_t kVersion = 1;

// Stream ids are partitioned by purpose so draws never collide.
constexpr uint64_t kStreamParams = 1;
constexpr uint64_t kStreamTabulateBase = 1000;

struct Writer {
    FILE *f;
    explicit Writer(const std::string &path) : f(std::fopen(path.c_str(), "wb")) {
        if (!f)
            throw IoError("cannot open for writing: " + path);
    }
    ~Writer() { if (f) std::fclose(f); }
    void bytes(const void *p, size_t n) {
        if (std::fwrite(p, 1, n, f) != n)
            throw IoError("write failure");
    }
    template <typename T> void pod(const T &v) { bytes(&v, sizeof(T)); }
};

struct Reader {
    FILE *f;
    explicit Reader(const std::string &path) : f(std::fopen(path.c_str(), "rb")) {
        if (!f)
            throw IoError("cannot open for reading: " + path);
    }
    ~Reader() { if (f) std::fclose(f); }
    void bytes(void *p, size_t n) {
        if (std::fread(p, 1, n, f) != n)
            throw TruncatedFile("unexpected end of file");
    }
    template <typename T> T pod() {
        T v;
        bytes(&v, sizeof(T));
        return v;
    }
};

uint64_t record_seed(uint64_t seed, int record_index) {
    // splitmix-style mix so per-record streams are decorrelated
    uint64_t x = seed + 0x9E3779B97f4A7C15ULL * (record_index + 1);
    x ^= x >> 30; x *= 0xBF58476D1CE4E5B9ULL;
    x ^= x >> 27; x *= 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::vector<float> tabulate_analytic(const BrdfRecord &rec, const std::vector<Direction> &grid) {
    size_t n = grid.size();
    std::vector<float> v(n * n);
    for (size_t i = 0; i < n; ++i)
        for (size_t o = 0; o < n; ++o) {
            double f;
            if (rec.kind == BrdfKind::Conductor)
                f = eval_conductor({rec.params[0], rec.params[1]}, grid[i], grid[o]);
            else
                f = eval_dielectric_reflect({rec.params[0], rec.params[1]}, grid[i], grid[o]);
            v[i * n + o] = static_cast<float>(f);
        }
    return v;
}

} // namespace

DatasetManifest desk_manifest() { return DatasetManifest{}; }

DatasetManifest paper_manifest() {
    DatasetManifest m;
    m.n_conductor = 300;
    m.n_dielectric = 300;
    m.n_two_layer = 12720;
    m.n_three_layer = 1800;
    m.n_two_layer_val = 720;
    m.n_theta = 25;
    m.n_phi = 25;
    return m;
}

ConductorParams sample_conductor_params(RngStream &rng) {
    double u = 0.216 + (1.0 - 0.216) * rng.next_double();
    return {u * u * u, rng.next_double()};
}

DielectricParams sample_dielectric_params(RngStream &rng) {
    double u = 0.216 + (1.0 - 0.216) * rng.next_double();
    double alpha = u * u * u;
    double eta = 1.05 + (2.0 - 1.05) * rng.next_double();
    return {alpha, eta};
}

MediumParams sample_medium_params(RngStream &rng) {
    double u = rng.next_double();
    static const double kSigmaT[4] = {0, 1, 2, 5};
    return {1.0 - u * u, kSigmaT[rng.next_below(4)]};
}

LayerStack stack_from_record(const BrdfRecord &rec) {
    LayerStack s;
    if (rec.kind == BrdfKind::TwoLayer) {
        s.top = {rec.params[0], rec.params[1]};
        s.bottom_conductor = {rec.params[2], rec.params[3]};
        s.medium = {rec.params[4], rec.params[5]};
    } else if (rec.kind == BrdfKind::ThreeLayer) {
        s.top = {rec.params[0], rec.params[1]};
        s.medium = {rec.params[2], rec.params[3]};
        auto nested = std::make_shared<LayerStack>();
        nested->top = {rec.params[4], rec.params[5]};
        nested->bottom_conductor = {rec.params[6], rec.params[7]};
        nested->medium = {rec.params[8], rec.params[9]};
        s.bottom_stack = nested;
    } else {
        throw Error("stack_from_record requires a layered record");
    }
    return s;
}

void generate_dataset(const DatasetManifest &m, const std::string &path) {
    Dataset ds;
    ds.manifest = m;
    auto grid = ds.grid();
    RngStream prng(m.seed, kStreamParams);

    for (int k = 0; k < m.n_conductor; ++k) {
        BrdfRecord r;
        r.kind = BrdfKind::Conductor;
        ConductorParams p = sample_conductor_params(prng);
        r.params = {p.alpha, p.r0};
        ds.records.push_back(std::move(r));
    }
    for (int k = 0; k < m.n_dielectric; ++k) {
        BrdfRecord r;
        r.kind = BrdfKind::Dielectric;
        DielectricParams p = sample_dielectric_params(prng);
        r.params = {p.alpha, p.eta};
        ds.records.push_back(std::move(r));
    }
    for (int k = 0; k < m.n_two_layer; ++k) {
        BrdfRecord r;
        r.kind = BrdfKind::TwoLayer;
        int ti = static_cast<int>(prng.next_below(m.n_dielectric));
        int bi = static_cast<int>(prng.next_below(m.n_conductor));
        const auto &tp = ds.records[ds.dielectric_begin() + ti].params;
        const auto &bp = ds.records[ds.conductor_begin() + bi].params;
        MediumParams med = sample_medium_params(prng);
        r.params = {tp[0], tp[1], bp[0], bp[1], med.albedo, med.sigma_t,
                    double(ti), double(bi)};
        ds.records.push_back(std::move(r));
    }
    for (int k = 0; k < m.n_three_layer; ++k) {
        BrdfRecord r;
        r.kind = BrdfKind::ThreeLayer;
        int ti = static_cast<int>(prng.next_below(m.n_dielectric));
        int bi = static_cast<int>(prng.next_below(m.n_two_layer));
        const auto &tp = ds.records[ds.dielectric_begin() + ti].params;
        const auto &bp = ds.records[ds.two_layer_begin() + bi].params;
        MediumParams med = sample_medium_params(prng);
        r.params = {tp[0], tp[1], med.albedo, med.sigma_t,
                    bp[0], bp[1], bp[2], bp[3], bp[4], bp[5],
                    double(ti), double(bi)};
        ds.records.push_back(std::move(r));
    }

    // Tabulation: analytic for single-layer records, oracle for layered.
    for (size_t i = 0; i < ds.records.size(); ++i) {
        BrdfRecord &r = ds.records[i];
        if (r.kind == BrdfKind::Conductor || r.kind == BrdfKind::Dielectric) {
            r.values = tabulate_analytic(r, grid);
        } else {
            LayerStack st = stack_from_record(r);
            uint64_t rs = record_seed(m.seed, static_cast<int>(i)) + kStreamTabulateBase;
            r.values = tabulate_layered(st, grid, m.mc_paths, rs);
        }
    }

    save_dataset(ds, path);
}

void save_dataset(const Dataset &ds, const std::string &path) {
    Writer w(path);
    w.bytes(kMagic, 4);
    w.pod(kVersion);
    const auto &m = ds.manifest;
    w.pod<uint32_t>(m.n_conductor);
    w.pod<uint32_t>(m.n_dielectric);
    w.pod<uint32_t>(m.n_two_layer);
    w.pod<uint32_t>(m.n_three_layer);
    w.pod<uint32_t>(m.n_two_layer_val);
    w.pod<uint64_t>(m.seed);
    w.pod<uint32_t>(m.n_theta);
    w.pod<uint32_t>(m.n_phi);
    w.pod<uint32_t>(m.mc_paths);
    w.pod<uint32_t>(static_cast<uint32_t>(ds.records.size()));
    for (const auto &r : ds.records) {
        w.pod<uint8_t>(static_cast<uint8_t>(r.kind));
        w.pod<uint32_t>(static_cast<uint32_t>(r.params.size()));
        w.bytes(r.params.data(), r.params.size() * sizeof(double));
        w.pod<uint32_t>(static_cast<uint32_t>(r.values.size()));
        w.bytes(r.values.data(), r.values.size() * sizeof(float));
    }
}

Dataset load_dataset(const std::string &path) {
    Reader rd(path);
    char magic[4];
    rd.bytes(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0)
        throw FormatError("not a NBDS dataset file");
    if (rd.pod<uint32_t>() != kVersion)
        throw FormatError("unsupported NBDS version");
    Dataset ds;
    auto &m = ds.manifest;
    m.n_conductor = rd.pod<uint32_t>();
    m.n_dielectric = rd.pod<uint32_t>();
    m.n_two_layer = rd.pod<uint32_t>();
    m.n_three_layer = rd.pod<uint32_t>();
    m.n_two_layer_val = rd.pod<uint32_t>();
    m.seed = rd.pod<uint64_t>();
    m.n_theta = rd.pod<uint32_t>();
    m.n_phi = rd.pod<uint32_t>();
    m.mc_paths = rd.pod<uint32_t>();
    uint32_t n = rd.pod<uint32_t>();
    ds.records.resize(n);
    for (auto &r : ds.records) {
        r.kind = static_cast<BrdfKind>(rd.pod<uint8_t>());
        r.params.resize(rd.pod<uint32_t>());
        rd.bytes(r.params.data(), r.params.size() * sizeof(double));
        r.values.resize(rd.pod<uint32_t>());
        rd.bytes(r.values.data(), r.values.size() * sizeof(float));
    }
    return ds;
}

BatchIterator::BatchIterator(const Dataset &ds, std::vector<int> record_indices, int batch_size,
                             uint64_t shuffle_seed)
    : ds_(ds), records_(std::move(record_indices)), grid_(ds.grid()), batch_size_(batch_size) {
    order_.resize(records_.size() * static_cast<size_t>(ds.manifest.pairs_per_record()));
    std::iota(order_.begin(), order_.end(), 0);
    reset(shuffle_seed);
}

void BatchIterator::reset(uint64_t shuffle_seed) {
    std::iota(order_.begin(), order_.end(), 0);
    RngStream rng(shuffle_seed, 0);
    for (size_t i = order_.size(); i > 1; --i)
        std::swap(order_[i - 1], order_[rng.next_below(static_cast<uint32_t>(i))]);
    cursor_ = 0;
}

bool BatchIterator::next(SampleBatch *out) {
    if (cursor_ >= order_.size())
        return false;
    size_t end = std::min(order_.size(), cursor_ + static_cast<size_t>(batch_size_));
    size_t pairs = ds_.manifest.pairs_per_record();
    size_t n_dirs = grid_.size();
    out->record.clear();
    out->wi.clear();
    out->wo.clear();
    out->value.clear();
    for (size_t c = cursor_; c < end; ++c) {
        int64_t id = order_[c];
        int rec = records_[id / pairs];
        int64_t pair = id % pairs;
        out->record.push_back(rec);
        out->wi.push_back(grid_[pair / n_dirs]);
        out->wo.push_back(grid_[pair % n_dirs]);
        out->value.push_back(ds_.records[rec].values[pair]);
    }
    cursor_ = end;
    return true;
}

} // namespace nbrdf
