#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nbrdf/layered/oracle.hpp"

namespace nbrdf {

enum class BrdfKind : uint8_t {
    Conductor = 0,
    Dielectric = 1,
    TwoLayer = 2,
    ThreeLayer = 3,
};

// One tabulated BRDF: parameters plus dense single-channel values over all
// (wi, wo) grid pairs, in-direction-major, cosine excluded.
struct BrdfRecord {
    BrdfKind kind = BrdfKind::Conductor;
    std::vector<double> params;
    std::vector<float> values;
};

// Parameter layouts (doubles, in order):
//   conductor:   alpha, r0
//   dielectric:  alpha, eta
//   two_layer:   alpha1, eta, alpha2, r0, A, sigma_t, top_idx, bottom_idx
//   three_layer: alpha1, eta, A, sigma_t,
//                nested alpha1, eta, alpha2, r0, A, sigma_t,
//                top_idx, bottom_two_layer_idx
// Indices refer to the dielectric / conductor / two-layer record lists.

struct DatasetManifest {
    int n_conductor = 50;
    int n_dielectric = 50;
    int n_two_layer = 400;
    int n_three_layer = 60;
    int n_two_layer_val = 20; // last K two-layer records are validation
    uint64_t seed = 1;
    int n_theta = 4, n_phi = 6; // per-hemisphere grid, desk scale
    int mc_paths = 512;         // oracle paths per direction pair

    int dirs_per_hemisphere() const { return n_theta * n_phi; }
    int pairs_per_record() const {
        return dirs_per_hemisphere() * dirs_per_hemisphere();
    }
};

DatasetManifest desk_manifest();
DatasetManifest paper_manifest();

struct Dataset {
    DatasetManifest manifest;
    std::vector<BrdfRecord> records;

    std::vector<Direction> grid() const {
        return stratified_hemisphere_grid(manifest.n_theta, manifest.n_phi);
    }
    // Record index ranges per kind, in file order.
    int conductor_begin() const { return 0; }
    int dielectric_begin() const { return manifest.n_conductor; }
    int two_layer_begin() const { return manifest.n_conductor + manifest.n_dielectric; }
    int three_layer_begin() const { return two_layer_begin() + manifest.n_two_layer; }
};

// Table 2 parameter distributions.
ConductorParams sample_conductor_params(RngStream &rng);
DielectricParams sample_dielectric_params(RngStream &rng);
MediumParams sample_medium_params(RngStream &rng);

// Reconstruct the layer stack described by a two- or three-layer record.
LayerStack stack_from_record(const BrdfRecord &rec);

// Generate and write the full corpus. Deterministic under manifest.seed.
void generate_dataset(const DatasetManifest &manifest, const std::string &path);

Dataset load_dataset(const std::string &path);
void save_dataset(const Dataset &ds, const std::string &path);

struct SampleBatch {
    std::vector<int> record;   // record index per sample
    std::vector<Direction> wi;
    std::vector<Direction> wo;
    std::vector<float> value;
    size_t size() const { return record.size(); }
};

// Deterministic shuffled pass over every (record, pair) tuple of the listed
// records; one epoch yields each tuple exactly once.
class BatchIterator {
  public:
    BatchIterator(const Dataset &ds, std::vector<int> record_indices, int batch_size,
                  uint64_t shuffle_seed);
    // Returns false at the end of the epoch.
    bool next(SampleBatch *out);
    void reset(uint64_t shuffle_seed);

  private:
    const Dataset &ds_;
    std::vector<int> records_;
    std::vector<Direction> grid_;
    std::vector<int64_t> order_;
    int batch_size_;
    size_t cursor_ = 0;
};

} // namespace nbrdf
