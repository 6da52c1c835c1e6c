#pragma once

#include <functional>
#include <string>
#include <vector>

#include "nbrdf/data/dataset.hpp"
#include "nbrdf/nn/adam.hpp"
#include "nbrdf/nn/io.hpp"
#include "nbrdf/nn/losses.hpp"

namespace nbrdf {

constexpr int kLatentDim = 32;

// Per-channel 32-dim latent vectors; the universal BRDF operand.
struct LatentBrdf {
    int channels = 1;
    std::vector<float> data; // channels * kLatentDim, channel-major

    LatentBrdf() : data(kLatentDim, 1.0f) {}
    explicit LatentBrdf(int ch) : channels(ch), data(ch * kLatentDim, 1.0f) {}
    float *channel(int c) { return data.data() + c * kLatentDim; }
    const float *channel(int c) const { return data.data() + c * kLatentDim; }
};

// "NBLV" latent sidecar file.
void save_latents(const std::string &path, const std::vector<LatentBrdf> &latents);
std::vector<LatentBrdf> load_latents(const std::string &path);

// Canonical evaluation network: input 38 (32 latent + wi + wo), stem
// FC(256)+LN+ReLU, eight residual-block units with stem skips into units
// 3, 5 and 7, linear scalar output.
nn::MlpGraph build_decoder();

struct Decoder {
    nn::MlpGraph graph;
    nn::Weights weights;
};

// Batched raw forward pass: row r of `latent_rows` is one 32-float latent.
// Output is unclamped (training convention).
nn::Tensor decode_batch_raw(const Decoder &dec, const std::vector<const float *> &latent_rows,
                            const std::vector<Direction> &wi, const std::vector<Direction> &wo);

// Per-channel evaluation, negatives clamped to zero (rendering boundary).
std::vector<double> eval_brdf(const Decoder &dec, const LatentBrdf &latent, const Direction &wi,
                              const Direction &wo);

struct DecoderTrainConfig {
    int epochs = 10;
    int batch_size = 1024;
    double lr_weights = 3e-4;
    double lr_latents = 1e-4;
    double lr_decay = 0.9; // per epoch, both rates
    uint64_t seed = 1;
    std::string checkpoint_dir; // optional; per-epoch checkpoints when set
    std::ostream *log = nullptr;
};

struct DecoderTrainResult {
    Decoder decoder;
    // One latent per dataset record, in record order. Latents of the
    // held-out two-layer tail are optimized with frozen weights so held-out
    // fit can be measured.
    std::vector<LatentBrdf> latents;
    std::vector<double> train_loss; // per epoch
    std::vector<double> val_loss;   // per epoch
};

// Joint optimization of weights and per-record latents with the L1 loss.
// Validation records update only their latents, never the weights.
DecoderTrainResult train_decoder(const Dataset &ds, const DecoderTrainConfig &cfg);

struct ProjectionConfig {
    int batch = 512;
    int max_steps = 2000;
    int window = 50;
    double rel_tol = 1e-4;
    double lr = 1e-4;
    uint64_t seed = 7;
};

// Supplies target BRDF values for a projection step.
using TargetSampler = std::function<void(int n, RngStream &rng, std::vector<Direction> &wi,
                                         std::vector<Direction> &wo, std::vector<float> &value)>;

TargetSampler target_from_eval(std::function<double(const Direction &, const Direction &)> fn);
TargetSampler target_from_grid(std::vector<Direction> grid, std::vector<float> values);

struct ProjectionResult {
    std::vector<float> latent; // kLatentDim
    std::vector<double> best_loss_curve;
    int steps = 0;
};

// Frozen-weight latent optimization from all-ones (single channel).
ProjectionResult project_channel(const Decoder &dec, const TargetSampler &target,
                                 const ProjectionConfig &cfg);

// Joint projection of many single-channel targets; one optimization with a
// shared batch, much cheaper than independent runs.
std::vector<std::vector<float>> project_channels(const Decoder &dec,
                                                 const std::vector<TargetSampler> &targets,
                                                 const ProjectionConfig &cfg);

LatentBrdf project_brdf(const Decoder &dec, const std::vector<TargetSampler> &per_channel,
                        const ProjectionConfig &cfg);

// Mean relative L1 between decoded values and a reference grid:
// mean|a-b| / (mean|b| + 1e-6).
double grid_relative_l1(const Decoder &dec, const float *latent_channel,
                        const std::vector<Direction> &grid, const std::vector<float> &ref);

} // namespace nbrdf
