#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "nbrdf/neural/decoder.hpp"

namespace nbrdf {

// Latent-space operator: {V_top, V_bottom, A, sigma_T} -> V_layered.
// input(66) -> FC(512)+LN+ReLU -> 4 x [ResidualBlock(512) ->
// FC(512)+LN+ReLU] -> FC(32) linear.
nn::MlpGraph build_layering_net();

struct LayeringNet {
    nn::MlpGraph graph;
    nn::Weights weights;
};

// One supervision sample; all three latents come from the same decoder.
struct LayerTriple {
    float v_top[kLatentDim];
    float v_bottom[kLatentDim];
    float a = 1.0f;
    float sigma_t = 0.0f;
    float v_gt[kLatentDim];
};

struct TripleSet {
    uint64_t decoder_fingerprint = 0;
    std::vector<LayerTriple> triples;
};

// "NBLT3" triples file (decoder fingerprint embedded).
void save_triples(const std::string &path, const TripleSet &set);
TripleSet load_triples(const std::string &path);

// Per-channel forward pass; a holds one albedo per channel, sigma_t is
// shared. Throws ChannelMismatch on differing channel counts.
LatentBrdf layer(const LayeringNet &net, const LatentBrdf &v_top, const LatentBrdf &v_bottom,
                 const std::vector<double> &a, double sigma_t);

struct LayeringTrainConfig {
    int epochs = 1000;
    int batch_size = 256;
    double lr = 3e-3;
    double lr_decay = 0.7; // applied every lr_decay_epochs
    int lr_decay_epochs = 50;
    int fine_tune_epochs = 50;   // second phase on nested-bottom triples
    double fine_tune_lr = 3e-4;  // rate for the fine-tune phase
    double val_fraction = 0.05;  // tail of the main set held out
    uint64_t seed = 1;
    std::ostream *log = nullptr;
};

struct LayeringTrainResult {
    LayeringNet net;
    std::vector<double> train_loss; // per epoch, both phases appended
    std::vector<double> val_loss;
};

// L1 regression in latent space, then an optional fine-tune phase on
// three-layer triples. Throws MixedDecoderError when the two sets carry
// different decoder fingerprints.
LayeringTrainResult train_layering(const TripleSet &main_set, const TripleSet *fine_tune,
                                   const LayeringTrainConfig &cfg);

} // namespace nbrdf
