#pragma once

#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "nbrdf/neural/decoder.hpp"

namespace nbrdf {

// Normalized average of a BRDF over incoming directions, tabulated in
// projected-half-vector space (hx, hy) in [-1,1]^2.
struct GndfTable {
    int resolution = 40;
    std::vector<double> grid; // resolution^2, row-major over (ix -> hx, iy -> hy)

    double at(int ix, int iy) const { return grid[static_cast<size_t>(iy) * resolution + ix]; }
};

// Mixture density of a disk-truncated Gaussian specular term and a
// Lambertian term; the only state the sampler needs at render time.
struct ProxyParams {
    double sigma = 0.1; // Gaussian stddev in projected-half-vector units
    double w = 0.5;     // Lambertian mixture weight in [0,1]
};

using BrdfEvalFn = std::function<double(const Direction &wi, const Direction &wo)>;

// Averages the half-angle-space lobes of `eval` over a stratified grid of
// n_wi_theta x n_wi_phi incoming directions; the result sums to 1.
// Throws AllZeroGndf when the BRDF is identically zero on the grid.
GndfTable compute_gndf(const BrdfEvalFn &eval, int resolution = 40, int n_wi_theta = 40,
                       int n_wi_phi = 40);

// Same construction with whole-hemisphere batched decoding; much faster
// for neural BRDFs than the scalar callback.
GndfTable compute_gndf(const Decoder &dec, const float *latent_channel, int resolution = 40,
                       int n_wi_theta = 40, int n_wi_phi = 40);

// Density per steradian in wo:
//   w cos(theta_o)/pi + (1-w) G_sigma(hx,hy) cos(theta_h) / (4 |wo.h|),
// with G_sigma normalized over the unit disk in closed form.
double proxy_pdf(const ProxyParams &p, const Direction &wi, const Direction &wo);

// Analytic partial derivatives of proxy_pdf, used by the training head.
void proxy_pdf_grad(const ProxyParams &p, const Direction &wi, const Direction &wo,
                    double *d_sigma, double *d_w);

struct ProxySample {
    Direction wo;
    double pdf = 0;
};

// Branch on w, cosine-sample or draw (hx,hy) from the truncated Gaussian
// via its inverse radial CDF; below-horizon reflections retry up to 64
// times before falling back to the Lambertian branch.
ProxySample sample_proxy(const ProxyParams &p, const Direction &wi, RngStream &rng);

// 35 -> FC(128)+LN+ReLU -> FC(512)+LN+ReLU -> FC(128)+LN+ReLU ->
// FC(32)+LN+ReLU -> FC(2). Raw outputs map to parameters through
// sigma = softplus(.) + 1e-3 and w = sigmoid(.).
nn::MlpGraph build_sampler_net();

struct SamplerNet {
    nn::MlpGraph graph;
    nn::Weights weights;
};

struct SamplerTrainItem {
    std::vector<float> latent; // kLatentDim
    GndfTable gndf;
};

struct SamplerTrainConfig {
    int epochs = 10;
    double lr = 3e-5;
    double lr_decay = 0.7; // applied every lr_decay_epochs
    int lr_decay_epochs = 3;
    int n_wi_theta = 8, n_wi_phi = 8; // directions averaged per prediction
    uint64_t seed = 1;
    std::ostream *log = nullptr;
};

struct SamplerTrainResult {
    SamplerNet net;
    std::vector<double> loss; // mean KLD per epoch
};

// Fits the network so that the wi-averaged proxy density matches each
// item's GNDF under the softmax KL divergence.
SamplerTrainResult train_sampler(const std::vector<SamplerTrainItem> &items,
                                 const SamplerTrainConfig &cfg);

// Network outputs averaged over a 40x40 wi grid; computed once per latent.
ProxyParams fit_params(const SamplerNet &net, const float *latent_channel);

} // namespace nbrdf
