#include "nbrdf/neural/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nbrdf/core/spherical.hpp"

namespace nbrdf {

namespace {

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }
double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double disk_mass(double sigma) { return 1.0 - std::exp(-1.0 / (2.0 * sigma * sigma)); }

// Bin centers of an R x R grid over [-1,1]^2 that lie inside the unit disk
// and whose half-angle lift at wi = +z stays above the horizon.
struct LiftedBins {
    std::vector<int> bin;       // flat grid index
    std::vector<Direction> wo;  // lifted outgoing direction
};

LiftedBins lifted_bins(int R) {
    LiftedBins out;
    for (int iy = 0; iy < R; ++iy)
        for (int ix = 0; ix < R; ++ix) {
            double hx = -1.0 + (ix + 0.5) * 2.0 / R;
            double hy = -1.0 + (iy + 0.5) * 2.0 / R;
            double r2 = hx * hx + hy * hy;
            if (r2 >= 1.0)
                continue;
            double hz = std::sqrt(1.0 - r2);
            // wo = reflect(+z, h) = 2 hz h - z
            Direction wo{2 * hz * hx, 2 * hz * hy, 2 * hz * hz - 1};
            if (wo.z <= 1e-4)
                continue;
            out.bin.push_back(iy * R + ix);
            out.wo.push_back(wo);
        }
    return out;
}

const Direction kCanonicalWi{0, 0, 1};

} // namespace

namespace {

// Shared accumulation core: eval_row fills f(wi_grid[k], wo_grid[j]) for
// one incoming direction.
template <typename EvalRow>
GndfTable gndf_core(const EvalRow &eval_row, int R, int n_wi_theta, int n_wi_phi) {
    GndfTable t;
    t.resolution = R;
    t.grid.assign(static_cast<size_t>(R) * R, 0.0);

    auto wi_grid = stratified_hemisphere_grid(n_wi_theta, n_wi_phi);
    auto wo_grid = stratified_hemisphere_grid(R, R);
    const double d_theta = (kPi / 2) / R, d_phi = kTwoPi / R;
    const double bin_area = (2.0 / R) * (2.0 / R);

    std::vector<double> values(wo_grid.size());
    for (int k = 0; k < static_cast<int>(wi_grid.size()); ++k) {
        const Direction &wi = wi_grid[k];
        eval_row(wi, wo_grid, values);
        for (size_t j = 0; j < wo_grid.size(); ++j) {
            double f = values[j];
            if (!(f > 0))
                continue;
            const Direction &wo = wo_grid[j];
            Direction h = half_vector(wi, wo);
            int ix = std::clamp(static_cast<int>((h.x + 1.0) * 0.5 * R), 0, R - 1);
            int iy = std::clamp(static_cast<int>((h.y + 1.0) * 0.5 * R), 0, R - 1);
            double d_omega = std::sqrt(std::max(0.0, 1.0 - wo.z * wo.z)) * d_theta * d_phi;
            t.grid[static_cast<size_t>(iy) * R + ix] += f * d_omega / bin_area;
        }
    }

    double sum = std::accumulate(t.grid.begin(), t.grid.end(), 0.0);
    if (sum <= 0)
        throw AllZeroGndf("GNDF accumulated no energy");
    for (double &v : t.grid)
        v /= sum;
    return t;
}

} // namespace

GndfTable compute_gndf(const BrdfEvalFn &eval, int resolution, int n_wi_theta, int n_wi_phi) {
    auto eval_row = [&eval](const Direction &wi, const std::vector<Direction> &wo_grid,
                            std::vector<double> &out) {
#pragma omp parallel for schedule(static)
        for (int j = 0; j < static_cast<int>(wo_grid.size()); ++j)
            out[j] = eval(wi, wo_grid[j]);
    };
    return gndf_core(eval_row, resolution, n_wi_theta, n_wi_phi);
}

GndfTable compute_gndf(const Decoder &dec, const float *latent_channel, int resolution,
                       int n_wi_theta, int n_wi_phi) {
    auto eval_row = [&dec, latent_channel](const Direction &wi,
                                           const std::vector<Direction> &wo_grid,
                                           std::vector<double> &out) {
        std::vector<const float *> rows(wo_grid.size(), latent_channel);
        std::vector<Direction> wis(wo_grid.size(), wi);
        nn::Tensor v = decode_batch_raw(dec, rows, wis, wo_grid);
        for (size_t j = 0; j < wo_grid.size(); ++j)
            out[j] = std::max(0.0f, v.data[j]);
    };
    return gndf_core(eval_row, resolution, n_wi_theta, n_wi_phi);
}

double proxy_pdf(const ProxyParams &p, const Direction &wi, const Direction &wo) {
    if (wi.z <= 0 || wo.z < 0)
        throw InvalidDirection("proxy_pdf requires wi above and wo at or above the horizon");
    double lamb = p.w * wo.z * kInvPi;
    Direction h = half_vector(wi, wo);
    double woh = std::abs(dot(wo, h));
    if (woh < 1e-9)
        return lamb;
    double r2 = h.x * h.x + h.y * h.y;
    double s2 = p.sigma * p.sigma;
    double g = std::exp(-r2 / (2 * s2)) / (kTwoPi * s2 * disk_mass(p.sigma));
    return lamb + (1 - p.w) * g * h.z / (4 * woh);
}

void proxy_pdf_grad(const ProxyParams &p, const Direction &wi, const Direction &wo,
                    double *d_sigma, double *d_w) {
    Direction h = half_vector(wi, wo);
    double woh = std::abs(dot(wo, h));
    if (woh < 1e-9) {
        *d_sigma = 0;
        *d_w = wo.z * kInvPi;
        return;
    }
    double r2 = h.x * h.x + h.y * h.y;
    double s = p.sigma, s2 = s * s;
    double E = std::exp(-r2 / (2 * s2));
    double edge = std::exp(-1.0 / (2 * s2));
    double T = 1 - edge;
    double N = kTwoPi * s2 * T;
    double dE = E * r2 / (s2 * s);
    double dN = 4 * kPi * s * T - kTwoPi * edge / s;
    double g = E / N;
    double dg = (dE * N - E * dN) / (N * N);
    double k_geom = h.z / (4 * woh);
    *d_sigma = (1 - p.w) * k_geom * dg;
    *d_w = wo.z * kInvPi - g * k_geom;
}

ProxySample sample_proxy(const ProxyParams &p, const Direction &wi, RngStream &rng) {
    if (wi.z <= 0)
        throw InvalidDirection("sample_proxy requires wi.z > 0");
    ProxySample out;
    bool lambertian = rng.next_double() < p.w;
    if (!lambertian) {
        double mass = disk_mass(p.sigma);
        for (int attempt = 0; attempt < 64; ++attempt) {
            double u = rng.next_double();
            double r = p.sigma * std::sqrt(-2.0 * std::log1p(-u * mass));
            r = std::min(r, 1.0 - 1e-12);
            double phi = kTwoPi * rng.next_double();
            double hx = r * std::cos(phi), hy = r * std::sin(phi);
            Direction h{hx, hy, std::sqrt(1.0 - hx * hx - hy * hy)};
            Direction wo = reflect(wi, h);
            if (wo.z > 0) {
                out.wo = wo;
                out.pdf = proxy_pdf(p, wi, wo);
                return out;
            }
        }
    }
    out.wo = cosine_sample_hemisphere(rng);
    out.pdf = proxy_pdf(p, wi, out.wo);
    return out;
}

nn::MlpGraph build_sampler_net() {
    nn::GraphBuilder b(kLatentDim + 3);
    b.fc_ln_relu(128).fc_ln_relu(512).fc_ln_relu(128).fc_ln_relu(32).linear(2);
    return b.build();
}

namespace {

nn::Tensor sampler_input(const float *latent, const std::vector<Direction> &wi_grid) {
    nn::Tensor in({static_cast<int>(wi_grid.size()), kLatentDim + 3});
    for (size_t k = 0; k < wi_grid.size(); ++k) {
        float *row = in.row(static_cast<int>(k));
        for (int c = 0; c < kLatentDim; ++c)
            row[c] = latent[c];
        row[kLatentDim + 0] = static_cast<float>(wi_grid[k].x);
        row[kLatentDim + 1] = static_cast<float>(wi_grid[k].y);
        row[kLatentDim + 2] = static_cast<float>(wi_grid[k].z);
    }
    return in;
}

// Averaged (sigma, w) from raw network outputs, plus the per-row squash
// derivatives needed by the training head.
ProxyParams average_params(const nn::Tensor &raw, std::vector<double> *d_sigma_d_raw = nullptr,
                           std::vector<double> *d_w_d_raw = nullptr) {
    const int K = raw.rows();
    double sig = 0, w = 0;
    if (d_sigma_d_raw)
        d_sigma_d_raw->resize(K);
    if (d_w_d_raw)
        d_w_d_raw->resize(K);
    for (int k = 0; k < K; ++k) {
        double s_raw = raw.row(k)[0], t_raw = raw.row(k)[1];
        sig += softplus(s_raw) + 1e-3;
        double wk = logistic(t_raw);
        w += wk;
        if (d_sigma_d_raw)
            (*d_sigma_d_raw)[k] = logistic(s_raw);
        if (d_w_d_raw)
            (*d_w_d_raw)[k] = wk * (1 - wk);
    }
    return {sig / K, w / K};
}

} // namespace

SamplerTrainResult train_sampler(const std::vector<SamplerTrainItem> &items,
                                 const SamplerTrainConfig &cfg) {
    if (items.empty())
        throw Error("train_sampler: no training items");
    SamplerTrainResult res;
    res.net.graph = build_sampler_net();
    res.net.weights = nn::init_weights<float>(res.net.graph, cfg.seed);
    auto adam = nn::AdamState::for_weights(res.net.weights, cfg.lr);

    auto wi_grid = stratified_hemisphere_grid(cfg.n_wi_theta, cfg.n_wi_phi);
    const int K = static_cast<int>(wi_grid.size());

    // Evaluation points shared by all items of one resolution.
    const int R = items[0].gndf.resolution;
    LiftedBins bins = lifted_bins(R);
    const int M = static_cast<int>(bins.bin.size());

    RngStream shuffle_rng(cfg.seed, 0x5A3);
    std::vector<int> order(items.size());
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[shuffle_rng.next_below(static_cast<uint32_t>(i))]);
        double loss_sum = 0;
        for (int idx : order) {
            const auto &item = items[idx];
            if (item.gndf.resolution != R)
                throw ShapeMismatch("train_sampler: mixed GNDF resolutions");
            nn::Tensor input = sampler_input(item.latent.data(), wi_grid);
            nn::ForwardTrace trace;
            nn::Tensor raw = nn::forward(res.net.graph, res.net.weights, input, &trace);
            std::vector<double> ds_draw, dw_draw;
            ProxyParams p = average_params(raw, &ds_draw, &dw_draw);

            nn::Tensor pred({1, M}), gt({1, M});
            for (int j = 0; j < M; ++j) {
                pred.data[j] = static_cast<float>(proxy_pdf(p, kCanonicalWi, bins.wo[j]));
                gt.data[j] = static_cast<float>(item.gndf.grid[bins.bin[j]]);
            }
            nn::Tensor dpred;
            float loss = nn::kld_loss(pred, gt, &dpred);
            if (!std::isfinite(loss))
                throw DivergedLoss("sampler training loss is not finite");
            loss_sum += loss;

            double dL_dsigma = 0, dL_dw = 0;
            for (int j = 0; j < M; ++j) {
                double ds, dw;
                proxy_pdf_grad(p, kCanonicalWi, bins.wo[j], &ds, &dw);
                dL_dsigma += dpred.data[j] * ds;
                dL_dw += dpred.data[j] * dw;
            }
            nn::Tensor upstream({K, 2});
            for (int k = 0; k < K; ++k) {
                upstream.row(k)[0] = static_cast<float>(dL_dsigma * ds_draw[k] / K);
                upstream.row(k)[1] = static_cast<float>(dL_dw * dw_draw[k] / K);
            }
            auto grads = nn::backward(res.net.graph, res.net.weights, trace, upstream);
            nn::Gradients wg;
            wg.params = std::move(grads.params);
            adam_step(adam, res.net.weights, wg);
        }
        res.loss.push_back(loss_sum / items.size());
        if ((epoch + 1) % cfg.lr_decay_epochs == 0)
            adam.lr *= cfg.lr_decay;
        if (cfg.log)
            (*cfg.log) << "epoch " << epoch << " kld " << res.loss.back() << "\n";
    }
    return res;
}

ProxyParams fit_params(const SamplerNet &net, const float *latent_channel) {
    auto wi_grid = stratified_hemisphere_grid(40, 40);
    nn::Tensor input = sampler_input(latent_channel, wi_grid);
    nn::Tensor raw = nn::forward(net.graph, net.weights, input);
    return average_params(raw);
}

} // namespace nbrdf
