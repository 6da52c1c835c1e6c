#include "nbrdf/neural/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>
#include <memory>
#include <ostream>

#include "nbrdf/core/spherical.hpp"

namespace nbrdf {

using nn::Tensor;

namespace {
constexpr char kLatentMagic[4] = {'N', 'B', 'L', 'V'};
constexpr uint32_t kLatentVersion = 1;

void fill_input_row(float *row, const float *latent, const Direction &wi, const Direction &wo) {
    std::memcpy(row, latent, kLatentDim * sizeof(float));
    row[kLatentDim + 0] = static_cast<float>(wi.x);
    row[kLatentDim + 1] = static_cast<float>(wi.y);
    row[kLatentDim + 2] = static_cast<float>(wi.z);
    row[kLatentDim + 3] = static_cast<float>(wo.x);
    row[kLatentDim + 4] = static_cast<float>(wo.y);
    row[kLatentDim + 5] = static_cast<float>(wo.z);
}
} // namespace

void save_latents(const std::string &path, const std::vector<LatentBrdf> &latents) {
    FILE *f = std::fopen(path.c_str(), "wb");
    if (!f)
        throw IoError("cannot open for writing: " + path);
    auto wr = [f](const void *p, size_t n) {
        if (std::fwrite(p, 1, n, f) != n) {
            std::fclose(f);
            throw IoError("latent file write failure");
        }
    };
    wr(kLatentMagic, 4);
    wr(&kLatentVersion, 4);
    uint32_t count = static_cast<uint32_t>(latents.size());
    uint32_t channels = latents.empty() ? 1 : static_cast<uint32_t>(latents[0].channels);
    uint32_t dim = kLatentDim;
    wr(&count, 4);
    wr(&channels, 4);
    wr(&dim, 4);
    for (const auto &l : latents) {
        if (static_cast<uint32_t>(l.channels) != channels) {
            std::fclose(f);
            throw ChannelMismatch("mixed channel counts in latent file");
        }
        wr(l.data.data(), l.data.size() * sizeof(float));
    }
    std::fclose(f);
}

std::vector<LatentBrdf> load_latents(const std::string &path) {
    FILE *f = std::fopen(path.c_str(), "rb");
    if (!f)
        throw IoError("cannot open for reading: " + path);
    auto rd = [f](void *p, size_t n) {
        if (std::fread(p, 1, n, f) != n) {
            std::fclose(f);
            throw TruncatedFile("unexpected end of latent file");
        }
    };
    char magic[4];
    rd(magic, 4);
    if (std::memcmp(magic, kLatentMagic, 4) != 0) {
        std::fclose(f);
        throw FormatError("not a NBLV latent file: " + path);
    }
    uint32_t ver, count, channels, dim;
    rd(&ver, 4);
    rd(&count, 4);
    rd(&channels, 4);
    rd(&dim, 4);
    if (ver != kLatentVersion || dim != kLatentDim) {
        std::fclose(f);
        throw FormatError("unsupported NBLV layout");
    }
    std::vector<LatentBrdf> out;
    out.reserve(count);
    for (uint32_t i = 0; i < count; ++i) {
        LatentBrdf l(static_cast<int>(channels));
        rd(l.data.data(), l.data.size() * sizeof(float));
        out.push_back(std::move(l));
    }
    std::fclose(f);
    return out;
}

nn::MlpGraph build_decoder() {
    nn::GraphBuilder b(kLatentDim + 6);
    b.fc_ln_relu(256);
    int stem = b.tap();
    for (int unit = 1; unit <= 8; ++unit) {
        // Bottleneck residual block; the stem skip joins units 3/5/7 at the
        // same pre-normalization point as the block's own residual.
        int s = b.tap();
        b.linear(128).layer_norm().relu().linear(256);
        b.skip_add(s);
        if (unit == 3 || unit == 5 || unit == 7)
            b.skip_add(stem);
        b.layer_norm().relu();
        b.fc_ln_relu(256);
    }
    b.linear(1);
    return b.build();
}

nn::Tensor decode_batch_raw(const Decoder &dec, const std::vector<const float *> &latent_rows,
                            const std::vector<Direction> &wi, const std::vector<Direction> &wo) {
    const int batch = static_cast<int>(latent_rows.size());
    Tensor input({batch, dec.graph.input_dim});
    for (int r = 0; r < batch; ++r)
        fill_input_row(input.row(r), latent_rows[r], wi[r], wo[r]);
    return nn::forward(dec.graph, dec.weights, input);
}

std::vector<double> eval_brdf(const Decoder &dec, const LatentBrdf &latent, const Direction &wi,
                              const Direction &wo) {
    if (wi.z <= 0 || wo.z <= 0)
        throw InvalidDirection("eval_brdf requires upper-hemisphere directions");
    std::vector<const float *> rows;
    std::vector<Direction> wis, wos;
    for (int c = 0; c < latent.channels; ++c) {
        rows.push_back(latent.channel(c));
        wis.push_back(wi);
        wos.push_back(wo);
    }
    Tensor out = decode_batch_raw(dec, rows, wis, wos);
    std::vector<double> v(latent.channels);
    for (int c = 0; c < latent.channels; ++c)
        v[c] = std::max(0.0f, out.data[c]);
    return v;
}

DecoderTrainResult train_decoder(const Dataset &ds, const DecoderTrainConfig &cfg) {
    const auto &m = ds.manifest;
    const int n_recs = static_cast<int>(ds.records.size());
    const int n_val = std::min(m.n_two_layer_val, m.n_two_layer);
    if (n_recs - n_val <= 0)
        throw Error("train_decoder: empty training set");

    DecoderTrainResult res;
    res.decoder.graph = build_decoder();
    res.decoder.weights = nn::init_weights<float>(res.decoder.graph, cfg.seed);
    Decoder &dec = res.decoder;

    // One latent row per record, all ones. Every record participates in
    // training except the validation tail of the two-layer block, whose
    // latents are still optimized (weights frozen) so held-out fit can be
    // measured.
    Tensor latents({n_recs, kLatentDim});
    latents.fill(1.0f);

    auto w_adam = nn::AdamState::for_weights(dec.weights, cfg.lr_weights);
    nn::AdamState l_adam;
    l_adam.lr = cfg.lr_latents;
    l_adam.m.emplace_back(latents.shape);
    l_adam.v.emplace_back(latents.shape);

    const int val_begin = ds.two_layer_begin() + m.n_two_layer - n_val;
    const int val_end = ds.two_layer_begin() + m.n_two_layer;
    std::vector<int> train_recs, val_recs;
    for (int r = 0; r < n_recs; ++r) {
        if (r >= val_begin && r < val_end)
            val_recs.push_back(r);
        else
            train_recs.push_back(r);
    }

    auto run_batch = [&](const SampleBatch &batch, bool update_weights) -> double {
        const int B = static_cast<int>(batch.size());
        Tensor input({B, dec.graph.input_dim});
        for (int r = 0; r < B; ++r) {
            int row = batch.record[r];
            fill_input_row(input.row(r), latents.row(row), batch.wi[r], batch.wo[r]);
        }
        nn::ForwardTrace trace;
        Tensor pred = nn::forward(dec.graph, dec.weights, input, &trace);
        Tensor gt({B, 1});
        for (int r = 0; r < B; ++r)
            gt.data[r] = batch.value[r];
        Tensor lgrad;
        float loss = nn::l1_loss(pred, gt, &lgrad);
        if (!std::isfinite(loss))
            throw DivergedLoss("decoder training loss is not finite");
        auto grads = nn::backward(dec.graph, dec.weights, trace, lgrad);
        if (update_weights) {
            nn::Gradients wg;
            wg.params = std::move(grads.params);
            adam_step(w_adam, dec.weights, wg);
        }
        // Route 1: scatter input gradients into the latent table.
        nn::Gradients lg;
        lg.params.emplace_back(latents.shape);
        for (int r = 0; r < B; ++r) {
            int row = batch.record[r];
            float *dst = lg.params[0].row(row);
            const float *src = grads.input.row(r);
            for (int c = 0; c < kLatentDim; ++c)
                dst[c] += src[c];
        }
        nn::WeightsT<float> lw;
        lw.params.push_back(std::move(latents));
        adam_step(l_adam, lw, lg);
        latents = std::move(lw.params[0]);
        return loss;
    };

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        BatchIterator it(ds, train_recs, cfg.batch_size, cfg.seed * 7919 + epoch);
        SampleBatch batch;
        double loss_sum = 0;
        long nb = 0;
        while (it.next(&batch)) {
            loss_sum += run_batch(batch, /*update_weights=*/true);
            ++nb;
        }
        res.train_loss.push_back(loss_sum / std::max(1L, nb));

        double vloss = 0;
        long vb = 0;
        if (!val_recs.empty()) {
            BatchIterator vit(ds, val_recs, cfg.batch_size, cfg.seed * 104729 + epoch);
            while (vit.next(&batch)) {
                vloss += run_batch(batch, /*update_weights=*/false);
                ++vb;
            }
        }
        res.val_loss.push_back(vb ? vloss / vb : 0.0);

        w_adam.lr *= cfg.lr_decay;
        l_adam.lr *= cfg.lr_decay;

        if (cfg.log)
            (*cfg.log) << "epoch " << epoch << " train_l1 " << res.train_loss.back()
                       << " val_l1 " << res.val_loss.back() << "\n";
        if (!cfg.checkpoint_dir.empty()) {
            std::string base = cfg.checkpoint_dir + "/decoder_epoch" + std::to_string(epoch);
            nn::save_weights(base + ".nbwt", dec.graph, dec.weights);
        }
    }

    res.latents.reserve(n_recs);
    for (int k = 0; k < n_recs; ++k) {
        LatentBrdf l(1);
        std::memcpy(l.channel(0), latents.row(k), kLatentDim * sizeof(float));
        res.latents.push_back(std::move(l));
    }
    return res;
}

TargetSampler target_from_eval(std::function<double(const Direction &, const Direction &)> fn) {
    return [fn](int n, RngStream &rng, std::vector<Direction> &wi, std::vector<Direction> &wo,
                std::vector<float> &value) {
        wi.resize(n);
        wo.resize(n);
        value.resize(n);
        for (int k = 0; k < n; ++k) {
            wi[k] = uniform_sample_hemisphere(rng);
            wo[k] = uniform_sample_hemisphere(rng);
            double v = fn(wi[k], wo[k]);
            if (!std::isfinite(v))
                throw NonFiniteTarget("projection target produced a non-finite value");
            value[k] = static_cast<float>(v);
        }
    };
}

TargetSampler target_from_grid(std::vector<Direction> grid, std::vector<float> values) {
    auto g = std::make_shared<std::vector<Direction>>(std::move(grid));
    auto v = std::make_shared<std::vector<float>>(std::move(values));
    return [g, v](int n, RngStream &rng, std::vector<Direction> &wi, std::vector<Direction> &wo,
                  std::vector<float> &value) {
        const uint32_t nd = static_cast<uint32_t>(g->size());
        wi.resize(n);
        wo.resize(n);
        value.resize(n);
        for (int k = 0; k < n; ++k) {
            uint32_t i = rng.next_below(nd), o = rng.next_below(nd);
            wi[k] = (*g)[i];
            wo[k] = (*g)[o];
            float val = (*v)[static_cast<size_t>(i) * nd + o];
            if (!std::isfinite(val))
                throw NonFiniteTarget("projection target grid holds a non-finite value");
            value[k] = val;
        }
    };
}

std::vector<std::vector<float>> project_channels(const Decoder &dec,
                                                 const std::vector<TargetSampler> &targets,
                                                 const ProjectionConfig &cfg) {
    const int T = static_cast<int>(targets.size());
    Tensor latents({T, kLatentDim});
    latents.fill(1.0f);
    nn::AdamState adam;
    adam.lr = cfg.lr;
    adam.m.emplace_back(latents.shape);
    adam.v.emplace_back(latents.shape);

    RngStream rng(cfg.seed, 0xABCD);
    std::vector<double> best_curve;
    double best = std::numeric_limits<double>::infinity();

    std::vector<Direction> twi, two;
    std::vector<float> tval;
    for (int step = 0; step < cfg.max_steps; ++step) {
        const int B = T * cfg.batch;
        Tensor input({B, dec.graph.input_dim});
        Tensor gt({B, 1});
        for (int t = 0; t < T; ++t) {
            targets[t](cfg.batch, rng, twi, two, tval);
            for (int k = 0; k < cfg.batch; ++k) {
                int r = t * cfg.batch + k;
                fill_input_row(input.row(r), latents.row(t), twi[k], two[k]);
                gt.data[r] = tval[k];
            }
        }
        nn::ForwardTrace trace;
        Tensor pred = nn::forward(dec.graph, dec.weights, input, &trace);
        Tensor lgrad;
        float loss = nn::l1_loss(pred, gt, &lgrad);
        if (!std::isfinite(loss))
            throw DivergedLoss("projection loss is not finite");
        auto grads = nn::backward(dec.graph, dec.weights, trace, lgrad);

        nn::Gradients lg;
        lg.params.emplace_back(latents.shape);
        for (int t = 0; t < T; ++t)
            for (int k = 0; k < cfg.batch; ++k) {
                const float *src = grads.input.row(t * cfg.batch + k);
                float *dst = lg.params[0].row(t);
                for (int c = 0; c < kLatentDim; ++c)
                    dst[c] += src[c];
            }
        nn::WeightsT<float> lw;
        lw.params.push_back(std::move(latents));
        adam_step(adam, lw, lg);
        latents = std::move(lw.params[0]);

        best = std::min(best, static_cast<double>(loss));
        best_curve.push_back(best);
        if (step >= cfg.window) {
            double prev = best_curve[step - cfg.window];
            if (prev > 0 && (prev - best) / prev < cfg.rel_tol)
                break;
        }
    }

    std::vector<std::vector<float>> out(T);
    for (int t = 0; t < T; ++t)
        out[t].assign(latents.row(t), latents.row(t) + kLatentDim);
    return out;
}

ProjectionResult project_channel(const Decoder &dec, const TargetSampler &target,
                                 const ProjectionConfig &cfg) {
    // Single-target wrapper that also reports the best-loss curve.
    const int T = 1;
    Tensor latents({T, kLatentDim});
    latents.fill(1.0f);
    nn::AdamState adam;
    adam.lr = cfg.lr;
    adam.m.emplace_back(latents.shape);
    adam.v.emplace_back(latents.shape);

    RngStream rng(cfg.seed, 0xABCD);
    ProjectionResult res;
    double best = std::numeric_limits<double>::infinity();
    std::vector<Direction> twi, two;
    std::vector<float> tval;
    for (int step = 0; step < cfg.max_steps; ++step) {
        target(cfg.batch, rng, twi, two, tval);
        Tensor input({cfg.batch, dec.graph.input_dim});
        Tensor gt({cfg.batch, 1});
        for (int k = 0; k < cfg.batch; ++k) {
            fill_input_row(input.row(k), latents.row(0), twi[k], two[k]);
            gt.data[k] = tval[k];
        }
        nn::ForwardTrace trace;
        Tensor pred = nn::forward(dec.graph, dec.weights, input, &trace);
        Tensor lgrad;
        float loss = nn::l1_loss(pred, gt, &lgrad);
        if (!std::isfinite(loss))
            throw DivergedLoss("projection loss is not finite");
        auto grads = nn::backward(dec.graph, dec.weights, trace, lgrad);
        nn::Gradients lg;
        lg.params.emplace_back(latents.shape);
        for (int k = 0; k < cfg.batch; ++k) {
            const float *src = grads.input.row(k);
            float *dst = lg.params[0].row(0);
            for (int c = 0; c < kLatentDim; ++c)
                dst[c] += src[c];
        }
        nn::WeightsT<float> lw;
        lw.params.push_back(std::move(latents));
        adam_step(adam, lw, lg);
        latents = std::move(lw.params[0]);

        best = std::min(best, static_cast<double>(loss));
        res.best_loss_curve.push_back(best);
        res.steps = step + 1;
        if (step >= cfg.window) {
            double prev = res.best_loss_curve[step - cfg.window];
            if (prev > 0 && (prev - best) / prev < cfg.rel_tol)
                break;
        }
    }
    res.latent.assign(latents.row(0), latents.row(0) + kLatentDim);
    return res;
}

LatentBrdf project_brdf(const Decoder &dec, const std::vector<TargetSampler> &per_channel,
                        const ProjectionConfig &cfg) {
    auto latents = project_channels(dec, per_channel, cfg);
    LatentBrdf out(static_cast<int>(per_channel.size()));
    for (int c = 0; c < out.channels; ++c)
        std::memcpy(out.channel(c), latents[c].data(), kLatentDim * sizeof(float));
    return out;
}

double grid_relative_l1(const Decoder &dec, const float *latent_channel,
                        const std::vector<Direction> &grid, const std::vector<float> &ref) {
    const int n = static_cast<int>(grid.size());
    if (ref.size() != static_cast<size_t>(n) * n)
        throw ShapeMismatch("grid_relative_l1: reference size mismatch");
    double abs_sum = 0, ref_sum = 0;
    const int chunk = 4096;
    std::vector<const float *> rows;
    std::vector<Direction> wis, wos;
    std::vector<size_t> idx;
    for (int start = 0; start < n * n; start += chunk) {
        int end = std::min(n * n, start + chunk);
        rows.clear(); wis.clear(); wos.clear(); idx.clear();
        for (int p = start; p < end; ++p) {
            rows.push_back(latent_channel);
            wis.push_back(grid[p / n]);
            wos.push_back(grid[p % n]);
            idx.push_back(p);
        }
        Tensor out = decode_batch_raw(dec, rows, wis, wos);
        for (size_t k = 0; k < idx.size(); ++k) {
            double pred = std::max(0.0f, out.data[k]);
            abs_sum += std::abs(pred - ref[idx[k]]);
            ref_sum += std::abs(double(ref[idx[k]]));
        }
    }
    double denom = ref_sum / (static_cast<double>(n) * n) + 1e-6;
    return (abs_sum / (static_cast<double>(n) * n)) / denom;
}

} // namespace nbrdf
