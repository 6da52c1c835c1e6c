#include "nbrdf/neural/layering.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <numeric>

namespace nbrdf {

namespace {
constexpr char kTripleMagic[4] = {'N', 'B', 'L', 'T'};
constexpr uint32_t kTripleVersion = 3; // "NBLT3"

void fill_layer_input(float *row, const float *top, const float *bottom, float a, float sigma_t) {
    std::memcpy(row, top, kLatentDim * sizeof(float));
    std::memcpy(row + kLatentDim, bottom, kLatentDim * sizeof(float));
    row[2 * kLatentDim] = a;
    row[2 * kLatentDim + 1] = sigma_t;
}
} // namespace

nn::MlpGraph build_layering_net() {
    nn::GraphBuilder b(2 * kLatentDim + 2);
    b.fc_ln_relu(512);
    for (int k = 0; k < 4; ++k) {
        b.residual_block();
        b.fc_ln_relu(512);
    }
    b.linear(kLatentDim);
    return b.build();
}

void save_triples(const std::string &path, const TripleSet &set) {
    FILE *f = std::fopen(path.c_str(), "wb");
    if (!f)
        throw IoError("cannot open for writing: " + path);
    auto wr = [f](const void *p, size_t n) {
        if (std::fwrite(p, 1, n, f) != n) {
            std::fclose(f);
            throw IoError("triples file write failure");
        }
    };
    wr(kTripleMagic, 4);
    wr(&kTripleVersion, 4);
    wr(&set.decoder_fingerprint, 8);
    uint32_t count = static_cast<uint32_t>(set.triples.size());
    wr(&count, 4);
    for (const auto &t : set.triples) {
        wr(t.v_top, sizeof(t.v_top));
        wr(t.v_bottom, sizeof(t.v_bottom));
        wr(&t.a, 4);
        wr(&t.sigma_t, 4);
        wr(t.v_gt, sizeof(t.v_gt));
    }
    std::fclose(f);
}

TripleSet load_triples(const std::string &path) {
    FILE *f = std::fopen(path.c_str(), "rb");
    if (!f)
        throw IoError("cannot open for reading: " + path);
    auto rd = [f](void *p, size_t n) {
        if (std::fread(p, 1, n, f) != n) {
            std::fclose(f);
            throw TruncatedFile("unexpected end of triples file");
        }
    };
    char magic[4];
    rd(magic, 4);
    if (std::memcmp(magic, kTripleMagic, 4) != 0) {
        std::fclose(f);
        throw FormatError("not a NBLT3 triples file: " + path);
    }
    uint32_t ver;
    rd(&ver, 4);
    if (ver != kTripleVersion) {
        std::fclose(f);
        throw FormatError("unsupported NBLT3 version");
    }
    TripleSet set;
    rd(&set.decoder_fingerprint, 8);
    uint32_t count;
    rd(&count, 4);
    set.triples.resize(count);
    for (auto &t : set.triples) {
        rd(t.v_top, sizeof(t.v_top));
        rd(t.v_bottom, sizeof(t.v_bottom));
        rd(&t.a, 4);
        rd(&t.sigma_t, 4);
        rd(t.v_gt, sizeof(t.v_gt));
    }
    std::fclose(f);
    return set;
}

LatentBrdf layer(const LayeringNet &net, const LatentBrdf &v_top, const LatentBrdf &v_bottom,
                 const std::vector<double> &a, double sigma_t) {
    if (v_top.channels != v_bottom.channels ||
        static_cast<int>(a.size()) != v_top.channels)
        throw ChannelMismatch("layer: channel counts disagree");
    if (sigma_t < 0)
        throw InvalidDirection("layer: sigma_t must be non-negative");
    const int ch = v_top.channels;
    nn::Tensor input({ch, net.graph.input_dim});
    for (int c = 0; c < ch; ++c)
        fill_layer_input(input.row(c), v_top.channel(c), v_bottom.channel(c),
                         static_cast<float>(a[c]), static_cast<float>(sigma_t));
    nn::Tensor out = nn::forward(net.graph, net.weights, input);
    LatentBrdf result(ch);
    for (int c = 0; c < ch; ++c)
        std::memcpy(result.channel(c), out.row(c), kLatentDim * sizeof(float));
    return result;
}

namespace {

// One L1 regression pass over a triple list; updates weights in place.
double run_epoch(LayeringNet &net, nn::AdamState &adam, const std::vector<LayerTriple> &triples,
                 const std::vector<int> &order, int batch_size, bool update) {
    double loss_sum = 0;
    long nb = 0;
    for (size_t start = 0; start < order.size(); start += batch_size) {
        size_t end = std::min(order.size(), start + batch_size);
        const int B = static_cast<int>(end - start);
        nn::Tensor input({B, net.graph.input_dim});
        nn::Tensor gt({B, kLatentDim});
        for (int r = 0; r < B; ++r) {
            const auto &t = triples[order[start + r]];
            fill_layer_input(input.row(r), t.v_top, t.v_bottom, t.a, t.sigma_t);
            std::memcpy(gt.row(r), t.v_gt, kLatentDim * sizeof(float));
        }
        nn::ForwardTrace trace;
        nn::Tensor pred = nn::forward(net.graph, net.weights, input,
                                      update ? &trace : nullptr);
        nn::Tensor lgrad;
        float loss = nn::l1_loss(pred, gt, update ? &lgrad : nullptr);
        if (!std::isfinite(loss))
            throw DivergedLoss("layering training loss is not finite");
        loss_sum += loss;
        ++nb;
        if (update) {
            auto grads = nn::backward(net.graph, net.weights, trace, lgrad);
            nn::Gradients wg;
            wg.params = std::move(grads.params);
            adam_step(adam, net.weights, wg);
        }
    }
    return nb ? loss_sum / nb : 0.0;
}

void shuffle_order(std::vector<int> &order, RngStream &rng) {
    for (size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[rng.next_below(static_cast<uint32_t>(i))]);
}

} // namespace

LayeringTrainResult train_layering(const TripleSet &main_set, const TripleSet *fine_tune,
                                   const LayeringTrainConfig &cfg) {
    if (main_set.triples.empty())
        throw Error("train_layering: empty triple set");
    if (fine_tune && fine_tune->decoder_fingerprint != main_set.decoder_fingerprint)
        throw MixedDecoderError("triple sets come from different decoders");

    LayeringTrainResult res;
    res.net.graph = build_layering_net();
    res.net.weights = nn::init_weights<float>(res.net.graph, cfg.seed);
    auto adam = nn::AdamState::for_weights(res.net.weights, cfg.lr);

    const int n = static_cast<int>(main_set.triples.size());
    int n_val = static_cast<int>(n * cfg.val_fraction);
    n_val = std::min(n_val, n - 1);
    std::vector<int> train_order(n - n_val), val_order(n_val);
    std::iota(train_order.begin(), train_order.end(), 0);
    std::iota(val_order.begin(), val_order.end(), n - n_val);

    RngStream rng(cfg.seed, 0x17E);
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle_order(train_order, rng);
        res.train_loss.push_back(
            run_epoch(res.net, adam, main_set.triples, train_order, cfg.batch_size, true));
        res.val_loss.push_back(
            run_epoch(res.net, adam, main_set.triples, val_order, cfg.batch_size, false));
        if ((epoch + 1) % cfg.lr_decay_epochs == 0)
            adam.lr *= cfg.lr_decay;
        if (cfg.log)
            (*cfg.log) << "epoch " << epoch << " train_l1 " << res.train_loss.back()
                       << " val_l1 " << res.val_loss.back() << "\n";
    }

    if (fine_tune && !fine_tune->triples.empty() && cfg.fine_tune_epochs > 0) {
        adam.lr = cfg.fine_tune_lr;
        std::vector<int> ft_order(fine_tune->triples.size());
        std::iota(ft_order.begin(), ft_order.end(), 0);
        for (int epoch = 0; epoch < cfg.fine_tune_epochs; ++epoch) {
            shuffle_order(ft_order, rng);
            res.train_loss.push_back(
                run_epoch(res.net, adam, fine_tune->triples, ft_order, cfg.batch_size, true));
            res.val_loss.push_back(
                run_epoch(res.net, adam, main_set.triples, val_order, cfg.batch_size, false));
            if ((epoch + 1) % cfg.lr_decay_epochs == 0)
                adam.lr *= cfg.lr_decay;
            if (cfg.log)
                (*cfg.log) << "finetune epoch " << epoch << " train_l1 " << res.train_loss.back()
                           << " val_l1 " << res.val_loss.back() << "\n";
        }
    }
    return res;
}

} // namespace nbrdf
