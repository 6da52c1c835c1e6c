#include "nbrdf/nn/graph.hpp"

namespace nbrdf::nn {

uint64_t MlpGraph::fingerprint() const {
    // FNV-1a over the descriptor list plus the io dims.
    uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](uint64_t v) {
        for (int b = 0; b < 8; ++b) {
            h ^= (v >> (8 * b)) & 0xFF;
            h *= 1099511628211ULL;
        }
    };
    mix(input_dim);
    mix(output_dim);
    for (const auto &l : layers) {
        mix(static_cast<uint64_t>(l.kind));
        mix(static_cast<uint64_t>(l.in));
        mix(static_cast<uint64_t>(l.out));
        mix(static_cast<uint64_t>(l.slot));
    }
    return h;
}

size_t MlpGraph::param_count() const {
    size_t n = 0;
    for (const auto &l : layers) {
        if (l.kind == LayerKind::Linear)
            n += static_cast<size_t>(l.in) * l.out + l.out;
        else if (l.kind == LayerKind::LayerNorm)
            n += 2 * static_cast<size_t>(l.in);
    }
    return n;
}

void MlpGraph::validate() const {
    int dim = input_dim;
    std::vector<int> slot_dims(n_slots, -1);
    for (const auto &l : layers) {
        switch (l.kind) {
        case LayerKind::Linear:
            if (l.in != dim)
                throw ShapeMismatch("Linear input dim mismatch");
            dim = l.out;
            break;
        case LayerKind::LayerNorm:
        case LayerKind::ReLU:
            if (l.kind == LayerKind::LayerNorm && l.in != dim)
                throw ShapeMismatch("LayerNorm dim mismatch");
            break;
        case LayerKind::TapSave:
            slot_dims[l.slot] = dim;
            break;
        case LayerKind::SkipAdd:
            if (slot_dims[l.slot] != dim)
                throw ShapeMismatch("SkipAdd dim mismatch or unset slot");
            break;
        }
    }
    if (dim != output_dim)
        throw ShapeMismatch("graph output dim mismatch");
}

GraphBuilder &GraphBuilder::linear(int out) {
    g_.layers.push_back({LayerKind::Linear, dim_, out, 0});
    dim_ = out;
    return *this;
}

GraphBuilder &GraphBuilder::layer_norm() {
    g_.layers.push_back({LayerKind::LayerNorm, dim_, dim_, 0});
    return *this;
}

GraphBuilder &GraphBuilder::relu() {
    g_.layers.push_back({LayerKind::ReLU, dim_, dim_, 0});
    return *this;
}

GraphBuilder &GraphBuilder::residual_block() {
    int d = dim_;
    int s = tap();
    linear(d / 2).layer_norm().relu();
    linear(d);
    skip_add(s);
    layer_norm().relu();
    return *this;
}

int GraphBuilder::tap() {
    int slot = g_.n_slots++;
    g_.layers.push_back({LayerKind::TapSave, dim_, dim_, slot});
    return slot;
}

GraphBuilder &GraphBuilder::skip_add(int slot) {
    g_.layers.push_back({LayerKind::SkipAdd, dim_, dim_, slot});
    return *this;
}

MlpGraph GraphBuilder::build() {
    g_.output_dim = dim_;
    g_.validate();
    return g_;
}

} // namespace nbrdf::nn
