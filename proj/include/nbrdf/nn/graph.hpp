#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "nbrdf/core/rng.hpp"
#include "nbrdf/nn/tensor.hpp"

namespace nbrdf::nn {

constexpr double kLayerNormEps = 1e-5;

enum class LayerKind : uint8_t {
    Linear,    // in -> out
    LayerNorm, // dim
    ReLU,
    TapSave, // stores the running activation into slot
    SkipAdd, // adds slot contents to the running activation
};

struct LayerDesc {
    LayerKind kind;
    int in = 0;   // Linear input dim / LayerNorm dim
    int out = 0;  // Linear output dim
    int slot = 0; // TapSave / SkipAdd slot id
};

// Sequence of primitive layers. Residual blocks and skip connections are
// expressed with TapSave/SkipAdd pairs; additions always precede the
// following LayerNorm + ReLU.
struct MlpGraph {
    std::vector<LayerDesc> layers;
    int input_dim = 0;
    int output_dim = 0;
    int n_slots = 0;

    uint64_t fingerprint() const;
    size_t param_count() const;
    void validate() const; // throws ShapeMismatch on inconsistent wiring
};

// Builder helpers shared by the three networks.
class GraphBuilder {
  public:
    explicit GraphBuilder(int input_dim) : dim_(input_dim) { g_.input_dim = input_dim; }

    GraphBuilder &linear(int out);
    GraphBuilder &layer_norm();
    GraphBuilder &relu();
    GraphBuilder &fc_ln_relu(int out) { return linear(out).layer_norm().relu(); }
    // Bottleneck residual block: FC(d -> d/2) + LN + ReLU + FC(d/2 -> d),
    // residual added before the trailing LN + ReLU.
    GraphBuilder &residual_block();
    int tap(); // save current activation, returns slot id
    GraphBuilder &skip_add(int slot);

    MlpGraph build();

  private:
    MlpGraph g_;
    int dim_;
};

template <typename T> struct WeightsT {
    std::vector<TensorT<T>> params;

    template <typename U> WeightsT<U> cast() const {
        WeightsT<U> out;
        out.params.reserve(params.size());
        for (const auto &p : params)
            out.params.push_back(p.template cast<U>());
        return out;
    }
};
using Weights = WeightsT<float>;

// Parameter tensors in layer order: Linear -> (W[out,in], b[out]),
// LayerNorm -> (gamma[d], beta[d]).
template <typename T> WeightsT<T> init_weights(const MlpGraph &g, uint64_t seed) {
    WeightsT<T> w;
    RngStream rng(seed, 0xFEED);
    for (const auto &l : g.layers) {
        if (l.kind == LayerKind::Linear) {
            TensorT<T> W({l.out, l.in});
            double bound = std::sqrt(6.0 / l.in);
            for (auto &v : W.data)
                v = static_cast<T>((2.0 * rng.next_double() - 1.0) * bound);
            w.params.push_back(std::move(W));
            w.params.emplace_back(std::vector<int>{l.out});
        } else if (l.kind == LayerKind::LayerNorm) {
            TensorT<T> gamma({l.in});
            gamma.fill(T(1));
            w.params.push_back(std::move(gamma));
            w.params.emplace_back(std::vector<int>{l.in});
        }
    }
    return w;
}

template <typename T> struct ForwardTraceT {
    // Input of every layer; back() is the graph output.
    std::vector<TensorT<T>> acts;
    // Saved LayerNorm statistics, keyed by layer index.
    std::vector<TensorT<T>> ln_mean, ln_invstd;
};
using ForwardTrace = ForwardTraceT<float>;

template <typename T> struct GradientsT {
    std::vector<TensorT<T>> params; // same layout as WeightsT
    TensorT<T> input;
};
using Gradients = GradientsT<float>;

template <typename T>
TensorT<T> forward(const MlpGraph &g, const WeightsT<T> &w, const TensorT<T> &input,
                   ForwardTraceT<T> *trace = nullptr);

template <typename T>
GradientsT<T> backward(const MlpGraph &g, const WeightsT<T> &w, const ForwardTraceT<T> &trace,
                       const TensorT<T> &upstream);

// ---- implementation ----

template <typename T>
TensorT<T> forward(const MlpGraph &g, const WeightsT<T> &w, const TensorT<T> &input,
                   ForwardTraceT<T> *trace) {
    if (input.cols() != g.input_dim)
        throw ShapeMismatch("forward: input dim " + std::to_string(input.cols()) +
                            " != graph input dim " + std::to_string(g.input_dim));
    const int batch = input.rows();
    std::vector<TensorT<T>> slots(g.n_slots);
    if (trace) {
        trace->acts.clear();
        trace->ln_mean.assign(g.layers.size(), {});
        trace->ln_invstd.assign(g.layers.size(), {});
    }
    TensorT<T> x = input;
    size_t pi = 0;
    for (size_t li = 0; li < g.layers.size(); ++li) {
        const auto &l = g.layers[li];
        if (trace)
            trace->acts.push_back(x);
        switch (l.kind) {
        case LayerKind::Linear: {
            const auto &W = w.params[pi++];
            const auto &b = w.params[pi++];
            TensorT<T> y({batch, l.out});
            gemm_nt(x.data.data(), W.data.data(), y.data.data(), batch, l.in, l.out);
#pragma omp parallel for schedule(static)
            for (int r = 0; r < batch; ++r)
                for (int c = 0; c < l.out; ++c)
                    y.row(r)[c] += b.data[c];
            x = std::move(y);
            break;
        }
        case LayerKind::LayerNorm: {
            const auto &gamma = w.params[pi++];
            const auto &beta = w.params[pi++];
            const int d = l.in;
            TensorT<T> y({batch, d});
            TensorT<T> mean({batch}), invstd({batch});
#pragma omp parallel for schedule(static)
            for (int r = 0; r < batch; ++r) {
                const T *xr = x.row(r);
                T mu = T(0);
                for (int c = 0; c < d; ++c)
                    mu += xr[c];
                mu /= T(d);
                T var = T(0);
                for (int c = 0; c < d; ++c) {
                    T dv = xr[c] - mu;
                    var += dv * dv;
                }
                var /= T(d);
                T is = T(1) / std::sqrt(var + T(kLayerNormEps));
                mean.data[r] = mu;
                invstd.data[r] = is;
                T *yr = y.row(r);
                for (int c = 0; c < d; ++c)
                    yr[c] = (xr[c] - mu) * is * gamma.data[c] + beta.data[c];
            }
            if (trace) {
                trace->ln_mean[li] = std::move(mean);
                trace->ln_invstd[li] = std::move(invstd);
            }
            x = std::move(y);
            break;
        }
        case LayerKind::ReLU: {
            TensorT<T> y = x;
            for (auto &v : y.data)
                v = v > T(0) ? v : T(0);
            x = std::move(y);
            break;
        }
        case LayerKind::TapSave:
            slots[l.slot] = x;
            break;
        case LayerKind::SkipAdd: {
            const auto &s = slots[l.slot];
            if (s.shape != x.shape)
                throw ShapeMismatch("SkipAdd: slot shape mismatch");
            for (size_t i = 0; i < x.data.size(); ++i)
                x.data[i] += s.data[i];
            break;
        }
        }
    }
    if (trace)
        trace->acts.push_back(x);
    return x;
}

template <typename T>
GradientsT<T> backward(const MlpGraph &g, const WeightsT<T> &w, const ForwardTraceT<T> &trace,
                       const TensorT<T> &upstream) {
    GradientsT<T> grads;
    grads.params.reserve(w.params.size());
    for (const auto &p : w.params)
        grads.params.emplace_back(p.shape);

    // Parameter index of the first tensor of each layer.
    std::vector<size_t> pidx(g.layers.size(), 0);
    {
        size_t pi = 0;
        for (size_t li = 0; li < g.layers.size(); ++li) {
            pidx[li] = pi;
            if (g.layers[li].kind == LayerKind::Linear ||
                g.layers[li].kind == LayerKind::LayerNorm)
                pi += 2;
        }
    }

    std::vector<TensorT<T>> slot_grads(g.n_slots);
    TensorT<T> dy = upstream;
    const int batch = upstream.rows();

    for (size_t li = g.layers.size(); li-- > 0;) {
        const auto &l = g.layers[li];
        const TensorT<T> &xin = trace.acts[li];
        switch (l.kind) {
        case LayerKind::Linear: {
            const auto &W = w.params[pidx[li]];
            auto &dW = grads.params[pidx[li]];
            auto &db = grads.params[pidx[li] + 1];
            gemm_tn(dy.data.data(), xin.data.data(), dW.data.data(), batch, l.out, l.in);
            for (int r = 0; r < batch; ++r)
                for (int c = 0; c < l.out; ++c)
                    db.data[c] += dy.row(r)[c];
            TensorT<T> dx({batch, l.in});
            gemm_nn(dy.data.data(), W.data.data(), dx.data.data(), batch, l.out, l.in);
            dy = std::move(dx);
            break;
        }
        case LayerKind::LayerNorm: {
            const auto &gamma = w.params[pidx[li]];
            auto &dgamma = grads.params[pidx[li]];
            auto &dbeta = grads.params[pidx[li] + 1];
            const int d = l.in;
            const auto &mean = trace.ln_mean[li];
            const auto &invstd = trace.ln_invstd[li];
            TensorT<T> dx({batch, d});
#pragma omp parallel for schedule(static)
            for (int r = 0; r < batch; ++r) {
                const T *xr = xin.row(r);
                const T *dyr = dy.row(r);
                T mu = mean.data[r], is = invstd.data[r];
                T sum_dg = T(0), sum_dgx = T(0);
                for (int c = 0; c < d; ++c) {
                    T xhat = (xr[c] - mu) * is;
                    T dg = dyr[c] * gamma.data[c];
                    sum_dg += dg;
                    sum_dgx += dg * xhat;
                }
                T *dxr = dx.row(r);
                for (int c = 0; c < d; ++c) {
                    T xhat = (xr[c] - mu) * is;
                    T dg = dyr[c] * gamma.data[c];
                    dxr[c] = is * (dg - sum_dg / T(d) - xhat * sum_dgx / T(d));
                }
            }
            for (int r = 0; r < batch; ++r) {
                const T *xr = xin.row(r);
                const T *dyr = dy.row(r);
                T mu = mean.data[r], is = invstd.data[r];
                for (int c = 0; c < d; ++c) {
                    dgamma.data[c] += dyr[c] * (xr[c] - mu) * is;
                    dbeta.data[c] += dyr[c];
                }
            }
            dy = std::move(dx);
            break;
        }
        case LayerKind::ReLU: {
            for (size_t i = 0; i < dy.data.size(); ++i)
                if (xin.data[i] <= T(0))
                    dy.data[i] = T(0);
            break;
        }
        case LayerKind::TapSave: {
            auto &sg = slot_grads[l.slot];
            if (!sg.data.empty())
                for (size_t i = 0; i < dy.data.size(); ++i)
                    dy.data[i] += sg.data[i];
            break;
        }
        case LayerKind::SkipAdd: {
            auto &sg = slot_grads[l.slot];
            if (sg.data.empty())
                sg = TensorT<T>(dy.shape);
            for (size_t i = 0; i < dy.data.size(); ++i)
                sg.data[i] += dy.data[i];
            break;
        }
        }
    }
    grads.input = std::move(dy);
    return grads;
}

} // namespace nbrdf::nn
