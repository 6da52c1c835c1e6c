#pragma once

#include <cmath>

#include "nbrdf/nn/graph.hpp"

namespace nbrdf::nn {

template <typename T> struct AdamStateT {
    std::vector<TensorT<T>> m, v;
    long step = 0;
    double lr = 1e-3;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

    static AdamStateT for_weights(const WeightsT<T> &w, double lr) {
        AdamStateT s;
        s.lr = lr;
        for (const auto &p : w.params) {
            s.m.emplace_back(p.shape);
            s.v.emplace_back(p.shape);
        }
        return s;
    }
};
using AdamState = AdamStateT<float>;

template <typename T>
void adam_step(AdamStateT<T> &st, WeightsT<T> &w, const GradientsT<T> &g) {
    if (st.m.size() != w.params.size() || g.params.size() != w.params.size())
        throw ShapeMismatch("adam_step: parameter count mismatch");
    st.step += 1;
    double bc1 = 1.0 - std::pow(st.beta1, st.step);
    double bc2 = 1.0 - std::pow(st.beta2, st.step);
    for (size_t p = 0; p < w.params.size(); ++p) {
        if (w.params[p].shape != g.params[p].shape)
            throw ShapeMismatch("adam_step: gradient shape mismatch");
        T *wd = w.params[p].data.data();
        T *md = st.m[p].data.data();
        T *vd = st.v[p].data.data();
        const T *gd = g.params[p].data.data();
        size_t n = w.params[p].numel();
        for (size_t i = 0; i < n; ++i) {
            md[i] = static_cast<T>(st.beta1 * md[i] + (1.0 - st.beta1) * gd[i]);
            vd[i] = static_cast<T>(st.beta2 * vd[i] + (1.0 - st.beta2) * double(gd[i]) * gd[i]);
            double mhat = md[i] / bc1;
            double vhat = vd[i] / bc2;
            wd[i] = static_cast<T>(wd[i] - st.lr * mhat / (std::sqrt(vhat) + st.eps));
        }
    }
}

} // namespace nbrdf::nn
