#pragma once

#include <cmath>

#include "nbrdf/nn/tensor.hpp"

namespace nbrdf::nn {

// Mean absolute error over all elements. Gradient is sign(pred - gt) / N.
template <typename T>
T l1_loss(const TensorT<T> &pred, const TensorT<T> &gt, TensorT<T> *grad = nullptr) {
    if (pred.shape != gt.shape)
        throw ShapeMismatch("l1_loss: shape mismatch");
    const size_t n = pred.numel();
    if (grad)
        *grad = TensorT<T>(pred.shape);
    double sum = 0;
    for (size_t i = 0; i < n; ++i) {
        T d = pred.data[i] - gt.data[i];
        sum += std::abs(double(d));
        if (grad)
            grad->data[i] = (d > T(0) ? T(1) : (d < T(0) ? T(-1) : T(0))) / T(n);
    }
    return static_cast<T>(sum / n);
}

template <typename T> void softmax_inplace(std::vector<T> &v) {
    T mx = v[0];
    for (T x : v)
        mx = std::max(mx, x);
    double z = 0;
    for (T &x : v) {
        x = static_cast<T>(std::exp(double(x - mx)));
        z += x;
    }
    for (T &x : v)
        x = static_cast<T>(x / z);
}

// KL divergence between the softmax-normalized sample vectors, scaled by
// 1/M. Gradient w.r.t. pred is (softmax(pred) - softmax(gt)) / M.
template <typename T>
T kld_loss(const TensorT<T> &pred, const TensorT<T> &gt, TensorT<T> *grad = nullptr) {
    if (pred.shape != gt.shape)
        throw ShapeMismatch("kld_loss: shape mismatch");
    const size_t m = pred.numel();
    if (m < 2)
        throw ShapeMismatch("kld_loss: needs at least 2 samples");
    std::vector<T> p = pred.data, q = gt.data;
    softmax_inplace(p);
    softmax_inplace(q);
    double loss = 0;
    for (size_t i = 0; i < m; ++i)
        if (q[i] > T(0))
            loss += double(q[i]) * (std::log(double(q[i])) - std::log(double(p[i])));
    loss /= m;
    if (grad) {
        *grad = TensorT<T>(pred.shape);
        for (size_t i = 0; i < m; ++i)
            grad->data[i] = (p[i] - q[i]) / T(m);
    }
    return static_cast<T>(loss);
}

} // namespace nbrdf::nn
