#pragma once

#include <cstddef>
#include <numeric>
#include <vector>

#include "nbrdf/core/errors.hpp"

namespace nbrdf::nn {

template <typename T> struct TensorT {
    std::vector<int> shape;
    std::vector<T> data;

    TensorT() = default;
    explicit TensorT(std::vector<int> s) : shape(std::move(s)) {
        data.assign(numel_of(shape), T(0));
    }

    static size_t numel_of(const std::vector<int> &s) {
        size_t n = 1;
        for (int e : s)
            n *= static_cast<size_t>(e);
        return n;
    }
    size_t numel() const { return data.size(); }
    int rows() const { return shape.empty() ? 0 : shape[0]; }
    int cols() const { return shape.size() < 2 ? 1 : shape[1]; }
    T *row(int i) { return data.data() + static_cast<size_t>(i) * cols(); }
    const T *row(int i) const { return data.data() + static_cast<size_t>(i) * cols(); }
    void fill(T v) { std::fill(data.begin(), data.end(), v); }

    template <typename U> TensorT<U> cast() const {
        TensorT<U> out;
        out.shape = shape;
        out.data.resize(data.size());
        for (size_t i = 0; i < data.size(); ++i)
            out.data[i] = static_cast<U>(data[i]);
        return out;
    }
};

using Tensor = TensorT<float>;

// C[m,n] = A[m,k] * B[k,n], row-major. Accumulation order over k is fixed,
// so results are identical for any thread count.
template <typename T>
void gemm_nn(const T *a, const T *b, T *c, int m, int k, int n) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < m; ++i) {
        T *ci = c + static_cast<size_t>(i) * n;
        for (int j = 0; j < n; ++j)
            ci[j] = T(0);
        const T *ai = a + static_cast<size_t>(i) * k;
        for (int p = 0; p < k; ++p) {
            T aip = ai[p];
            const T *bp = b + static_cast<size_t>(p) * n;
            for (int j = 0; j < n; ++j)
                ci[j] += aip * bp[j];
        }
    }
}

// C[m,n] = A[m,k] * B[n,k]^T.
template <typename T>
void gemm_nt(const T *a, const T *b, T *c, int m, int k, int n) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < m; ++i) {
        const T *ai = a + static_cast<size_t>(i) * k;
        T *ci = c + static_cast<size_t>(i) * n;
        for (int j = 0; j < n; ++j) {
            const T *bj = b + static_cast<size_t>(j) * k;
            T s = T(0);
            for (int p = 0; p < k; ++p)
                s += ai[p] * bj[p];
            ci[j] = s;
        }
    }
}

// C[k1,k2] = A[m,k1]^T * B[m,k2].
template <typename T>
void gemm_tn(const T *a, const T *b, T *c, int m, int k1, int k2) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < k1; ++i) {
        T *ci = c + static_cast<size_t>(i) * k2;
        for (int j = 0; j < k2; ++j)
            ci[j] = T(0);
        for (int p = 0; p < m; ++p) {
            T api = a[static_cast<size_t>(p) * k1 + i];
            const T *bp = b + static_cast<size_t>(p) * k2;
            for (int j = 0; j < k2; ++j)
                ci[j] += api * bp[j];
        }
    }
}

// Naive triple-loop reference, used by tests and the benchmark.
template <typename T>
void gemm_nn_serial(const T *a, const T *b, T *c, int m, int k, int n) {
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
            T s = T(0);
            for (int p = 0; p < k; ++p)
                s += a[static_cast<size_t>(i) * k + p] * b[static_cast<size_t>(p) * n + j];
            c[static_cast<size_t>(i) * n + j] = s;
        }
}

} // namespace nbrdf::nn
