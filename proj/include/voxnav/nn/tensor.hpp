#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "../error.hpp"

namespace voxnav::nn {

/// Trainable parameters with a gradient buffer of the same shape.
template <class T>
struct ParamTensor {
    std::string name;
    std::vector<std::size_t> shape;
    std::vector<T> values;
    std::vector<T> grad;

    ParamTensor() = default;
    ParamTensor(std::string n, std::vector<std::size_t> s)
        : name(std::move(n)), shape(std::move(s)), values(element_count(shape), T(0)), grad(values.size(), T(0)) {}

    static std::size_t element_count(const std::vector<std::size_t>& s) {
        return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>());
    }
    std::size_t size() const { return values.size(); }
    void zero_grad() { std::fill(grad.begin(), grad.end(), T(0)); }
    bool all_finite() const {
        for (T v : values)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

/// Row-major batch of activations: one sample per row.
template <class T>
struct Batch {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<T> data;

    Batch() = default;
    Batch(std::size_t r, std::size_t c, T fill = T(0)) : rows(r), cols(c), data(r * c, fill) {}
    Batch(std::size_t r, std::size_t c, std::vector<T> d) : rows(r), cols(c), data(std::move(d)) {
        if (data.size() != r * c) throw LogicError("batch data does not match its shape");
    }

    T* row(std::size_t r) { return data.data() + r * cols; }
    const T* row(std::size_t r) const { return data.data() + r * cols; }
    T& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    T operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    bool empty() const { return data.empty(); }
};

namespace kernels {

/// y += a * x
template <class T>
inline void axpy(std::size_t n, T a, const T* x, T* y) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

/// Four partial sums so the loop pipelines without reassociation flags.
template <class T>
inline T dot(std::size_t n, const T* a, const T* b) {
    T s0 = 0, s1 = 0, s2 = 0, s3 = 0;
    const std::size_t n4 = n & ~std::size_t{3};
    std::size_t i = 0;
    for (; i < n4; i += 4) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    for (; i < n; ++i) s0 += a[i] * b[i];
    return (s0 + s1) + (s2 + s3);
}

/// C (M x N) += A (M x K) * B (K x N), all row-major. Pairs of rows and four
/// K terms share each load of B; N is chunked so the C rows stay in cache.
template <class T>
inline void gemm_nn(std::size_t M, std::size_t K, std::size_t N, const T* A, const T* B, T* C) {
    constexpr std::size_t kChunk = 512;
    for (std::size_t n0 = 0; n0 < N; n0 += kChunk) {
        const std::size_t nn = std::min(kChunk, N - n0);
        std::size_t m = 0;
        for (; m + 2 <= M; m += 2) {
            const T* a = A + m * K;
            const T* e = a + K;
            T* c0 = C + m * N + n0;
            T* c1 = c0 + N;
            std::size_t k = 0;
            for (; k + 4 <= K; k += 4) {
                const T* b0 = B + k * N + n0;
                const T* b1 = b0 + N;
                const T* b2 = b1 + N;
                const T* b3 = b2 + N;
                const T a0 = a[k], a1 = a[k + 1], a2 = a[k + 2], a3 = a[k + 3];
                const T e0 = e[k], e1 = e[k + 1], e2 = e[k + 2], e3 = e[k + 3];
                for (std::size_t n = 0; n < nn; ++n) {
                    const T w0 = b0[n], w1 = b1[n], w2 = b2[n], w3 = b3[n];
                    c0[n] += a0 * w0 + a1 * w1 + a2 * w2 + a3 * w3;
                    c1[n] += e0 * w0 + e1 * w1 + e2 * w2 + e3 * w3;
                }
            }
            for (; k < K; ++k) {
                axpy(nn, a[k], B + k * N + n0, c0);
                axpy(nn, e[k], B + k * N + n0, c1);
            }
        }
        for (; m < M; ++m) {
            const T* a = A + m * K;
            T* c = C + m * N + n0;
            std::size_t k = 0;
            for (; k + 4 <= K; k += 4) {
                const T a0 = a[k], a1 = a[k + 1], a2 = a[k + 2], a3 = a[k + 3];
                const T* b0 = B + k * N + n0;
                const T* b1 = b0 + N;
                const T* b2 = b1 + N;
                const T* b3 = b2 + N;
                for (std::size_t n = 0; n < nn; ++n) c[n] += a0 * b0[n] + a1 * b1[n] + a2 * b2[n] + a3 * b3[n];
            }
            for (; k < K; ++k) axpy(nn, a[k], B + k * N + n0, c);
        }
    }
}

/// C (K x N) += A^T * B with A (M x K) and B (M x N). C is visited in bands of
/// rows so each band stays in cache across the whole batch.
template <class T>
inline void gemm_tn(std::size_t M, std::size_t K, std::size_t N, const T* A, const T* B, T* C) {
    constexpr std::size_t kBand = 8;
    for (std::size_t k0 = 0; k0 < K; k0 += kBand) {
        const std::size_t k1 = std::min(K, k0 + kBand);
        std::size_t m = 0;
        for (; m + 4 <= M; m += 4) {
            const T* a0 = A + m * K;
            const T* b0 = B + m * N;
            const T* b1 = b0 + N;
            const T* b2 = b1 + N;
            const T* b3 = b2 + N;
            for (std::size_t k = k0; k < k1; ++k) {
                const T x0 = a0[k], x1 = a0[K + k], x2 = a0[2 * K + k], x3 = a0[3 * K + k];
                T* c = C + k * N;
                for (std::size_t n = 0; n < N; ++n) c[n] += x0 * b0[n] + x1 * b1[n] + x2 * b2[n] + x3 * b3[n];
            }
        }
        for (; m < M; ++m)
            for (std::size_t k = k0; k < k1; ++k) axpy(N, A[m * K + k], B + m * N, C + k * N);
    }
}

/// Row-major transpose of R x C into C x R.
template <class T>
inline std::vector<T> transpose(std::size_t R, std::size_t C, const T* A) {
    std::vector<T> out(R * C);
    for (std::size_t r = 0; r < R; ++r)
        for (std::size_t c = 0; c < C; ++c) out[c * R + r] = A[r * C + c];
    return out;
}

} // namespace kernels

} // namespace voxnav::nn
