#pragma once

// Dense kernels used by the tensor engine. Every kernel has a serial
// reference version (suffix _serial) and an OpenMP version that
// parallelises over independent output rows, so results are bit-identical
// regardless of thread count.

#include <cmath>
#include <cstddef>
#include <cstring>
#include <algorithm>
#include <limits>

namespace seqlab::kernels {

// c[m x n] = a[m x k] * b[k x n]; accumulate adds into c instead of overwriting
template <class T>
void matmul_serial(const T* a, const T* b, T* c, int m, int k, int n, bool accumulate = false) {
    for (int i = 0; i < m; ++i) {
        T* ci = c + (std::size_t)i * n;
        if (!accumulate) std::fill(ci, ci + n, T(0));
        const T* ai = a + (std::size_t)i * k;
        for (int p = 0; p < k; ++p) {
            const T aip = ai[p];
            const T* bp = b + (std::size_t)p * n;
            for (int j = 0; j < n; ++j) ci[j] += aip * bp[j];
        }
    }
}

template <class T>
void matmul(const T* a, const T* b, T* c, int m, int k, int n, bool accumulate = false) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < m; ++i)
        matmul_serial(a + (std::size_t)i * k, b, c + (std::size_t)i * n, 1, k, n, accumulate);
}

// c[m x n] = a[m x k] * b[n x k]^T
template <class T>
void matmul_nt_serial(const T* a, const T* b, T* c, int m, int k, int n, bool accumulate = false) {
    for (int i = 0; i < m; ++i) {
        const T* ai = a + (std::size_t)i * k;
        T* ci = c + (std::size_t)i * n;
        for (int j = 0; j < n; ++j) {
            const T* bj = b + (std::size_t)j * k;
            T s = 0;
            for (int p = 0; p < k; ++p) s += ai[p] * bj[p];
            ci[j] = accumulate ? ci[j] + s : s;
        }
    }
}

template <class T>
void matmul_nt(const T* a, const T* b, T* c, int m, int k, int n, bool accumulate = false) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < m; ++i)
        matmul_nt_serial(a + (std::size_t)i * k, b, c + (std::size_t)i * n, 1, k, n, accumulate);
}

// c[k x n] = a[m x k]^T * b[m x n]
template <class T>
void matmul_tn_serial(const T* a, const T* b, T* c, int m, int k, int n, bool accumulate = false) {
    for (int p = 0; p < k; ++p) {
        T* cp = c + (std::size_t)p * n;
        if (!accumulate) std::fill(cp, cp + n, T(0));
        for (int i = 0; i < m; ++i) {
            const T aip = a[(std::size_t)i * k + p];
            const T* bi = b + (std::size_t)i * n;
            for (int j = 0; j < n; ++j) cp[j] += aip * bi[j];
        }
    }
}

template <class T>
void matmul_tn(const T* a, const T* b, T* c, int m, int k, int n, bool accumulate = false) {
#pragma omp parallel for schedule(static)
    for (int p = 0; p < k; ++p) {
        T* cp = c + (std::size_t)p * n;
        if (!accumulate) std::fill(cp, cp + n, T(0));
        for (int i = 0; i < m; ++i) {
            const T aip = a[(std::size_t)i * k + p];
            const T* bi = b + (std::size_t)i * n;
            for (int j = 0; j < n; ++j) cp[j] += aip * bi[j];
        }
    }
}

// y = softmax(x + mask) per row; mask may be null
template <class T>
void softmax_rows_serial(const T* x, const T* mask, T* y, int rows, int cols) {
    for (int i = 0; i < rows; ++i) {
        const T* xi = x + (std::size_t)i * cols;
        const T* mi = mask ? mask + (std::size_t)i * cols : nullptr;
        T* yi = y + (std::size_t)i * cols;
        T mx = -std::numeric_limits<T>::infinity();
        for (int j = 0; j < cols; ++j) {
            T v = xi[j] + (mi ? mi[j] : T(0));
            yi[j] = v;
            if (v > mx) mx = v;
        }
        T sum = 0;
        for (int j = 0; j < cols; ++j) {
            yi[j] = std::exp(yi[j] - mx);
            sum += yi[j];
        }
        const T inv = T(1) / sum;
        for (int j = 0; j < cols; ++j) yi[j] *= inv;
    }
}

template <class T>
void softmax_rows(const T* x, const T* mask, T* y, int rows, int cols) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < rows; ++i)
        softmax_rows_serial(x + (std::size_t)i * cols,
                            mask ? mask + (std::size_t)i * cols : nullptr,
                            y + (std::size_t)i * cols, 1, cols);
}

// y = (x - mean) / sqrt(var + eps) * gain + bias, per row over the last dim
template <class T>
void layer_norm_rows_serial(const T* x, const T* gain, const T* bias, T* y,
                            int rows, int cols, T eps) {
    for (int i = 0; i < rows; ++i) {
        const T* xi = x + (std::size_t)i * cols;
        T* yi = y + (std::size_t)i * cols;
        T mean = 0;
        for (int j = 0; j < cols; ++j) mean += xi[j];
        mean /= cols;
        T var = 0;
        for (int j = 0; j < cols; ++j) {
            T d = xi[j] - mean;
            var += d * d;
        }
        var /= cols;
        const T inv = T(1) / std::sqrt(var + eps);
        for (int j = 0; j < cols; ++j) yi[j] = (xi[j] - mean) * inv * gain[j] + bias[j];
    }
}

template <class T>
void layer_norm_rows(const T* x, const T* gain, const T* bias, T* y,
                     int rows, int cols, T eps) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < rows; ++i)
        layer_norm_rows_serial(x + (std::size_t)i * cols, gain, bias,
                               y + (std::size_t)i * cols, 1, cols, eps);
}

// exact-erf GELU: x * Phi(x)
template <class T>
inline T gelu_scalar(T x) {
    return x * T(0.5) * (T(1) + std::erf(x / std::sqrt(T(2))));
}

template <class T>
inline T gelu_grad_scalar(T x) {
    const T phi = T(0.5) * (T(1) + std::erf(x / std::sqrt(T(2))));
    const T pdf = std::exp(-x * x / T(2)) / std::sqrt(T(2) * T(M_PI));
    return phi + x * pdf;
}

template <class T>
void gelu_serial(const T* x, T* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = gelu_scalar(x[i]);
}

template <class T>
void gelu(const T* x, T* y, std::size_t n) {
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < (long long)n; ++i) y[i] = gelu_scalar(x[i]);
}

} // namespace seqlab::kernels
