#include <cmath>
#include <cstdint>

#include "injdiff/kernels.hpp"

namespace injdiff::kernels {

namespace {

void gemm_scalar(int M, int N, int K, const float* A, const float* B, float* C,
                 bool accumulate) {
    for (int i = 0; i < M; ++i) {
        float* c = C + (int64_t)i * N;
        if (!accumulate) {
            for (int j = 0; j < N; ++j) c[j] = 0.0f;
        }
        const float* a = A + (int64_t)i * K;
        for (int k = 0; k < K; ++k) {
            const float av = a[k];
            const float* b = B + (int64_t)k * N;
            for (int j = 0; j < N; ++j) c[j] += av * b[j];
        }
    }
}

void lincomb_scalar(int64_t n, float a, const float* x, float b, const float* y, float* o) {
    for (int64_t i = 0; i < n; ++i) o[i] = a * x[i] + b * y[i];
}

void vmul_scalar(int64_t n, const float* x, const float* y, float* o) {
    for (int64_t i = 0; i < n; ++i) o[i] = x[i] * y[i];
}

void silu_scalar(int64_t n, const float* x, float* y) {
    for (int64_t i = 0; i < n; ++i) {
        const float s = 1.0f / (1.0f + std::exp(-x[i]));
        y[i] = x[i] * s;
    }
}

void silu_grad_scalar(int64_t n, const float* x, const float* dy, float* dx) {
    for (int64_t i = 0; i < n; ++i) {
        const float s = 1.0f / (1.0f + std::exp(-x[i]));
        dx[i] = dy[i] * (s + x[i] * s * (1.0f - s));
    }
}

void softmax_rows_scalar(int rows, int cols, const float* x, float* y) {
    for (int r = 0; r < rows; ++r) {
        const float* xr = x + (int64_t)r * cols;
        float* yr = y + (int64_t)r * cols;
        float mx = xr[0];
        for (int j = 1; j < cols; ++j) mx = xr[j] > mx ? xr[j] : mx;
        double s = 0.0;
        for (int j = 0; j < cols; ++j) {
            const float e = std::exp(xr[j] - mx);
            yr[j] = e;
            s += (double)e;
        }
        for (int j = 0; j < cols; ++j) yr[j] = (float)((double)yr[j] / s);
    }
}

double sum_scalar(int64_t n, const float* x) {
    double s = 0.0;
    for (int64_t i = 0; i < n; ++i) s += (double)x[i];
    return s;
}

double sumsq_scalar(int64_t n, const float* x) {
    double s = 0.0;
    for (int64_t i = 0; i < n; ++i) s += (double)x[i] * (double)x[i];
    return s;
}

double sqdiff_scalar(int64_t n, const float* a, const float* b) {
    double s = 0.0;
    for (int64_t i = 0; i < n; ++i) {
        const double d = (double)a[i] - (double)b[i];
        s += d * d;
    }
    return s;
}

void adam_scalar(int64_t n, float* p, const float* g, float* m, float* v, float lr,
                 float b1, float b2, float eps, float c1, float c2) {
    for (int64_t i = 0; i < n; ++i) {
        m[i] = b1 * m[i] + (1.0f - b1) * g[i];
        v[i] = b2 * v[i] + (1.0f - b2) * g[i] * g[i];
        const float mh = m[i] / c1;
        const float vh = v[i] / c2;
        p[i] -= lr * mh / (std::sqrt(vh) + eps);
    }
}

}  // namespace

const Ops& scalar() {
    static const Ops ops = {
        "scalar",          gemm_scalar,    lincomb_scalar, vmul_scalar,
        silu_scalar,       silu_grad_scalar, softmax_rows_scalar,
        sum_scalar,        sumsq_scalar,   sqdiff_scalar,  adam_scalar,
    };
    return ops;
}

}  // namespace injdiff::kernels
