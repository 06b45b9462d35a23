// NEON kernel variants for aarch64. Mirrors the scalar semantics 4-wide;
// equivalence-tested against the scalar lane on ARM builds.

#include <arm_neon.h>

#include <cmath>
#include <cstdint>

#include "injdiff/kernels.hpp"

namespace injdiff::kernels {

namespace {

inline float32x4_t exp128_ps(float32x4_t x) {
    const float32x4_t hi = vdupq_n_f32(88.3762626647949f);
    const float32x4_t lo = vdupq_n_f32(-88.3762626647949f);
    x = vminq_f32(vmaxq_f32(x, lo), hi);

    const float32x4_t log2ef = vdupq_n_f32(1.44269504088896341f);
    float32x4_t fx = vmlaq_f32(vdupq_n_f32(0.5f), x, log2ef);
    fx = vrndmq_f32(fx);  // floor

    x = vmlsq_f32(x, fx, vdupq_n_f32(0.693359375f));
    x = vmlsq_f32(x, fx, vdupq_n_f32(-2.12194440e-4f));

    const float32x4_t z = vmulq_f32(x, x);
    float32x4_t y = vdupq_n_f32(1.9875691500e-4f);
    y = vmlaq_f32(vdupq_n_f32(1.3981999507e-3f), y, x);
    y = vmlaq_f32(vdupq_n_f32(8.3334519073e-3f), y, x);
    y = vmlaq_f32(vdupq_n_f32(4.1665795894e-2f), y, x);
    y = vmlaq_f32(vdupq_n_f32(1.6666665459e-1f), y, x);
    y = vmlaq_f32(vdupq_n_f32(5.0000001201e-1f), y, x);
    y = vmlaq_f32(x, y, z);
    y = vaddq_f32(y, vdupq_n_f32(1.0f));

    int32x4_t n = vcvtq_s32_f32(fx);
    n = vaddq_s32(n, vdupq_n_s32(0x7f));
    n = vshlq_n_s32(n, 23);
    return vmulq_f32(y, vreinterpretq_f32_s32(n));
}

inline float32x4_t sigmoid128_ps(float32x4_t x) {
    const float32x4_t one = vdupq_n_f32(1.0f);
    const float32x4_t e = exp128_ps(vnegq_f32(x));
    return vdivq_f32(one, vaddq_f32(one, e));
}

void gemm_neon(int M, int N, int K, const float* A, const float* B, float* C,
               bool accumulate) {
    int j = 0;
    for (; j + 8 <= N; j += 8) {
        for (int i = 0; i < M; ++i) {
            const float* a = A + (int64_t)i * K;
            float* c = C + (int64_t)i * N + j;
            float32x4_t r0 = accumulate ? vld1q_f32(c) : vdupq_n_f32(0.0f);
            float32x4_t r1 = accumulate ? vld1q_f32(c + 4) : vdupq_n_f32(0.0f);
            const float* b = B + j;
            for (int k = 0; k < K; ++k, b += N) {
                const float32x4_t av = vdupq_n_f32(a[k]);
                r0 = vmlaq_f32(r0, av, vld1q_f32(b));
                r1 = vmlaq_f32(r1, av, vld1q_f32(b + 4));
            }
            vst1q_f32(c, r0);
            vst1q_f32(c + 4, r1);
        }
    }
    if (j < N) {
        for (int i = 0; i < M; ++i) {
            const float* a = A + (int64_t)i * K;
            float* c = C + (int64_t)i * N;
            for (int jj = j; jj < N; ++jj) {
                float s = accumulate ? c[jj] : 0.0f;
                for (int k = 0; k < K; ++k) s += a[k] * B[(int64_t)k * N + jj];
                c[jj] = s;
            }
        }
    }
}

void lincomb_neon(int64_t n, float a, const float* x, float b, const float* y, float* o) {
    const float32x4_t va = vdupq_n_f32(a);
    const float32x4_t vb = vdupq_n_f32(b);
    int64_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const float32x4_t r = vmlaq_f32(vmulq_f32(vb, vld1q_f32(y + i)), va, vld1q_f32(x + i));
        vst1q_f32(o + i, r);
    }
    for (; i < n; ++i) o[i] = a * x[i] + b * y[i];
}

void vmul_neon(int64_t n, const float* x, const float* y, float* o) {
    int64_t i = 0;
    for (; i + 4 <= n; i += 4) vst1q_f32(o + i, vmulq_f32(vld1q_f32(x + i), vld1q_f32(y + i)));
    for (; i < n; ++i) o[i] = x[i] * y[i];
}

void silu_neon(int64_t n, const float* x, float* y) {
    int64_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const float32x4_t vx = vld1q_f32(x + i);
        vst1q_f32(y + i, vmulq_f32(vx, sigmoid128_ps(vx)));
    }
    for (; i < n; ++i) {
        const float s = 1.0f / (1.0f + std::exp(-x[i]));
        y[i] = x[i] * s;
    }
}

void silu_grad_neon(int64_t n, const float* x, const float* dy, float* dx) {
    const float32x4_t one = vdupq_n_f32(1.0f);
    int64_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const float32x4_t vx = vld1q_f32(x + i);
        const float32x4_t s = sigmoid128_ps(vx);
        const float32x4_t t = vmlaq_f32(s, vmulq_f32(vx, s), vsubq_f32(one, s));
        vst1q_f32(dx + i, vmulq_f32(vld1q_f32(dy + i), t));
    }
    for (; i < n; ++i) {
        const float s = 1.0f / (1.0f + std::exp(-x[i]));
        dx[i] = dy[i] * (s + x[i] * s * (1.0f - s));
    }
}

void softmax_rows_neon(int rows, int cols, const float* x, float* y) {
    for (int r = 0; r < rows; ++r) {
        const float* xr = x + (int64_t)r * cols;
        float* yr = y + (int64_t)r * cols;
        float mx = xr[0];
        for (int j = 1; j < cols; ++j) mx = xr[j] > mx ? xr[j] : mx;
        const float32x4_t vmx = vdupq_n_f32(mx);
        double s = 0.0;
        int j = 0;
        for (; j + 4 <= cols; j += 4) {
            const float32x4_t e = exp128_ps(vsubq_f32(vld1q_f32(xr + j), vmx));
            vst1q_f32(yr + j, e);
            float tmp[4];
            vst1q_f32(tmp, e);
            s += (double)tmp[0] + tmp[1] + tmp[2] + tmp[3];
        }
        for (; j < cols; ++j) {
            const float e = std::exp(xr[j] - mx);
            yr[j] = e;
            s += (double)e;
        }
        for (j = 0; j < cols; ++j) yr[j] = (float)((double)yr[j] / s);
    }
}

double sum_neon(int64_t n, const float* x) {
    double s = 0.0;
    for (int64_t i = 0; i < n; ++i) s += (double)x[i];
    return s;
}

double sumsq_neon(int64_t n, const float* x) {
    double s = 0.0;
    for (int64_t i = 0; i < n; ++i) s += (double)x[i] * (double)x[i];
    return s;
}

double sqdiff_neon(int64_t n, const float* a, const float* b) {
    double s = 0.0;
    for (int64_t i = 0; i < n; ++i) {
        const double d = (double)a[i] - (double)b[i];
        s += d * d;
    }
    return s;
}

void adam_neon(int64_t n, float* p, const float* g, float* m, float* v, float lr,
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

const Ops& neon_ops() {
    static const Ops ops = {
        "neon",         gemm_neon,      lincomb_neon,  vmul_neon,
        silu_neon,      silu_grad_neon, softmax_rows_neon,
        sum_neon,       sumsq_neon,     sqdiff_neon,   adam_neon,
    };
    return ops;
}

}  // namespace injdiff::kernels
