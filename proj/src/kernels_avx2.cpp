// AVX2+FMA kernel variants. Compiled with -mavx2 -mfma; only dispatched
// when CPUID reports support.

#include <immintrin.h>

#include <cmath>
#include <cstdint>

#include "injdiff/kernels.hpp"

namespace injdiff::kernels {

namespace {

// Cephes-style expf, ~1 ulp over the clamped range
inline __m256 exp256_ps(__m256 x) {
    const __m256 hi = _mm256_set1_ps(88.3762626647949f);
    const __m256 lo = _mm256_set1_ps(-88.3762626647949f);
    x = _mm256_min_ps(_mm256_max_ps(x, lo), hi);

    const __m256 log2ef = _mm256_set1_ps(1.44269504088896341f);
    __m256 fx = _mm256_fmadd_ps(x, log2ef, _mm256_set1_ps(0.5f));
    fx = _mm256_floor_ps(fx);

    const __m256 c1 = _mm256_set1_ps(0.693359375f);
    const __m256 c2 = _mm256_set1_ps(-2.12194440e-4f);
    x = _mm256_fnmadd_ps(fx, c1, x);
    x = _mm256_fnmadd_ps(fx, c2, x);

    const __m256 z = _mm256_mul_ps(x, x);
    __m256 y = _mm256_set1_ps(1.9875691500e-4f);
    y = _mm256_fmadd_ps(y, x, _mm256_set1_ps(1.3981999507e-3f));
    y = _mm256_fmadd_ps(y, x, _mm256_set1_ps(8.3334519073e-3f));
    y = _mm256_fmadd_ps(y, x, _mm256_set1_ps(4.1665795894e-2f));
    y = _mm256_fmadd_ps(y, x, _mm256_set1_ps(1.6666665459e-1f));
    y = _mm256_fmadd_ps(y, x, _mm256_set1_ps(5.0000001201e-1f));
    y = _mm256_fmadd_ps(y, z, x);
    y = _mm256_add_ps(y, _mm256_set1_ps(1.0f));

    __m256i n = _mm256_cvttps_epi32(fx);
    n = _mm256_add_epi32(n, _mm256_set1_epi32(0x7f));
    n = _mm256_slli_epi32(n, 23);
    return _mm256_mul_ps(y, _mm256_castsi256_ps(n));
}

inline __m256 sigmoid256_ps(__m256 x) {
    const __m256 one = _mm256_set1_ps(1.0f);
    const __m256 e = exp256_ps(_mm256_sub_ps(_mm256_setzero_ps(), x));
    return _mm256_div_ps(one, _mm256_add_ps(one, e));
}

inline float hsum256(__m256 v) {
    __m128 l = _mm256_castps256_ps128(v);
    __m128 h = _mm256_extractf128_ps(v, 1);
    l = _mm_add_ps(l, h);
    l = _mm_hadd_ps(l, l);
    l = _mm_hadd_ps(l, l);
    return _mm_cvtss_f32(l);
}

inline double hsum256d(__m256d v) {
    __m128d l = _mm256_castpd256_pd128(v);
    __m128d h = _mm256_extractf128_pd(v, 1);
    l = _mm_add_pd(l, h);
    return _mm_cvtsd_f64(l) + _mm_cvtsd_f64(_mm_unpackhi_pd(l, l));
}

// 1 row x 16 cols inner block
inline void gemm_row16(int K, int N, const float* a, const float* B, float* c, bool acc) {
    __m256 c0 = acc ? _mm256_loadu_ps(c) : _mm256_setzero_ps();
    __m256 c1 = acc ? _mm256_loadu_ps(c + 8) : _mm256_setzero_ps();
    for (int k = 0; k < K; ++k) {
        const __m256 av = _mm256_set1_ps(a[k]);
        const float* b = B + (int64_t)k * N;
        c0 = _mm256_fmadd_ps(av, _mm256_loadu_ps(b), c0);
        c1 = _mm256_fmadd_ps(av, _mm256_loadu_ps(b + 8), c1);
    }
    _mm256_storeu_ps(c, c0);
    _mm256_storeu_ps(c + 8, c1);
}

void gemm_avx2(int M, int N, int K, const float* A, const float* B, float* C,
               bool accumulate) {
    int j = 0;
    for (; j + 16 <= N; j += 16) {
        int i = 0;
        for (; i + 4 <= M; i += 4) {
            const float* a0 = A + (int64_t)(i + 0) * K;
            const float* a1 = A + (int64_t)(i + 1) * K;
            const float* a2 = A + (int64_t)(i + 2) * K;
            const float* a3 = A + (int64_t)(i + 3) * K;
            float* c0 = C + (int64_t)(i + 0) * N + j;
            float* c1 = C + (int64_t)(i + 1) * N + j;
            float* c2 = C + (int64_t)(i + 2) * N + j;
            float* c3 = C + (int64_t)(i + 3) * N + j;
            __m256 r00 = accumulate ? _mm256_loadu_ps(c0) : _mm256_setzero_ps();
            __m256 r01 = accumulate ? _mm256_loadu_ps(c0 + 8) : _mm256_setzero_ps();
            __m256 r10 = accumulate ? _mm256_loadu_ps(c1) : _mm256_setzero_ps();
            __m256 r11 = accumulate ? _mm256_loadu_ps(c1 + 8) : _mm256_setzero_ps();
            __m256 r20 = accumulate ? _mm256_loadu_ps(c2) : _mm256_setzero_ps();
            __m256 r21 = accumulate ? _mm256_loadu_ps(c2 + 8) : _mm256_setzero_ps();
            __m256 r30 = accumulate ? _mm256_loadu_ps(c3) : _mm256_setzero_ps();
            __m256 r31 = accumulate ? _mm256_loadu_ps(c3 + 8) : _mm256_setzero_ps();
            const float* b = B + j;
            for (int k = 0; k < K; ++k, b += N) {
                const __m256 b0 = _mm256_loadu_ps(b);
                const __m256 b1 = _mm256_loadu_ps(b + 8);
                __m256 av;
                av = _mm256_set1_ps(a0[k]);
                r00 = _mm256_fmadd_ps(av, b0, r00);
                r01 = _mm256_fmadd_ps(av, b1, r01);
                av = _mm256_set1_ps(a1[k]);
                r10 = _mm256_fmadd_ps(av, b0, r10);
                r11 = _mm256_fmadd_ps(av, b1, r11);
                av = _mm256_set1_ps(a2[k]);
                r20 = _mm256_fmadd_ps(av, b0, r20);
                r21 = _mm256_fmadd_ps(av, b1, r21);
                av = _mm256_set1_ps(a3[k]);
                r30 = _mm256_fmadd_ps(av, b0, r30);
                r31 = _mm256_fmadd_ps(av, b1, r31);
            }
            _mm256_storeu_ps(c0, r00);
            _mm256_storeu_ps(c0 + 8, r01);
            _mm256_storeu_ps(c1, r10);
            _mm256_storeu_ps(c1 + 8, r11);
            _mm256_storeu_ps(c2, r20);
            _mm256_storeu_ps(c2 + 8, r21);
            _mm256_storeu_ps(c3, r30);
            _mm256_storeu_ps(c3 + 8, r31);
        }
        for (; i < M; ++i) {
            gemm_row16(K, N, A + (int64_t)i * K, B + j, C + (int64_t)i * N + j, accumulate);
        }
    }
    for (; j + 8 <= N; j += 8) {
        for (int i = 0; i < M; ++i) {
            const float* a = A + (int64_t)i * K;
            float* c = C + (int64_t)i * N + j;
            __m256 r = accumulate ? _mm256_loadu_ps(c) : _mm256_setzero_ps();
            const float* b = B + j;
            for (int k = 0; k < K; ++k, b += N) {
                r = _mm256_fmadd_ps(_mm256_set1_ps(a[k]), _mm256_loadu_ps(b), r);
            }
            _mm256_storeu_ps(c, r);
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

void lincomb_avx2(int64_t n, float a, const float* x, float b, const float* y, float* o) {
    const __m256 va = _mm256_set1_ps(a);
    const __m256 vb = _mm256_set1_ps(b);
    int64_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 vx = _mm256_loadu_ps(x + i);
        const __m256 vy = _mm256_loadu_ps(y + i);
        _mm256_storeu_ps(o + i, _mm256_fmadd_ps(va, vx, _mm256_mul_ps(vb, vy)));
    }
    for (; i < n; ++i) o[i] = a * x[i] + b * y[i];
}

void vmul_avx2(int64_t n, const float* x, const float* y, float* o) {
    int64_t i = 0;
    for (; i + 8 <= n; i += 8) {
        _mm256_storeu_ps(o + i, _mm256_mul_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
    }
    for (; i < n; ++i) o[i] = x[i] * y[i];
}

void silu_avx2(int64_t n, const float* x, float* y) {
    int64_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 vx = _mm256_loadu_ps(x + i);
        _mm256_storeu_ps(y + i, _mm256_mul_ps(vx, sigmoid256_ps(vx)));
    }
    for (; i < n; ++i) {
        const float s = 1.0f / (1.0f + std::exp(-x[i]));
        y[i] = x[i] * s;
    }
}

void silu_grad_avx2(int64_t n, const float* x, const float* dy, float* dx) {
    const __m256 one = _mm256_set1_ps(1.0f);
    int64_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 vx = _mm256_loadu_ps(x + i);
        const __m256 s = sigmoid256_ps(vx);
        // s + x*s*(1-s)
        const __m256 t = _mm256_fmadd_ps(_mm256_mul_ps(vx, s), _mm256_sub_ps(one, s), s);
        _mm256_storeu_ps(dx + i, _mm256_mul_ps(_mm256_loadu_ps(dy + i), t));
    }
    for (; i < n; ++i) {
        const float s = 1.0f / (1.0f + std::exp(-x[i]));
        dx[i] = dy[i] * (s + x[i] * s * (1.0f - s));
    }
}

void softmax_rows_avx2(int rows, int cols, const float* x, float* y) {
    for (int r = 0; r < rows; ++r) {
        const float* xr = x + (int64_t)r * cols;
        float* yr = y + (int64_t)r * cols;

        float mx = xr[0];
        int j = 0;
        if (cols >= 8) {
            __m256 vm = _mm256_loadu_ps(xr);
            for (j = 8; j + 8 <= cols; j += 8) vm = _mm256_max_ps(vm, _mm256_loadu_ps(xr + j));
            float tmp[8];
            _mm256_storeu_ps(tmp, vm);
            mx = tmp[0];
            for (int q = 1; q < 8; ++q) mx = tmp[q] > mx ? tmp[q] : mx;
        }
        for (; j < cols; ++j) mx = xr[j] > mx ? xr[j] : mx;

        const __m256 vmx = _mm256_set1_ps(mx);
        __m256d acc0 = _mm256_setzero_pd();
        __m256d acc1 = _mm256_setzero_pd();
        double stail = 0.0;
        for (j = 0; j + 8 <= cols; j += 8) {
            const __m256 e = exp256_ps(_mm256_sub_ps(_mm256_loadu_ps(xr + j), vmx));
            _mm256_storeu_ps(yr + j, e);
            acc0 = _mm256_add_pd(acc0, _mm256_cvtps_pd(_mm256_castps256_ps128(e)));
            acc1 = _mm256_add_pd(acc1, _mm256_cvtps_pd(_mm256_extractf128_ps(e, 1)));
        }
        for (; j < cols; ++j) {
            const float e = std::exp(xr[j] - mx);
            yr[j] = e;
            stail += (double)e;
        }
        const double s = hsum256d(_mm256_add_pd(acc0, acc1)) + stail;

        const __m256d vs = _mm256_set1_pd(s);
        for (j = 0; j + 8 <= cols; j += 8) {
            const __m256 e = _mm256_loadu_ps(yr + j);
            const __m256d lo = _mm256_div_pd(_mm256_cvtps_pd(_mm256_castps256_ps128(e)), vs);
            const __m256d hi = _mm256_div_pd(_mm256_cvtps_pd(_mm256_extractf128_ps(e, 1)), vs);
            _mm256_storeu_ps(yr + j,
                             _mm256_set_m128(_mm256_cvtpd_ps(hi), _mm256_cvtpd_ps(lo)));
        }
        for (; j < cols; ++j) yr[j] = (float)((double)yr[j] / s);
    }
}

double sum_avx2(int64_t n, const float* x) {
    __m256d a0 = _mm256_setzero_pd(), a1 = _mm256_setzero_pd();
    int64_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 v = _mm256_loadu_ps(x + i);
        a0 = _mm256_add_pd(a0, _mm256_cvtps_pd(_mm256_castps256_ps128(v)));
        a1 = _mm256_add_pd(a1, _mm256_cvtps_pd(_mm256_extractf128_ps(v, 1)));
    }
    double s = hsum256d(_mm256_add_pd(a0, a1));
    for (; i < n; ++i) s += (double)x[i];
    return s;
}

double sumsq_avx2(int64_t n, const float* x) {
    __m256d a0 = _mm256_setzero_pd(), a1 = _mm256_setzero_pd();
    int64_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 v = _mm256_loadu_ps(x + i);
        const __m256d lo = _mm256_cvtps_pd(_mm256_castps256_ps128(v));
        const __m256d hi = _mm256_cvtps_pd(_mm256_extractf128_ps(v, 1));
        a0 = _mm256_fmadd_pd(lo, lo, a0);
        a1 = _mm256_fmadd_pd(hi, hi, a1);
    }
    double s = hsum256d(_mm256_add_pd(a0, a1));
    for (; i < n; ++i) s += (double)x[i] * (double)x[i];
    return s;
}

double sqdiff_avx2(int64_t n, const float* a, const float* b) {
    __m256d a0 = _mm256_setzero_pd(), a1 = _mm256_setzero_pd();
    int64_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 d = _mm256_sub_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i));
        const __m256d lo = _mm256_cvtps_pd(_mm256_castps256_ps128(d));
        const __m256d hi = _mm256_cvtps_pd(_mm256_extractf128_ps(d, 1));
        a0 = _mm256_fmadd_pd(lo, lo, a0);
        a1 = _mm256_fmadd_pd(hi, hi, a1);
    }
    double s = hsum256d(_mm256_add_pd(a0, a1));
    for (; i < n; ++i) {
        const double d = (double)a[i] - (double)b[i];
        s += d * d;
    }
    return s;
}

void adam_avx2(int64_t n, float* p, const float* g, float* m, float* v, float lr,
               float b1, float b2, float eps, float c1, float c2) {
    const __m256 vb1 = _mm256_set1_ps(b1);
    const __m256 vb2 = _mm256_set1_ps(b2);
    const __m256 v1mb1 = _mm256_set1_ps(1.0f - b1);
    const __m256 v1mb2 = _mm256_set1_ps(1.0f - b2);
    const __m256 vc1 = _mm256_set1_ps(c1);
    const __m256 vc2 = _mm256_set1_ps(c2);
    const __m256 veps = _mm256_set1_ps(eps);
    const __m256 vlr = _mm256_set1_ps(lr);
    int64_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 vg = _mm256_loadu_ps(g + i);
        __m256 vm = _mm256_loadu_ps(m + i);
        __m256 vv = _mm256_loadu_ps(v + i);
        vm = _mm256_fmadd_ps(vb1, vm, _mm256_mul_ps(v1mb1, vg));
        vv = _mm256_fmadd_ps(vb2, vv, _mm256_mul_ps(v1mb2, _mm256_mul_ps(vg, vg)));
        _mm256_storeu_ps(m + i, vm);
        _mm256_storeu_ps(v + i, vv);
        const __m256 mh = _mm256_div_ps(vm, vc1);
        const __m256 vh = _mm256_div_ps(vv, vc2);
        const __m256 den = _mm256_add_ps(_mm256_sqrt_ps(vh), veps);
        const __m256 upd = _mm256_div_ps(_mm256_mul_ps(vlr, mh), den);
        _mm256_storeu_ps(p + i, _mm256_sub_ps(_mm256_loadu_ps(p + i), upd));
    }
    for (; i < n; ++i) {
        m[i] = b1 * m[i] + (1.0f - b1) * g[i];
        v[i] = b2 * v[i] + (1.0f - b2) * g[i] * g[i];
        const float mh = m[i] / c1;
        const float vh = v[i] / c2;
        p[i] -= lr * mh / (std::sqrt(vh) + eps);
    }
}

}  // namespace

const Ops& avx2_ops() {
    static const Ops ops = {
        "avx2",         gemm_avx2,      lincomb_avx2,  vmul_avx2,
        silu_avx2,      silu_grad_avx2, softmax_rows_avx2,
        sum_avx2,       sumsq_avx2,     sqdiff_avx2,   adam_avx2,
    };
    return ops;
}

}  // namespace injdiff::kernels
