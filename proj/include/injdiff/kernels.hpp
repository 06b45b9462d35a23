#pragma once

#include <cstdint>

namespace injdiff::kernels {

// One table of data-parallel primitives. The scalar entries are the
// reference semantics; the AVX2/NEON variants must agree within float
// rounding (equivalence-tested in test_kernels). Dispatch is picked once
// at startup from CPUID / the INJDIFF_KERNELS env var.
struct Ops {
    const char* name;

    // C[M,N] = A[M,K]*B[K,N], += if accumulate. Row-major, contiguous.
    void (*gemm)(int M, int N, int K, const float* A, const float* B, float* C,
                 bool accumulate);

    // o[i] = a*x[i] + b*y[i]; o may alias x or y
    void (*lincomb)(int64_t n, float a, const float* x, float b, const float* y, float* o);

    // o[i] = x[i]*y[i]; o may alias
    void (*vmul)(int64_t n, const float* x, const float* y, float* o);

    // y = x * sigmoid(x)
    void (*silu)(int64_t n, const float* x, float* y);
    // dx = dy * d/dx silu(x)
    void (*silu_grad)(int64_t n, const float* x, const float* dy, float* dx);

    // row-wise stable softmax; x,y may alias. Rows are normalized in double
    // so every output row sums to 1 within a few ulp.
    void (*softmax_rows)(int rows, int cols, const float* x, float* y);

    double (*sum)(int64_t n, const float* x);
    double (*sumsq)(int64_t n, const float* x);
    double (*sqdiff)(int64_t n, const float* a, const float* b);

    // Adam update: m,v moments, c1=1-b1^t, c2=1-b2^t bias corrections
    void (*adam)(int64_t n, float* p, const float* g, float* m, float* v, float lr,
                 float b1, float b2, float eps, float c1, float c2);
};

const Ops& scalar();
const Ops& active();

// force dispatch for tests: "scalar", "avx2", "neon", "auto"; returns false
// if the requested lane is unavailable on this machine
bool force(const char* name);

bool cpu_has_avx2();
bool cpu_has_neon();

// worker threads used by gemm() row partitioning (default: hardware
// concurrency capped at 8, or INJDIFF_THREADS)
void set_threads(int n);
int threads();

// threaded front end over active().gemm; row partition is static so the
// result is bit-identical for any thread count
void gemm(int M, int N, int K, const float* A, const float* B, float* C,
          bool accumulate = false);

}  // namespace injdiff::kernels
