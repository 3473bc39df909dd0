#pragma once

// Data-parallel arithmetic kernels behind every hot loop (GEMM flavors for
// the denoiser, elementwise combines for the diffusion algebra, reductions
// for losses). Two implementations exist: a scalar reference and an AVX2+FMA
// variant selected at runtime; both use a fixed summation order so results
// are deterministic within a backend. The test suite checks the variants
// against each other on randomized shapes.

#include <cstddef>
#include <cstdint>

namespace fg2::kern {

enum class Backend { scalar, avx2 };

struct Ops {
    // C[m x n] (+)= A[m x k] * B[k x n]
    void (*gemm_nn_f32)(size_t m, size_t k, size_t n, const float* A, const float* B, float* C, bool acc);
    void (*gemm_nn_f64)(size_t m, size_t k, size_t n, const double* A, const double* B, double* C, bool acc);
    // C[m x n] (+)= A[m x k] * B[n x k]^T
    void (*gemm_nt_f32)(size_t m, size_t k, size_t n, const float* A, const float* B, float* C, bool acc);
    void (*gemm_nt_f64)(size_t m, size_t k, size_t n, const double* A, const double* B, double* C, bool acc);
    // C[m x n] (+)= A[k x m]^T * B[k x n]
    void (*gemm_tn_f32)(size_t m, size_t k, size_t n, const float* A, const float* B, float* C, bool acc);
    void (*gemm_tn_f64)(size_t m, size_t k, size_t n, const double* A, const double* B, double* C, bool acc);

    // y += a * x
    void (*axpy_f32)(size_t n, float a, const float* x, float* y);
    void (*axpy_f64)(size_t n, double a, const double* x, double* y);
    // out = a*x + b*y
    void (*lincomb_f32)(size_t n, float a, const float* x, float b, const float* y, float* out);
    void (*lincomb_f64)(size_t n, double a, const double* x, double b, const double* y, double* out);

    float (*dot_f32)(size_t n, const float* x, const float* y);
    double (*dot_f64)(size_t n, const double* x, const double* y);
    // sum of squares, accumulated in double for both scalar types
    double (*sumsq_f32)(size_t n, const float* x);
    double (*sumsq_f64)(size_t n, const double* x);
};

bool cpu_has_avx2();
Backend active_backend();
// Force a backend (tests, benchmarks). Backend::avx2 on an unsupported CPU throws.
void set_backend(Backend b);
const Ops& ops();

// Convenience overloads that route through the active backend.
inline void gemm_nn(size_t m, size_t k, size_t n, const float* A, const float* B, float* C, bool acc = false) { ops().gemm_nn_f32(m, k, n, A, B, C, acc); }
inline void gemm_nn(size_t m, size_t k, size_t n, const double* A, const double* B, double* C, bool acc = false) { ops().gemm_nn_f64(m, k, n, A, B, C, acc); }
inline void gemm_nt(size_t m, size_t k, size_t n, const float* A, const float* B, float* C, bool acc = false) { ops().gemm_nt_f32(m, k, n, A, B, C, acc); }
inline void gemm_nt(size_t m, size_t k, size_t n, const double* A, const double* B, double* C, bool acc = false) { ops().gemm_nt_f64(m, k, n, A, B, C, acc); }
inline void gemm_tn(size_t m, size_t k, size_t n, const float* A, const float* B, float* C, bool acc = false) { ops().gemm_tn_f32(m, k, n, A, B, C, acc); }
inline void gemm_tn(size_t m, size_t k, size_t n, const double* A, const double* B, double* C, bool acc = false) { ops().gemm_tn_f64(m, k, n, A, B, C, acc); }
inline void axpy(size_t n, float a, const float* x, float* y) { ops().axpy_f32(n, a, x, y); }
inline void axpy(size_t n, double a, const double* x, double* y) { ops().axpy_f64(n, a, x, y); }
inline void lincomb(size_t n, float a, const float* x, float b, const float* y, float* out) { ops().lincomb_f32(n, a, x, b, y, out); }
inline void lincomb(size_t n, double a, const double* x, double b, const double* y, double* out) { ops().lincomb_f64(n, a, x, b, y, out); }
inline float dot(size_t n, const float* x, const float* y) { return ops().dot_f32(n, x, y); }
inline double dot(size_t n, const double* x, const double* y) { return ops().dot_f64(n, x, y); }
inline double sumsq(size_t n, const float* x) { return ops().sumsq_f32(n, x); }
inline double sumsq(size_t n, const double* x) { return ops().sumsq_f64(n, x); }

extern const Ops scalar_ops;
extern const Ops avx2_ops; // entries fall back to scalar when built without x86 support

} // namespace fg2::kern
