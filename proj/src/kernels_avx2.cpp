#include "fg2/kernels.hpp"

// AVX2+FMA backend. Compiled with per-function target attributes so the TU
// builds without global -mavx2; the dispatcher only installs this table when
// the CPU reports both features. gemm_nn/gemm_tn broadcast one A element and
// FMA across a row of B, which keeps the per-element accumulation order
// identical to the scalar kernels; gemm_nt and the reductions use lane-wise
// partial sums, so they only agree with scalar up to rounding.

#if defined(__x86_64__) || defined(__i386__)
#include <immintrin.h>
#define FG2_X86 1
#else
#define FG2_X86 0
#endif

namespace fg2::kern {

#if FG2_X86
namespace {

#define FG2_AVX2 __attribute__((target("avx2,fma")))

FG2_AVX2 inline float hsum8(__m256 v) {
    __m128 lo = _mm256_castps256_ps128(v);
    __m128 hi = _mm256_extractf128_ps(v, 1);
    lo = _mm_add_ps(lo, hi);
    lo = _mm_add_ps(lo, _mm_movehl_ps(lo, lo));
    lo = _mm_add_ss(lo, _mm_shuffle_ps(lo, lo, 1));
    return _mm_cvtss_f32(lo);
}

FG2_AVX2 inline double hsum4(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

// ---- f32 ----

FG2_AVX2 void gemm_nn_f32(size_t m, size_t k, size_t n, const float* A, const float* B, float* C, bool acc) {
    for (size_t i = 0; i < m; ++i) {
        float* c = C + i * n;
        if (!acc)
            for (size_t j = 0; j < n; ++j) c[j] = 0.f;
        const float* a = A + i * k;
        for (size_t l = 0; l < k; ++l) {
            const __m256 av = _mm256_set1_ps(a[l]);
            const float* b = B + l * n;
            size_t j = 0;
            for (; j + 8 <= n; j += 8) {
                __m256 cv = _mm256_loadu_ps(c + j);
                cv = _mm256_fmadd_ps(av, _mm256_loadu_ps(b + j), cv);
                _mm256_storeu_ps(c + j, cv);
            }
            const float as = a[l];
            for (; j < n; ++j) c[j] += as * b[j];
        }
    }
}

FG2_AVX2 void gemm_nt_f32(size_t m, size_t k, size_t n, const float* A, const float* B, float* C, bool acc) {
    for (size_t i = 0; i < m; ++i) {
        const float* a = A + i * k;
        float* c = C + i * n;
        for (size_t j = 0; j < n; ++j) {
            const float* b = B + j * k;
            __m256 sv = _mm256_setzero_ps();
            size_t l = 0;
            for (; l + 8 <= k; l += 8)
                sv = _mm256_fmadd_ps(_mm256_loadu_ps(a + l), _mm256_loadu_ps(b + l), sv);
            float s = hsum8(sv);
            for (; l < k; ++l) s += a[l] * b[l];
            c[j] = acc ? c[j] + s : s;
        }
    }
}

FG2_AVX2 void gemm_tn_f32(size_t m, size_t k, size_t n, const float* A, const float* B, float* C, bool acc) {
    if (!acc)
        for (size_t i = 0; i < m * n; ++i) C[i] = 0.f;
    for (size_t l = 0; l < k; ++l) {
        const float* a = A + l * m;
        const float* b = B + l * n;
        for (size_t i = 0; i < m; ++i) {
            const __m256 av = _mm256_set1_ps(a[i]);
            float* c = C + i * n;
            size_t j = 0;
            for (; j + 8 <= n; j += 8) {
                __m256 cv = _mm256_loadu_ps(c + j);
                cv = _mm256_fmadd_ps(av, _mm256_loadu_ps(b + j), cv);
                _mm256_storeu_ps(c + j, cv);
            }
            const float as = a[i];
            for (; j < n; ++j) c[j] += as * b[j];
        }
    }
}

FG2_AVX2 void axpy_f32(size_t n, float a, const float* x, float* y) {
    const __m256 av = _mm256_set1_ps(a);
    size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 yv = _mm256_loadu_ps(y + i);
        yv = _mm256_fmadd_ps(av, _mm256_loadu_ps(x + i), yv);
        _mm256_storeu_ps(y + i, yv);
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

FG2_AVX2 void lincomb_f32(size_t n, float a, const float* x, float b, const float* y, float* out) {
    const __m256 av = _mm256_set1_ps(a), bv = _mm256_set1_ps(b);
    size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 r = _mm256_mul_ps(av, _mm256_loadu_ps(x + i));
        r = _mm256_fmadd_ps(bv, _mm256_loadu_ps(y + i), r);
        _mm256_storeu_ps(out + i, r);
    }
    for (; i < n; ++i) out[i] = a * x[i] + b * y[i];
}

FG2_AVX2 float dot_f32(size_t n, const float* x, const float* y) {
    __m256 sv = _mm256_setzero_ps();
    size_t i = 0;
    for (; i + 8 <= n; i += 8)
        sv = _mm256_fmadd_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i), sv);
    float s = hsum8(sv);
    for (; i < n; ++i) s += x[i] * y[i];
    return s;
}

FG2_AVX2 double sumsq_f32(size_t n, const float* x) {
    // widen to double lanes before accumulating, matching the scalar kernel
    __m256d s0 = _mm256_setzero_pd(), s1 = _mm256_setzero_pd();
    size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 v = _mm256_loadu_ps(x + i);
        const __m256d lo = _mm256_cvtps_pd(_mm256_castps256_ps128(v));
        const __m256d hi = _mm256_cvtps_pd(_mm256_extractf128_ps(v, 1));
        s0 = _mm256_fmadd_pd(lo, lo, s0);
        s1 = _mm256_fmadd_pd(hi, hi, s1);
    }
    double s = hsum4(_mm256_add_pd(s0, s1));
    for (; i < n; ++i) {
        const double v = double(x[i]);
        s += v * v;
    }
    return s;
}

// ---- f64 ----

FG2_AVX2 void gemm_nn_f64(size_t m, size_t k, size_t n, const double* A, const double* B, double* C, bool acc) {
    for (size_t i = 0; i < m; ++i) {
        double* c = C + i * n;
        if (!acc)
            for (size_t j = 0; j < n; ++j) c[j] = 0.0;
        const double* a = A + i * k;
        for (size_t l = 0; l < k; ++l) {
            const __m256d av = _mm256_set1_pd(a[l]);
            const double* b = B + l * n;
            size_t j = 0;
            for (; j + 4 <= n; j += 4) {
                __m256d cv = _mm256_loadu_pd(c + j);
                cv = _mm256_fmadd_pd(av, _mm256_loadu_pd(b + j), cv);
                _mm256_storeu_pd(c + j, cv);
            }
            const double as = a[l];
            for (; j < n; ++j) c[j] += as * b[j];
        }
    }
}

FG2_AVX2 void gemm_nt_f64(size_t m, size_t k, size_t n, const double* A, const double* B, double* C, bool acc) {
    for (size_t i = 0; i < m; ++i) {
        const double* a = A + i * k;
        double* c = C + i * n;
        for (size_t j = 0; j < n; ++j) {
            const double* b = B + j * k;
            __m256d sv = _mm256_setzero_pd();
            size_t l = 0;
            for (; l + 4 <= k; l += 4)
                sv = _mm256_fmadd_pd(_mm256_loadu_pd(a + l), _mm256_loadu_pd(b + l), sv);
            double s = hsum4(sv);
            for (; l < k; ++l) s += a[l] * b[l];
            c[j] = acc ? c[j] + s : s;
        }
    }
}

FG2_AVX2 void gemm_tn_f64(size_t m, size_t k, size_t n, const double* A, const double* B, double* C, bool acc) {
    if (!acc)
        for (size_t i = 0; i < m * n; ++i) C[i] = 0.0;
    for (size_t l = 0; l < k; ++l) {
        const double* a = A + l * m;
        const double* b = B + l * n;
        for (size_t i = 0; i < m; ++i) {
            const __m256d av = _mm256_set1_pd(a[i]);
            double* c = C + i * n;
            size_t j = 0;
            for (; j + 4 <= n; j += 4) {
                __m256d cv = _mm256_loadu_pd(c + j);
                cv = _mm256_fmadd_pd(av, _mm256_loadu_pd(b + j), cv);
                _mm256_storeu_pd(c + j, cv);
            }
            const double as = a[i];
            for (; j < n; ++j) c[j] += as * b[j];
        }
    }
}

FG2_AVX2 void axpy_f64(size_t n, double a, const double* x, double* y) {
    const __m256d av = _mm256_set1_pd(a);
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d yv = _mm256_loadu_pd(y + i);
        yv = _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), yv);
        _mm256_storeu_pd(y + i, yv);
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

FG2_AVX2 void lincomb_f64(size_t n, double a, const double* x, double b, const double* y, double* out) {
    const __m256d av = _mm256_set1_pd(a), bv = _mm256_set1_pd(b);
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d r = _mm256_mul_pd(av, _mm256_loadu_pd(x + i));
        r = _mm256_fmadd_pd(bv, _mm256_loadu_pd(y + i), r);
        _mm256_storeu_pd(out + i, r);
    }
    for (; i < n; ++i) out[i] = a * x[i] + b * y[i];
}

FG2_AVX2 double dot_f64(size_t n, const double* x, const double* y) {
    __m256d sv = _mm256_setzero_pd();
    size_t i = 0;
    for (; i + 4 <= n; i += 4)
        sv = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), sv);
    double s = hsum4(sv);
    for (; i < n; ++i) s += x[i] * y[i];
    return s;
}

FG2_AVX2 double sumsq_f64(size_t n, const double* x) {
    __m256d sv = _mm256_setzero_pd();
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d v = _mm256_loadu_pd(x + i);
        sv = _mm256_fmadd_pd(v, v, sv);
    }
    double s = hsum4(sv);
    for (; i < n; ++i) s += x[i] * x[i];
    return s;
}

#undef FG2_AVX2

} // namespace

const Ops avx2_ops = {
    gemm_nn_f32, gemm_nn_f64,
    gemm_nt_f32, gemm_nt_f64,
    gemm_tn_f32, gemm_tn_f64,
    axpy_f32,    axpy_f64,
    lincomb_f32, lincomb_f64,
    dot_f32,     dot_f64,
    sumsq_f32,   sumsq_f64,
};

#else // !FG2_X86

const Ops avx2_ops = scalar_ops;

#endif

} // namespace fg2::kern
