#include "fg2/kernels.hpp"

// Reference backend. Plain loops, no tricks; the summation order here
// (innermost index ascending) is the one the AVX2 broadcast kernels also
// follow for the gemm_nn / gemm_tn paths.

namespace fg2::kern {
namespace {

template <typename T>
void gemm_nn_impl(size_t m, size_t k, size_t n, const T* A, const T* B, T* C, bool acc) {
    for (size_t i = 0; i < m; ++i) {
        T* c = C + i * n;
        if (!acc)
            for (size_t j = 0; j < n; ++j) c[j] = T(0);
        const T* a = A + i * k;
        for (size_t l = 0; l < k; ++l) {
            const T av = a[l];
            const T* b = B + l * n;
            for (size_t j = 0; j < n; ++j) c[j] += av * b[j];
        }
    }
}

template <typename T>
void gemm_nt_impl(size_t m, size_t k, size_t n, const T* A, const T* B, T* C, bool acc) {
    for (size_t i = 0; i < m; ++i) {
        const T* a = A + i * k;
        T* c = C + i * n;
        for (size_t j = 0; j < n; ++j) {
            const T* b = B + j * k;
            T s = T(0);
            for (size_t l = 0; l < k; ++l) s += a[l] * b[l];
            c[j] = acc ? c[j] + s : s;
        }
    }
}

template <typename T>
void gemm_tn_impl(size_t m, size_t k, size_t n, const T* A, const T* B, T* C, bool acc) {
    if (!acc)
        for (size_t i = 0; i < m * n; ++i) C[i] = T(0);
    for (size_t l = 0; l < k; ++l) {
        const T* a = A + l * m;
        const T* b = B + l * n;
        for (size_t i = 0; i < m; ++i) {
            const T av = a[i];
            T* c = C + i * n;
            for (size_t j = 0; j < n; ++j) c[j] += av * b[j];
        }
    }
}

template <typename T>
void axpy_impl(size_t n, T a, const T* x, T* y) {
    for (size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

template <typename T>
void lincomb_impl(size_t n, T a, const T* x, T b, const T* y, T* out) {
    for (size_t i = 0; i < n; ++i) out[i] = a * x[i] + b * y[i];
}

template <typename T>
T dot_impl(size_t n, const T* x, const T* y) {
    T s = T(0);
    for (size_t i = 0; i < n; ++i) s += x[i] * y[i];
    return s;
}

template <typename T>
double sumsq_impl(size_t n, const T* x) {
    double s = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double v = double(x[i]);
        s += v * v;
    }
    return s;
}

} // namespace

const Ops scalar_ops = {
    gemm_nn_impl<float>, gemm_nn_impl<double>,
    gemm_nt_impl<float>, gemm_nt_impl<double>,
    gemm_tn_impl<float>, gemm_tn_impl<double>,
    axpy_impl<float>,    axpy_impl<double>,
    lincomb_impl<float>, lincomb_impl<double>,
    dot_impl<float>,     dot_impl<double>,
    sumsq_impl<float>,   sumsq_impl<double>,
};

} // namespace fg2::kern
