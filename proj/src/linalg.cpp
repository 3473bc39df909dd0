#include "fg2/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fg2 {

MatD cholesky(const MatD& A) {
    require(A.rows == A.cols, "cholesky: matrix must be square");
    const size_t n = A.rows;
    MatD L(n, n);
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = 0; j <= i; ++j) {
            double s = A(i, j);
            for (size_t k = 0; k < j; ++k) s -= L(i, k) * L(j, k);
            if (i == j) {
                if (s <= 0.0) throw Error("cholesky: matrix is not positive definite");
                L(i, i) = std::sqrt(s);
            } else {
                L(i, j) = s / L(j, j);
            }
        }
    }
    return L;
}

MatD cholesky_solve(const MatD& A, const MatD& b) {
    require(A.rows == b.rows, "cholesky_solve: dimension mismatch");
    const MatD L = cholesky(A);
    const size_t n = A.rows, m = b.cols;
    MatD x = b;
    // forward: L y = b
    for (size_t i = 0; i < n; ++i) {
        for (size_t c = 0; c < m; ++c) {
            double s = x(i, c);
            for (size_t k = 0; k < i; ++k) s -= L(i, k) * x(k, c);
            x(i, c) = s / L(i, i);
        }
    }
    // backward: L^T x = y
    for (size_t ii = n; ii-- > 0;) {
        for (size_t c = 0; c < m; ++c) {
            double s = x(ii, c);
            for (size_t k = ii + 1; k < n; ++k) s -= L(k, ii) * x(k, c);
            x(ii, c) = s / L(ii, ii);
        }
    }
    return x;
}

EigSym eigh(const MatD& A) {
    require(A.rows == A.cols, "eigh: matrix must be square");
    const size_t n = A.rows;
    MatD S = A;
    MatD V(n, n);
    for (size_t i = 0; i < n; ++i) V(i, i) = 1.0;

    for (int sweep = 0; sweep < 64; ++sweep) {
        // scale-relative convergence: off-diagonal mass vs diagonal mass
        double off = 0.0, base = 0.0;
        for (size_t p = 0; p < n; ++p) {
            base += S(p, p) * S(p, p);
            for (size_t q = p + 1; q < n; ++q) off += S(p, q) * S(p, q);
        }
        if (off <= std::max(base, 1e-300) * 1e-30) break;

        for (size_t p = 0; p + 1 < n; ++p) {
            for (size_t q = p + 1; q < n; ++q) {
                const double apq = S(p, q);
                // threshold rotation: skipping entries this small perturbs
                // eigenvalues by ~1e-16 of the local scale at most
                if (apq * apq <= 1e-32 * std::abs(S(p, p) * S(q, q)) + 1e-300) continue;
                const double theta = (S(q, q) - S(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (size_t k = 0; k < n; ++k) {
                    const double skp = S(k, p), skq = S(k, q);
                    S(k, p) = c * skp - s * skq;
                    S(k, q) = s * skp + c * skq;
                }
                for (size_t k = 0; k < n; ++k) {
                    const double spk = S(p, k), sqk = S(q, k);
                    S(p, k) = c * spk - s * sqk;
                    S(q, k) = s * spk + c * sqk;
                }
                for (size_t k = 0; k < n; ++k) {
                    const double vkp = V(k, p), vkq = V(k, q);
                    V(k, p) = c * vkp - s * vkq;
                    V(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    // sort ascending by eigenvalue, permuting vector columns to match
    std::vector<size_t> ord(n);
    for (size_t i = 0; i < n; ++i) ord[i] = i;
    std::sort(ord.begin(), ord.end(),
              [&](size_t a, size_t b) { return S(a, a) < S(b, b); });
    EigSym out;
    out.values.resize(n);
    out.vectors = MatD(n, n);
    for (size_t j = 0; j < n; ++j) {
        out.values[j] = S(ord[j], ord[j]);
        for (size_t i = 0; i < n; ++i) out.vectors(i, j) = V(i, ord[j]);
    }
    return out;
}

MatD pinv_solve(const MatD& A, const MatD& b, double tol) {
    require(A.rows == b.rows, "pinv_solve: dimension mismatch");
    const EigSym eg = eigh(A);
    const size_t n = A.rows, m = b.cols;
    double wmax = 0.0;
    for (double w : eg.values) wmax = std::max(wmax, std::abs(w));
    const double cut = tol * wmax;

    // x = V diag(1/w) V^T b over the above-cutoff spectrum
    MatD vtb(n, m);
    for (size_t j = 0; j < n; ++j)
        for (size_t c = 0; c < m; ++c) {
            double s = 0.0;
            for (size_t i = 0; i < n; ++i) s += eg.vectors(i, j) * b(i, c);
            vtb(j, c) = s;
        }
    MatD x(n, m);
    for (size_t j = 0; j < n; ++j) {
        const double w = eg.values[j];
        if (std::abs(w) <= cut) continue;
        for (size_t i = 0; i < n; ++i)
            for (size_t c = 0; c < m; ++c)
                x(i, c) += eg.vectors(i, j) * (vtb(j, c) / w);
    }
    return x;
}

} // namespace fg2
