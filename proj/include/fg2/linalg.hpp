#pragma once

// Small dense symmetric linear algebra (double precision only): Cholesky for
// SPD systems, cyclic Jacobi for symmetric eigendecomposition, and a
// pseudoinverse solve built on the latter for rank-deficient systems.

#include "fg2/mat.hpp"

namespace fg2 {

// In-place lower Cholesky of SPD A (n x n). Throws Error if a pivot is not
// strictly positive.
MatD cholesky(const MatD& A);

// Solve A x = b for SPD A via Cholesky; b may have multiple columns.
MatD cholesky_solve(const MatD& A, const MatD& b);

struct EigSym {
    std::vector<double> values; // ascending
    MatD vectors;               // columns are eigenvectors, A = V diag(w) V^T
};

// Cyclic Jacobi eigendecomposition of symmetric A. Converges quadratically;
// sweeps are capped at 64 (far above what <=4096-dim problems need).
EigSym eigh(const MatD& A);

// Minimum-norm solve of (possibly singular) symmetric A x = b using the
// eigendecomposition; eigenvalues below tol * max|w| are treated as zero.
MatD pinv_solve(const MatD& A, const MatD& b, double tol = 1e-12);

} // namespace fg2
