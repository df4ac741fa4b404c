#pragma once

#include "bayescg/dense.hpp"

namespace bayescg {

struct SymmetricEig {
    Vector eigenvalues;       // descending
    DenseMatrix eigenvectors; // columns, same order
};

// Cyclic Jacobi on a symmetric matrix. Converges to off-diagonal Frobenius mass
// below 1e-14 relative; throws after max_sweeps sweeps without convergence.
SymmetricEig symmetric_eig(const DenseMatrix& m, int max_sweeps = 100);

struct PsdSvd {
    DenseMatrix u;          // orthogonal, columns ordered by singular value descending
    Vector singular_values; // eigenvalues clamped at zero
    Vector raw_eigenvalues; // unclamped, same order
};

// SVD of a symmetric positive semidefinite matrix via the symmetric eigendecomposition.
// Small negative eigenvalues are clamped to zero; asymmetry beyond tolerance throws.
PsdSvd svd_psd(const DenseMatrix& s, double asym_tol = 1e-8);

// Symmetric PSD square root.
DenseMatrix symmetric_sqrt(const DenseMatrix& m);

}  // namespace bayescg
