#pragma once

#include <cstddef>
#include <stdexcept>

#include "bayescg/dense.hpp"
#include "bayescg/sparse.hpp"
#include "bayescg/triangular.hpp"
#include "bayescg/vec.hpp"

namespace bayescg {

// Dense Cholesky factorization A = L L' of a symmetric positive definite matrix.
class CholeskyFactor {
  public:
    explicit CholeskyFactor(const DenseMatrix& spd);

    std::size_t dim() const { return lower_.rows(); }
    const DenseMatrix& lower() const { return lower_; }

    Vector solve(const Vector& b) const;          // A x = b
    Vector solve_lower(const Vector& b) const;    // L y = b
    Vector solve_upper(const Vector& b) const;    // L' x = b
    DenseMatrix solve_matrix(const DenseMatrix& b) const;
    DenseMatrix inverse() const;
    double log_det() const;

  private:
    DenseMatrix lower_;
};

// Dense LU factorization with partial pivoting.
class LuFactor {
  public:
    explicit LuFactor(const DenseMatrix& a);

    std::size_t dim() const { return lu_.rows(); }
    Vector solve(const Vector& b) const;            // A x = b
    Vector solve_transpose(const Vector& b) const;  // A' x = b
    DenseMatrix inverse() const;

  private:
    DenseMatrix lu_;
    std::vector<std::size_t> perm_;  // row permutation: PA = LU, row i of LU holds row perm_[i] of A
};

struct QrResult {
    DenseMatrix q;  // d x d orthogonal
    DenseMatrix r;  // d x k upper trapezoidal
};

// Householder QR of a d x k matrix, k <= d, with full Q accumulated.
QrResult householder_qr(const DenseMatrix& a);

// Orthonormal basis of the orthogonal complement of range(k_basis), computed from
// the trailing d - k columns of the Householder Q. Throws when k_basis is rank
// deficient (diagonal of R below tolerance relative to the largest column norm).
DenseMatrix qr_null_space(const DenseMatrix& k_basis);

struct IncompleteCholeskyBreakdown : std::runtime_error {
    IncompleteCholeskyBreakdown(std::size_t row_index, double pivot);
    std::size_t row;
    double pivot_value;
};

// Zero-fill incomplete Cholesky on the lower-triangular sparsity pattern of a.
// Throws IncompleteCholeskyBreakdown when a pivot is non-positive.
TriangularFactor incomplete_cholesky_zero_fill(const SparseMatrix& a);

// Retries once on breakdown with a + shift_scale * diag(a).
TriangularFactor incomplete_cholesky_with_shift(const SparseMatrix& a, double shift_scale = 1e-2);

}  // namespace bayescg
