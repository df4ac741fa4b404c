#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "bayescg/dense.hpp"
#include "bayescg/vec.hpp"

namespace bayescg {

// Square sparse matrix in compressed-row storage. Column indices are strictly
// increasing within each row; construction validates this.
class SparseMatrix {
  public:
    struct Triplet {
        std::size_t row, col;
        double value;
    };

    SparseMatrix() = default;
    SparseMatrix(std::size_t dim, std::vector<std::size_t> row_offsets,
                 std::vector<std::size_t> cols, std::vector<double> values);

    // Duplicate triplets are summed.
    static SparseMatrix from_triplets(std::size_t dim, std::vector<Triplet> triplets);
    static SparseMatrix from_dense(const DenseMatrix& a, double drop_tol = 0.0);
    static SparseMatrix identity(std::size_t n);
    static SparseMatrix diagonal(const Vector& d);

    std::size_t dim() const { return dim_; }
    std::size_t nnz() const { return values_.size(); }

    std::span<const std::size_t> row_cols(std::size_t i) const {
        return {cols_.data() + row_offsets_[i], cols_.data() + row_offsets_[i + 1]};
    }
    std::span<const double> row_values(std::size_t i) const {
        return {values_.data() + row_offsets_[i], values_.data() + row_offsets_[i + 1]};
    }

    // Value at (i, j), zero when the entry is not stored.
    double coeff(std::size_t i, std::size_t j) const;

    DenseMatrix to_dense() const;

    const std::vector<std::size_t>& row_offsets() const { return row_offsets_; }
    const std::vector<std::size_t>& col_indices() const { return cols_; }
    const std::vector<double>& values() const { return values_; }

  private:
    std::size_t dim_ = 0;
    std::vector<std::size_t> row_offsets_{0};
    std::vector<std::size_t> cols_;
    std::vector<double> values_;
};

Vector matvec(const SparseMatrix& a, const Vector& v);
Vector matvec_transpose(const SparseMatrix& a, const Vector& v);
double max_asymmetry(const SparseMatrix& a);
double frobenius_norm(const SparseMatrix& a);
SparseMatrix add_scaled_diagonal(const SparseMatrix& a, double factor);  // a + factor * diag(a)

double weighted_inner(const SparseMatrix& m, const Vector& x, const Vector& y);

}  // namespace bayescg
