#pragma once

#include <cstddef>
#include <vector>

#include "bayescg/vec.hpp"

namespace bayescg {

// Row-major dense matrix.
class DenseMatrix {
  public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static DenseMatrix identity(std::size_t n) {
        DenseMatrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    static DenseMatrix from_rows(const std::vector<Vector>& rows);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return rows_ == 0 || cols_ == 0; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    double* row_ptr(std::size_t i) { return data_.data() + i * cols_; }
    const double* row_ptr(std::size_t i) const { return data_.data() + i * cols_; }

    Vector col(std::size_t j) const {
        Vector v(rows_);
        for (std::size_t i = 0; i < rows_; ++i) v[i] = (*this)(i, j);
        return v;
    }
    void set_col(std::size_t j, const Vector& v);

    Vector row(std::size_t i) const {
        return Vector(row_ptr(i), row_ptr(i) + cols_);
    }

    DenseMatrix transposed() const;

    // Columns [0, k) as a new matrix.
    DenseMatrix leading_cols(std::size_t k) const;

  private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<double> data_;
};

Vector matvec(const DenseMatrix& a, const Vector& v);
Vector matvec_transpose(const DenseMatrix& a, const Vector& v);
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix matmul_transpose_a(const DenseMatrix& a, const DenseMatrix& b);  // a' b
DenseMatrix matmul_transpose_b(const DenseMatrix& a, const DenseMatrix& b);  // a b'
DenseMatrix add(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix subtract(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix scaled(const DenseMatrix& a, double alpha);
DenseMatrix outer(const Vector& x, const Vector& y);  // x y'

double max_abs(const DenseMatrix& a);
double max_asymmetry(const DenseMatrix& a);  // max_ij |a_ij - a_ji|
double frobenius_norm(const DenseMatrix& a);
double trace(const DenseMatrix& a);
DenseMatrix symmetrized(const DenseMatrix& a);  // (a + a') / 2

double weighted_inner(const DenseMatrix& m, const Vector& x, const Vector& y);

}  // namespace bayescg
