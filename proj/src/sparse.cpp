#include "bayescg/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bayescg {

SparseMatrix::SparseMatrix(std::size_t dim, std::vector<std::size_t> row_offsets,
                           std::vector<std::size_t> cols, std::vector<double> values)
    : dim_(dim), row_offsets_(std::move(row_offsets)), cols_(std::move(cols)),
      values_(std::move(values)) {
    if (row_offsets_.size() != dim_ + 1 || row_offsets_.front() != 0 ||
        row_offsets_.back() != values_.size() || cols_.size() != values_.size())
        throw std::invalid_argument("SparseMatrix: inconsistent compressed-row arrays");
    for (std::size_t i = 0; i < dim_; ++i) {
        if (row_offsets_[i] > row_offsets_[i + 1])
            throw std::invalid_argument("SparseMatrix: row offsets not monotone");
        for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) {
            if (cols_[k] >= dim_)
                throw std::invalid_argument("SparseMatrix: column index out of range");
            if (k > row_offsets_[i] && cols_[k] <= cols_[k - 1])
                throw std::invalid_argument("SparseMatrix: column indices not strictly increasing");
        }
    }
}

SparseMatrix SparseMatrix::from_triplets(std::size_t dim, std::vector<Triplet> triplets) {
    std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
        return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    std::vector<std::size_t> offsets(dim + 1, 0), cols;
    std::vector<double> values;
    cols.reserve(triplets.size());
    values.reserve(triplets.size());
    for (std::size_t k = 0; k < triplets.size(); ++k) {
        const auto& t = triplets[k];
        if (t.row >= dim || t.col >= dim)
            throw std::invalid_argument("from_triplets: index out of range");
        if (!values.empty() && triplets[k - 1].row == t.row && triplets[k - 1].col == t.col) {
            values.back() += t.value;
        } else {
            cols.push_back(t.col);
            values.push_back(t.value);
            ++offsets[t.row + 1];
        }
    }
    for (std::size_t i = 0; i < dim; ++i) offsets[i + 1] += offsets[i];
    return SparseMatrix(dim, std::move(offsets), std::move(cols), std::move(values));
}

SparseMatrix SparseMatrix::from_dense(const DenseMatrix& a, double drop_tol) {
    if (a.rows() != a.cols()) throw std::invalid_argument("from_dense: matrix not square");
    std::vector<Triplet> t;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            if (std::abs(a(i, j)) > drop_tol) t.push_back({i, j, a(i, j)});
    return from_triplets(a.rows(), std::move(t));
}

SparseMatrix SparseMatrix::identity(std::size_t n) {
    return diagonal(Vector(n, 1.0));
}

SparseMatrix SparseMatrix::diagonal(const Vector& d) {
    std::vector<Triplet> t;
    t.reserve(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) t.push_back({i, i, d[i]});
    return from_triplets(d.size(), std::move(t));
}

double SparseMatrix::coeff(std::size_t i, std::size_t j) const {
    auto cols = row_cols(i);
    auto it = std::lower_bound(cols.begin(), cols.end(), j);
    if (it == cols.end() || *it != j) return 0.0;
    return values_[row_offsets_[i] + static_cast<std::size_t>(it - cols.begin())];
}

DenseMatrix SparseMatrix::to_dense() const {
    DenseMatrix a(dim_, dim_);
    for (std::size_t i = 0; i < dim_; ++i) {
        auto cols = row_cols(i);
        auto vals = row_values(i);
        for (std::size_t k = 0; k < cols.size(); ++k) a(i, cols[k]) = vals[k];
    }
    return a;
}

Vector matvec(const SparseMatrix& a, const Vector& v) {
    if (v.size() != a.dim()) throw std::invalid_argument("sparse matvec: dimension mismatch");
    Vector r(a.dim(), 0.0);
    for (std::size_t i = 0; i < a.dim(); ++i) {
        auto cols = a.row_cols(i);
        auto vals = a.row_values(i);
        double s = 0.0;
        for (std::size_t k = 0; k < cols.size(); ++k) s += vals[k] * v[cols[k]];
        r[i] = s;
    }
    return r;
}

Vector matvec_transpose(const SparseMatrix& a, const Vector& v) {
    if (v.size() != a.dim()) throw std::invalid_argument("sparse matvec_transpose: dimension mismatch");
    Vector r(a.dim(), 0.0);
    for (std::size_t i = 0; i < a.dim(); ++i) {
        auto cols = a.row_cols(i);
        auto vals = a.row_values(i);
        for (std::size_t k = 0; k < cols.size(); ++k) r[cols[k]] += vals[k] * v[i];
    }
    return r;
}

double max_asymmetry(const SparseMatrix& a) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) {
        auto cols = a.row_cols(i);
        auto vals = a.row_values(i);
        for (std::size_t k = 0; k < cols.size(); ++k)
            if (cols[k] > i) m = std::max(m, std::abs(vals[k] - a.coeff(cols[k], i)));
    }
    return m;
}

double frobenius_norm(const SparseMatrix& a) {
    double s = 0.0;
    for (double v : a.values()) s += v * v;
    return std::sqrt(s);
}

SparseMatrix add_scaled_diagonal(const SparseMatrix& a, double factor) {
    std::vector<SparseMatrix::Triplet> t;
    t.reserve(a.nnz());
    for (std::size_t i = 0; i < a.dim(); ++i) {
        auto cols = a.row_cols(i);
        auto vals = a.row_values(i);
        for (std::size_t k = 0; k < cols.size(); ++k) {
            double v = vals[k];
            if (cols[k] == i) v += factor * v;
            t.push_back({i, cols[k], v});
        }
    }
    return SparseMatrix::from_triplets(a.dim(), std::move(t));
}

double weighted_inner(const SparseMatrix& m, const Vector& x, const Vector& y) {
    return dot(x, matvec(m, y));
}

}  // namespace bayescg
