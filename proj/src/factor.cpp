#include "bayescg/factor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace bayescg {

CholeskyFactor::CholeskyFactor(const DenseMatrix& spd) {
    if (spd.rows() != spd.cols()) throw std::invalid_argument("CholeskyFactor: matrix not square");
    const std::size_t n = spd.rows();
    lower_ = DenseMatrix(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double s = spd(j, j);
        for (std::size_t k = 0; k < j; ++k) s -= lower_(j, k) * lower_(j, k);
        if (s <= 0.0)
            throw std::runtime_error("CholeskyFactor: matrix not positive definite (pivot " +
                                     std::to_string(s) + " at " + std::to_string(j) + ")");
        lower_(j, j) = std::sqrt(s);
        for (std::size_t i = j + 1; i < n; ++i) {
            double t = spd(i, j);
            for (std::size_t k = 0; k < j; ++k) t -= lower_(i, k) * lower_(j, k);
            lower_(i, j) = t / lower_(j, j);
        }
    }
}

Vector CholeskyFactor::solve_lower(const Vector& b) const {
    const std::size_t n = dim();
    if (b.size() != n) throw std::invalid_argument("CholeskyFactor::solve_lower: dimension mismatch");
    Vector y(b);
    for (std::size_t i = 0; i < n; ++i) {
        double s = y[i];
        for (std::size_t k = 0; k < i; ++k) s -= lower_(i, k) * y[k];
        y[i] = s / lower_(i, i);
    }
    return y;
}

Vector CholeskyFactor::solve_upper(const Vector& b) const {
    const std::size_t n = dim();
    if (b.size() != n) throw std::invalid_argument("CholeskyFactor::solve_upper: dimension mismatch");
    Vector x(b);
    for (std::size_t ii = n; ii-- > 0;) {
        double s = x[ii];
        for (std::size_t k = ii + 1; k < n; ++k) s -= lower_(k, ii) * x[k];
        x[ii] = s / lower_(ii, ii);
    }
    return x;
}

Vector CholeskyFactor::solve(const Vector& b) const { return solve_upper(solve_lower(b)); }

DenseMatrix CholeskyFactor::solve_matrix(const DenseMatrix& b) const {
    if (b.rows() != dim()) throw std::invalid_argument("CholeskyFactor::solve_matrix: dimension mismatch");
    DenseMatrix x(b.rows(), b.cols());
    for (std::size_t j = 0; j < b.cols(); ++j) x.set_col(j, solve(b.col(j)));
    return x;
}

DenseMatrix CholeskyFactor::inverse() const { return solve_matrix(DenseMatrix::identity(dim())); }

double CholeskyFactor::log_det() const {
    double s = 0.0;
    for (std::size_t i = 0; i < dim(); ++i) s += std::log(lower_(i, i));
    return 2.0 * s;
}

LuFactor::LuFactor(const DenseMatrix& a) : lu_(a) {
    if (a.rows() != a.cols()) throw std::invalid_argument("LuFactor: matrix not square");
    const std::size_t n = a.rows();
    perm_.resize(n);
    for (std::size_t i = 0; i < n; ++i) perm_[i] = i;
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t p = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(lu_(i, k)) > std::abs(lu_(p, k))) p = i;
        if (lu_(p, k) == 0.0)
            throw std::runtime_error("LuFactor: matrix is singular (column " + std::to_string(k) + ")");
        if (p != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(lu_(p, j), lu_(k, j));
            std::swap(perm_[p], perm_[k]);
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            lu_(i, k) /= lu_(k, k);
            const double m = lu_(i, k);
            if (m == 0.0) continue;
            for (std::size_t j = k + 1; j < n; ++j) lu_(i, j) -= m * lu_(k, j);
        }
    }
}

Vector LuFactor::solve(const Vector& b) const {
    const std::size_t n = dim();
    if (b.size() != n) throw std::invalid_argument("LuFactor::solve: dimension mismatch");
    Vector y(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[perm_[i]];
        for (std::size_t k = 0; k < i; ++k) s -= lu_(i, k) * y[k];
        y[i] = s;
    }
    for (std::size_t ii = n; ii-- > 0;) {
        double s = y[ii];
        for (std::size_t k = ii + 1; k < n; ++k) s -= lu_(ii, k) * y[k];
        y[ii] = s / lu_(ii, ii);
    }
    return y;
}

Vector LuFactor::solve_transpose(const Vector& b) const {
    // PA = LU so A' = U' L' P; solve U' z = b, L' w = z, then x = P' w.
    const std::size_t n = dim();
    if (b.size() != n) throw std::invalid_argument("LuFactor::solve_transpose: dimension mismatch");
    Vector z(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= lu_(k, i) * z[k];
        z[i] = s / lu_(i, i);
    }
    for (std::size_t ii = n; ii-- > 0;) {
        double s = z[ii];
        for (std::size_t k = ii + 1; k < n; ++k) s -= lu_(k, ii) * z[k];
        z[ii] = s;
    }
    Vector x(n);
    for (std::size_t i = 0; i < n; ++i) x[perm_[i]] = z[i];
    return x;
}

DenseMatrix LuFactor::inverse() const {
    const std::size_t n = dim();
    DenseMatrix inv(n, n);
    Vector e(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        e[j] = 1.0;
        inv.set_col(j, solve(e));
        e[j] = 0.0;
    }
    return inv;
}

QrResult householder_qr(const DenseMatrix& a) {
    const std::size_t d = a.rows(), k = a.cols();
    if (k > d) throw std::invalid_argument("householder_qr: more columns than rows");
    DenseMatrix r(a);
    DenseMatrix q = DenseMatrix::identity(d);
    Vector v(d);
    for (std::size_t j = 0; j < k; ++j) {
        double norm = 0.0;
        for (std::size_t i = j; i < d; ++i) norm += r(i, j) * r(i, j);
        norm = std::sqrt(norm);
        if (norm == 0.0) continue;  // column already zeroed; rank handling is the caller's concern
        const double alpha = r(j, j) >= 0.0 ? -norm : norm;
        double vnorm2 = 0.0;
        for (std::size_t i = j; i < d; ++i) {
            v[i] = r(i, j) - (i == j ? alpha : 0.0);
            vnorm2 += v[i] * v[i];
        }
        if (vnorm2 == 0.0) continue;
        // Apply H = I - 2 v v' / (v'v) to R (left) and accumulate into Q (right).
        for (std::size_t col = j; col < k; ++col) {
            double s = 0.0;
            for (std::size_t i = j; i < d; ++i) s += v[i] * r(i, col);
            const double f = 2.0 * s / vnorm2;
            for (std::size_t i = j; i < d; ++i) r(i, col) -= f * v[i];
        }
        for (std::size_t row = 0; row < d; ++row) {
            double s = 0.0;
            for (std::size_t i = j; i < d; ++i) s += q(row, i) * v[i];
            const double f = 2.0 * s / vnorm2;
            for (std::size_t i = j; i < d; ++i) q(row, i) -= f * v[i];
        }
    }
    // Clean below-diagonal residue of R.
    for (std::size_t j = 0; j < k; ++j)
        for (std::size_t i = j + 1; i < d; ++i) r(i, j) = 0.0;
    return {std::move(q), std::move(r)};
}

DenseMatrix qr_null_space(const DenseMatrix& k_basis) {
    const std::size_t d = k_basis.rows(), k = k_basis.cols();
    QrResult qr = householder_qr(k_basis);
    double max_col_norm = 0.0;
    for (std::size_t j = 0; j < k; ++j) max_col_norm = std::max(max_col_norm, norm2(k_basis.col(j)));
    const double tol = 1e-12 * std::max(1.0, max_col_norm);
    for (std::size_t j = 0; j < k; ++j)
        if (std::abs(qr.r(j, j)) < tol)
            throw std::runtime_error("qr_null_space: input is rank deficient (R diagonal " +
                                     std::to_string(qr.r(j, j)) + " at column " + std::to_string(j) + ")");
    DenseMatrix q2(d, d - k);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d - k; ++j) q2(i, j) = qr.q(i, k + j);
    return q2;
}

IncompleteCholeskyBreakdown::IncompleteCholeskyBreakdown(std::size_t row_index, double pivot)
    : std::runtime_error("incomplete Cholesky breakdown: non-positive pivot " +
                         std::to_string(pivot) + " in row " + std::to_string(row_index)),
      row(row_index), pivot_value(pivot) {}

TriangularFactor incomplete_cholesky_zero_fill(const SparseMatrix& a) {
    const std::size_t d = a.dim();
    // Factor values stored per row over the lower-triangular pattern of a.
    std::vector<std::vector<std::size_t>> cols(d);
    std::vector<std::vector<double>> vals(d);
    for (std::size_t i = 0; i < d; ++i) {
        auto rc = a.row_cols(i);
        auto rv = a.row_values(i);
        bool has_diag = false;
        for (std::size_t k = 0; k < rc.size(); ++k) {
            if (rc[k] > i) continue;
            if (rc[k] == i) has_diag = true;
            cols[i].push_back(rc[k]);
            vals[i].push_back(rv[k]);
        }
        if (!has_diag) throw IncompleteCholeskyBreakdown(i, 0.0);
    }
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t ki = 0; ki < cols[i].size(); ++ki) {
            const std::size_t j = cols[i][ki];
            // Sum over the intersection of the strictly-lower parts of rows i and j.
            double s = vals[i][ki];
            std::size_t pi = 0, pj = 0;
            while (pi < ki && pj + 1 < cols[j].size()) {
                const std::size_t ci = cols[i][pi], cj = cols[j][pj];
                if (ci == cj) {
                    if (ci < j) s -= vals[i][pi] * vals[j][pj];
                    ++pi;
                    ++pj;
                } else if (ci < cj) {
                    ++pi;
                } else {
                    ++pj;
                }
            }
            if (j < i) {
                vals[i][ki] = s / vals[j].back();  // diagonal is last in each row
            } else {
                // Diagonal entry: subtract squares of the strictly-lower part of row i.
                double t = vals[i][ki];
                for (std::size_t k = 0; k < ki; ++k) t -= vals[i][k] * vals[i][k];
                if (t <= 0.0) throw IncompleteCholeskyBreakdown(i, t);
                vals[i][ki] = std::sqrt(t);
            }
        }
    }
    std::vector<SparseMatrix::Triplet> t;
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t k = 0; k < cols[i].size(); ++k) t.push_back({i, cols[i][k], vals[i][k]});
    return make_triangular_factor(SparseMatrix::from_triplets(d, std::move(t)), false);
}

TriangularFactor incomplete_cholesky_with_shift(const SparseMatrix& a, double shift_scale) {
    try {
        return incomplete_cholesky_zero_fill(a);
    } catch (const IncompleteCholeskyBreakdown&) {
    }
    // Zero-fill factorization can break down on matrices that are not
    // diagonally dominant; compensate by scaling up the diagonal until the
    // pivots survive. Doubling from shift_scale reaches dominance quickly, and
    // the factor stays a usable (if weaker) preconditioner.
    double shift = shift_scale;
    for (int attempt = 0; attempt < 24; ++attempt, shift *= 2.0) {
        try {
            return incomplete_cholesky_zero_fill(add_scaled_diagonal(a, shift));
        } catch (const IncompleteCholeskyBreakdown&) {
        }
    }
    return incomplete_cholesky_zero_fill(add_scaled_diagonal(a, shift));
}

}  // namespace bayescg
