#include "bayescg/triangular.hpp"

#include <stdexcept>
#include <string>

namespace bayescg {

TriangularFactor make_triangular_factor(SparseMatrix lower, bool unit_diagonal) {
    const std::size_t d = lower.dim();
    for (std::size_t i = 0; i < d; ++i) {
        auto cols = lower.row_cols(i);
        auto vals = lower.row_values(i);
        bool diag_seen = false;
        for (std::size_t k = 0; k < cols.size(); ++k) {
            if (cols[k] > i)
                throw std::invalid_argument("TriangularFactor: entry above diagonal in row " +
                                            std::to_string(i));
            if (cols[k] == i) {
                diag_seen = true;
                if (!unit_diagonal && vals[k] <= 0.0)
                    throw std::invalid_argument("TriangularFactor: non-positive diagonal in row " +
                                                std::to_string(i));
            }
        }
        if (!unit_diagonal && !diag_seen)
            throw std::invalid_argument("TriangularFactor: missing diagonal in row " +
                                        std::to_string(i));
    }
    return {std::move(lower), unit_diagonal};
}

Vector solve_lower(const TriangularFactor& f, const Vector& b) {
    const SparseMatrix& l = f.lower;
    if (b.size() != l.dim()) throw std::invalid_argument("solve_lower: dimension mismatch");
    Vector x(b);
    for (std::size_t i = 0; i < l.dim(); ++i) {
        auto cols = l.row_cols(i);
        auto vals = l.row_values(i);
        double s = x[i];
        double diag = 1.0;
        for (std::size_t k = 0; k < cols.size(); ++k) {
            if (cols[k] < i)
                s -= vals[k] * x[cols[k]];
            else if (cols[k] == i)
                diag = vals[k];
        }
        x[i] = f.unit_diagonal ? s : s / diag;
    }
    return x;
}

Vector solve_lower_transpose(const TriangularFactor& f, const Vector& b) {
    const SparseMatrix& l = f.lower;
    if (b.size() != l.dim()) throw std::invalid_argument("solve_lower_transpose: dimension mismatch");
    // Column-oriented back substitution: row i of L is column i of L'.
    Vector x(b);
    for (std::size_t ii = l.dim(); ii-- > 0;) {
        auto cols = l.row_cols(ii);
        auto vals = l.row_values(ii);
        if (!f.unit_diagonal) {
            double diag = 1.0;
            for (std::size_t k = 0; k < cols.size(); ++k)
                if (cols[k] == ii) diag = vals[k];
            x[ii] /= diag;
        }
        const double xi = x[ii];
        for (std::size_t k = 0; k < cols.size(); ++k)
            if (cols[k] < ii) x[cols[k]] -= vals[k] * xi;
    }
    return x;
}

Vector apply_lower(const TriangularFactor& f, const Vector& v) {
    Vector r = matvec(f.lower, v);
    if (f.unit_diagonal) axpy(1.0, v, r);
    return r;
}

Vector apply_lower_transpose(const TriangularFactor& f, const Vector& v) {
    Vector r = matvec_transpose(f.lower, v);
    if (f.unit_diagonal) axpy(1.0, v, r);
    return r;
}

}  // namespace bayescg
