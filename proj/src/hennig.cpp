#include "bayescg/hennig.hpp"

#include <algorithm>
#include <memory>
#include <stdexcept>

#include "bayescg/eig.hpp"
#include "bayescg/factor.hpp"

namespace bayescg {

MatrixPosterior matrix_posterior(const DenseMatrix& h0, const DenseMatrix& w,
                                 const DenseMatrix& s, const DenseMatrix& y) {
    const std::size_t d = h0.rows();
    if (h0.cols() != d || w.rows() != d || w.cols() != d)
        throw std::invalid_argument("matrix_posterior: prior blocks must be d x d");
    if (s.rows() != d || y.rows() != d || s.cols() != y.cols() || s.cols() == 0)
        throw std::invalid_argument("matrix_posterior: direction/data shape mismatch");

    auto ytw = matmul_transpose_a(y, w);     // m x d
    auto gram = symmetrized(matmul(ytw, y)); // Y'WY
    auto gram_eig = symmetric_eig(gram);
    if (!(gram_eig.eigenvalues.back() > 1e-12 * std::max(1.0, gram_eig.eigenvalues.front())))
        throw std::runtime_error(
            "matrix_posterior: Y'WY is singular; directions are not conjugate enough");
    std::unique_ptr<CholeskyFactor> chol;
    try {
        chol = std::make_unique<CholeskyFactor>(gram);
    } catch (const std::runtime_error&) {
        throw std::runtime_error(
            "matrix_posterior: Y'WY is singular; directions are not conjugate enough");
    }

    auto r = subtract(s, matmul(h0, y));     // S - H0 Y
    auto ginv_ytw = chol->solve_matrix(ytw); // (Y'WY)^-1 Y'W, m x d
    auto wy = matmul(w, y);                  // d x m

    auto h = add(h0, matmul(r, ginv_ytw));
    h = add(h, matmul(wy, chol->solve_matrix(r.transposed())));
    auto inner = matmul_transpose_a(y, r);   // Y'(S - H0 Y)
    h = subtract(h, matmul(wy, chol->solve_matrix(matmul(inner, ginv_ytw))));

    MatrixPosterior mp;
    mp.h = std::move(h);
    mp.w = subtract(w, matmul(wy, ginv_ytw));
    return mp;
}

ProjectedPosterior project_to_solution(const MatrixPosterior& mp, const Vector& b) {
    if (b.size() != mp.h.rows())
        throw std::invalid_argument("project_to_solution: size mismatch");
    ProjectedPosterior out;
    out.mean = matvec(mp.h, b);
    Vector wb = matvec(mp.w, b);
    const double bwb = dot(b, wb);
    auto cov = scaled(mp.w, bwb);
    cov = add(cov, outer(wb, wb));
    out.covariance = symmetrized(scaled(cov, 0.5));
    return out;
}

Prior equivalent_solution_prior(const Vector& b, bool half_convention) {
    const double bb = dot(b, b);
    if (!(bb > 0.0))
        throw std::invalid_argument("equivalent_solution_prior: rhs must be nonzero");
    const std::size_t d = b.size();
    const double c = half_convention ? 0.5 : 1.0;
    DenseMatrix sigma0(d, d);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j) sigma0(i, j) = c * b[i] * b[j];
        sigma0(i, i) += c * bb;
    }
    PriorSpec spec;
    spec.family = PriorFamily::Dense;
    spec.x0 = b;
    spec.sigma0 = std::move(sigma0);
    return build_prior(spec, SparseMatrix::identity(d));
}

}  // namespace bayescg
