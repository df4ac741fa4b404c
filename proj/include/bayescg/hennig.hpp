#pragma once

#include "bayescg/dense.hpp"
#include "bayescg/prior.hpp"
#include "bayescg/vec.hpp"

namespace bayescg {

// Posterior of the matrix-inference method: belief over H = A^-1 after
// observing Y = AS, with mean H_m and covariance W_m (x) W_m in the symmetric
// Kronecker sense. Only the solution-space projection is ever needed, so the
// d^2-sized covariance is never formed.
struct MatrixPosterior {
    DenseMatrix h;  // H_m
    DenseMatrix w;  // W_m
};

// Conditions the prior N(vec(H0), W (x) W) on AS = Y. The m x m system
// (Y' W Y) is solved by dense Cholesky; a singular Gram matrix (directions not
// conjugate enough) throws std::runtime_error.
MatrixPosterior matrix_posterior(const DenseMatrix& h0, const DenseMatrix& w,
                                 const DenseMatrix& s, const DenseMatrix& y);

struct ProjectedPosterior {
    Vector mean;             // H_m b
    DenseMatrix covariance;  // (b'W_m b W_m + W_m b b' W_m) / 2, symmetrised
};

// Pushes the matrix belief through x = H b.
ProjectedPosterior project_to_solution(const MatrixPosterior& mp, const Vector& b);

// The solution-space prior equivalent to H0 = W = I: x0 = b and
// Sigma0 = (b'b I + b b'), optionally carrying the one-half factor that the
// projection formula applies (both conventions are legitimate readings; the
// comparison reports both).
Prior equivalent_solution_prior(const Vector& b, bool half_convention);

}  // namespace bayescg
