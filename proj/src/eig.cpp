#include "bayescg/eig.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace bayescg {

namespace {
double off_diagonal_norm(const DenseMatrix& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            if (i != j) s += a(i, j) * a(i, j);
    return std::sqrt(s);
}
}  // namespace

SymmetricEig symmetric_eig(const DenseMatrix& m, int max_sweeps) {
    if (m.rows() != m.cols()) throw std::invalid_argument("symmetric_eig: matrix not square");
    const std::size_t n = m.rows();
    DenseMatrix a = symmetrized(m);
    DenseMatrix v = DenseMatrix::identity(n);
    const double scale = std::max(frobenius_norm(a), 1e-300);

    bool converged = n < 2;
    for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
        if (off_diagonal_norm(a) <= 1e-14 * scale) {
            converged = true;
            break;
        }
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(1.0 + theta * theta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }
    if (!converged && off_diagonal_norm(a) > 1e-14 * scale)
        throw std::runtime_error("symmetric_eig: Jacobi sweeps did not converge");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });
    SymmetricEig out;
    out.eigenvalues.resize(n);
    out.eigenvectors = DenseMatrix(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        out.eigenvalues[j] = a(order[j], order[j]);
        for (std::size_t i = 0; i < n; ++i) out.eigenvectors(i, j) = v(i, order[j]);
    }
    return out;
}

PsdSvd svd_psd(const DenseMatrix& s, double asym_tol) {
    if (s.rows() != s.cols()) throw std::invalid_argument("svd_psd: matrix not square");
    const double asym = max_asymmetry(s);
    if (asym > asym_tol * (1.0 + max_abs(s)))
        throw std::invalid_argument("svd_psd: matrix asymmetry " + std::to_string(asym) +
                                    " beyond tolerance");
    SymmetricEig eig = symmetric_eig(s);
    PsdSvd out;
    out.u = std::move(eig.eigenvectors);
    out.raw_eigenvalues = eig.eigenvalues;
    out.singular_values = std::move(eig.eigenvalues);
    for (double& v : out.singular_values) v = std::max(v, 0.0);
    return out;
}

DenseMatrix symmetric_sqrt(const DenseMatrix& m) {
    SymmetricEig eig = symmetric_eig(m);
    const std::size_t n = m.rows();
    for (double v : eig.eigenvalues)
        if (v < -1e-10 * std::max(1.0, std::abs(eig.eigenvalues.front())))
            throw std::runtime_error("symmetric_sqrt: matrix has negative eigenvalue " +
                                     std::to_string(v));
    DenseMatrix scaled_vecs(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        const double r = std::sqrt(std::max(eig.eigenvalues[j], 0.0));
        for (std::size_t i = 0; i < n; ++i) scaled_vecs(i, j) = eig.eigenvectors(i, j) * r;
    }
    return matmul_transpose_b(scaled_vecs, eig.eigenvectors);
}

}  // namespace bayescg
