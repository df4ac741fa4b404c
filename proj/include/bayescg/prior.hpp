#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>

#include "bayescg/dense.hpp"
#include "bayescg/sparse.hpp"
#include "bayescg/vec.hpp"
#include "json.hpp"

namespace bayescg {

// Factorizations and spectral estimates materialize the matrix up to this
// dimension; families that need them refuse larger problems.
inline constexpr std::size_t kDenseLimit = 512;

// Symmetric positive (semi)definite covariance given by its action. All
// families built here also carry the inverse action and, up to kDenseLimit,
// the materialized matrix. Instances are immutable and safe to share across
// threads.
class CovarianceOperator {
  public:
    CovarianceOperator(std::size_t dim, LinearOperatorFn apply, LinearOperatorFn apply_inverse,
                       std::optional<DenseMatrix> dense);

    std::size_t dim() const { return dim_; }
    Vector apply(const Vector& v) const;
    bool has_inverse() const { return static_cast<bool>(apply_inverse_); }
    Vector apply_inverse(const Vector& v) const;
    bool has_dense() const { return dense_.has_value(); }
    const DenseMatrix& dense() const;
    double trace() const;

  private:
    std::size_t dim_;
    LinearOperatorFn apply_;
    LinearOperatorFn apply_inverse_;
    std::optional<DenseMatrix> dense_;
    double trace_ = 0.0;
};

enum class PriorFamily {
    Identity,        // Sigma0 = I
    Dense,           // user-supplied SPD matrix
    NaturalInverse,  // Sigma0 = A^-1 (dense solve; the posterior mean walks the CG iterates)
    NaturalAtA,      // Sigma0 = (A'A)^-1 (two dense solves; converges in one step)
    Preconditioner,  // Sigma0 = (P'P)^-1 with P = LL' from incomplete Cholesky
    Krylov,          // low-rank-plus-complement prior built on a Krylov basis of b
};

enum class KrylovOperator { A, PreconditionedA };

struct KrylovParams {
    std::size_t subspace_dim = 20;        // n; the basis has up to n+1 columns
    std::optional<double> xi;             // contraction factor in (0,1); estimated when unset
    std::optional<double> sigma_scale;    // overall scale; estimated when unset
    double complement_weight = 0.01;      // weight of the orthogonal complement
    KrylovOperator op = KrylovOperator::A;
};

struct PriorSpec {
    PriorFamily family = PriorFamily::Identity;
    Vector x0{};                          // empty means zeros
    std::optional<DenseMatrix> sigma0{};  // Dense family
    KrylovParams krylov{};

    void validate() const;
    nlohmann::json to_json() const;
    static PriorSpec from_json(const nlohmann::json& j);
};

std::string family_name(PriorFamily f);
PriorFamily family_from_name(const std::string& name);

// Prior distribution N(x0, Sigma0) over the solution.
struct Prior {
    Vector x0;
    std::shared_ptr<const CovarianceOperator> covariance;
};

// Builds the covariance for the given system matrix. The Krylov family needs
// the right-hand side to seed its basis; passing it is an error-free no-op for
// the other families.
std::shared_ptr<const CovarianceOperator> build_covariance(const PriorSpec& spec,
                                                           const SparseMatrix& a,
                                                           const Vector* b = nullptr);

Prior build_prior(const PriorSpec& spec, const SparseMatrix& a, const Vector* b = nullptr);

struct KrylovBasis {
    DenseMatrix columns;  // orthonormal, up to n+1 of them
    bool truncated = false;
};

// Orthonormal basis whose leading j+1 columns span {b, Mb, ..., M^j b}.
// Truncates (with the flag set) when a new direction falls below 1e-12 of its
// pre-orthogonalization norm.
KrylovBasis krylov_basis(const LinearOperatorFn& m_apply, const Vector& b, std::size_t n);

// Diagonal weights (2 sigma xi^i)^2, i = 0..n; strictly decreasing for xi in (0,1).
Vector phi_diagonal(std::size_t n, double sigma_scale, double xi);

// Assembles K Phi K' + weight Q2 Q2' with inverse K Phi^-1 K' + (1/weight) Q2 Q2'.
std::shared_ptr<const CovarianceOperator> krylov_prior_covariance(const DenseMatrix& k_basis,
                                                                  const Vector& phi,
                                                                  const DenseMatrix& q2,
                                                                  double complement_weight);

}  // namespace bayescg
