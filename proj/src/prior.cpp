#include "bayescg/prior.hpp"

#include <cmath>
#include <stdexcept>

#include "bayescg/eig.hpp"
#include "bayescg/factor.hpp"
#include "bayescg/triangular.hpp"
#include "json.hpp"

namespace bayescg {

CovarianceOperator::CovarianceOperator(std::size_t dim, LinearOperatorFn apply,
                                       LinearOperatorFn apply_inverse,
                                       std::optional<DenseMatrix> dense)
    : dim_(dim), apply_(std::move(apply)), apply_inverse_(std::move(apply_inverse)),
      dense_(std::move(dense)) {
    if (!apply_) throw std::invalid_argument("CovarianceOperator: apply function required");
    if (dense_) {
        if (dense_->rows() != dim_ || dense_->cols() != dim_)
            throw std::invalid_argument("CovarianceOperator: dense size mismatch");
        trace_ = bayescg::trace(*dense_);
    } else {
        // Hutchinson-free exact trace via unit vectors; only used matrix-free.
        Vector e(dim_, 0.0);
        for (std::size_t i = 0; i < dim_; ++i) {
            e[i] = 1.0;
            trace_ += apply_(e)[i];
            e[i] = 0.0;
        }
    }
}

Vector CovarianceOperator::apply(const Vector& v) const {
    if (v.size() != dim_) throw std::invalid_argument("CovarianceOperator::apply: dimension mismatch");
    return apply_(v);
}

Vector CovarianceOperator::apply_inverse(const Vector& v) const {
    if (!apply_inverse_)
        throw std::logic_error("CovarianceOperator: inverse action not available");
    if (v.size() != dim_)
        throw std::invalid_argument("CovarianceOperator::apply_inverse: dimension mismatch");
    return apply_inverse_(v);
}

const DenseMatrix& CovarianceOperator::dense() const {
    if (!dense_) throw std::logic_error("CovarianceOperator: dense form not available");
    return *dense_;
}

double CovarianceOperator::trace() const { return trace_; }

void PriorSpec::validate() const {
    if (family == PriorFamily::Dense) {
        if (!sigma0) throw std::invalid_argument("PriorSpec: dense family needs sigma0");
        if (sigma0->rows() != sigma0->cols())
            throw std::invalid_argument("PriorSpec: sigma0 must be square");
        if (max_asymmetry(*sigma0) > 1e-10 * (1.0 + max_abs(*sigma0)))
            throw std::invalid_argument("PriorSpec: sigma0 must be symmetric");
    }
    if (family == PriorFamily::Krylov) {
        if (krylov.subspace_dim == 0)
            throw std::invalid_argument("PriorSpec: krylov subspace_dim must be positive");
        if (krylov.xi && (*krylov.xi <= 0.0 || *krylov.xi >= 1.0))
            throw std::invalid_argument("PriorSpec: krylov xi must lie in (0, 1)");
        if (krylov.sigma_scale && *krylov.sigma_scale <= 0.0)
            throw std::invalid_argument("PriorSpec: krylov sigma must be positive");
        if (krylov.complement_weight <= 0.0)
            throw std::invalid_argument("PriorSpec: krylov complement weight must be positive");
    }
}

std::string family_name(PriorFamily f) {
    switch (f) {
        case PriorFamily::Identity: return "identity";
        case PriorFamily::Dense: return "dense";
        case PriorFamily::NaturalInverse: return "natural_inverse";
        case PriorFamily::NaturalAtA: return "natural_ata";
        case PriorFamily::Preconditioner: return "preconditioner";
        case PriorFamily::Krylov: return "krylov";
    }
    throw std::logic_error("family_name: unreachable");
}

PriorFamily family_from_name(const std::string& name) {
    if (name == "identity") return PriorFamily::Identity;
    if (name == "dense") return PriorFamily::Dense;
    if (name == "natural_inverse") return PriorFamily::NaturalInverse;
    if (name == "natural_ata") return PriorFamily::NaturalAtA;
    if (name == "preconditioner") return PriorFamily::Preconditioner;
    if (name == "krylov") return PriorFamily::Krylov;
    throw std::invalid_argument("unknown prior family '" + name + "'");
}

nlohmann::json PriorSpec::to_json() const {
    nlohmann::json j;
    j["family"] = family_name(family);
    if (!x0.empty()) j["x0"] = x0;
    if (family == PriorFamily::Dense && sigma0) {
        std::vector<Vector> rows;
        for (std::size_t i = 0; i < sigma0->rows(); ++i) rows.push_back(sigma0->row(i));
        j["sigma0"] = rows;
    }
    if (family == PriorFamily::Krylov) {
        nlohmann::json k;
        k["n"] = krylov.subspace_dim;
        if (krylov.xi) k["xi"] = *krylov.xi;
        if (krylov.sigma_scale) k["sigma"] = *krylov.sigma_scale;
        k["phi"] = krylov.complement_weight;
        k["operator"] = krylov.op == KrylovOperator::A ? "a" : "preconditioned";
        j["krylov"] = k;
    }
    return j;
}

PriorSpec PriorSpec::from_json(const nlohmann::json& j) {
    PriorSpec spec;
    spec.family = family_from_name(j.at("family").get<std::string>());
    if (j.contains("x0") && !j["x0"].is_string()) spec.x0 = j["x0"].get<Vector>();
    if (j.contains("sigma0")) {
        const auto rows = j["sigma0"].get<std::vector<Vector>>();
        spec.sigma0 = DenseMatrix::from_rows(rows);
    }
    if (j.contains("krylov")) {
        const auto& k = j["krylov"];
        if (k.contains("n")) spec.krylov.subspace_dim = k["n"].get<std::size_t>();
        if (k.contains("xi")) spec.krylov.xi = k["xi"].get<double>();
        if (k.contains("sigma")) spec.krylov.sigma_scale = k["sigma"].get<double>();
        if (k.contains("phi")) spec.krylov.complement_weight = k["phi"].get<double>();
        if (k.contains("operator"))
            spec.krylov.op = k["operator"].get<std::string>() == "preconditioned"
                                 ? KrylovOperator::PreconditionedA
                                 : KrylovOperator::A;
    }
    spec.validate();
    return spec;
}

namespace {

void require_dense_scale(const SparseMatrix& a, const char* family) {
    if (a.dim() > kDenseLimit)
        throw std::invalid_argument(std::string(family) +
                                    " prior needs dense factorizations; dimension " +
                                    std::to_string(a.dim()) + " exceeds the dense limit " +
                                    std::to_string(kDenseLimit));
}

std::shared_ptr<const CovarianceOperator> identity_covariance(std::size_t d) {
    auto pass = [](const Vector& v) { return v; };
    return std::make_shared<CovarianceOperator>(d, pass, pass, DenseMatrix::identity(d));
}

std::shared_ptr<const CovarianceOperator> dense_covariance(const DenseMatrix& sigma0) {
    auto chol = std::make_shared<CholeskyFactor>(sigma0);  // also proves positive definiteness
    auto apply = [m = sigma0](const Vector& v) { return matvec(m, v); };
    auto inv = [chol](const Vector& v) { return chol->solve(v); };
    return std::make_shared<CovarianceOperator>(sigma0.rows(), apply, inv, sigma0);
}

std::shared_ptr<const CovarianceOperator> natural_inverse_covariance(const SparseMatrix& a) {
    require_dense_scale(a, "natural_inverse");
    auto chol = std::make_shared<CholeskyFactor>(a.to_dense());
    auto apply = [chol](const Vector& v) { return chol->solve(v); };
    auto inv = [as = a](const Vector& v) { return matvec(as, v); };
    return std::make_shared<CovarianceOperator>(a.dim(), apply, inv, chol->inverse());
}

std::shared_ptr<const CovarianceOperator> natural_ata_covariance(const SparseMatrix& a) {
    require_dense_scale(a, "natural_ata");
    auto lu = std::make_shared<LuFactor>(a.to_dense());
    auto apply = [lu](const Vector& v) { return lu->solve(lu->solve_transpose(v)); };
    auto inv = [as = a](const Vector& v) { return matvec_transpose(as, matvec(as, v)); };
    DenseMatrix dense(a.dim(), a.dim());
    Vector e(a.dim(), 0.0);
    for (std::size_t j = 0; j < a.dim(); ++j) {
        e[j] = 1.0;
        dense.set_col(j, lu->solve(lu->solve_transpose(e)));
        e[j] = 0.0;
    }
    return std::make_shared<CovarianceOperator>(a.dim(), apply, inv, symmetrized(dense));
}

std::shared_ptr<const CovarianceOperator> preconditioner_covariance(const SparseMatrix& a) {
    auto factor = std::make_shared<TriangularFactor>(incomplete_cholesky_with_shift(a));
    // P = LL' is symmetric; Sigma0 = (P'P)^-1 applied as two P^-1 sweeps.
    auto half = [factor](const Vector& v) {
        return solve_lower_transpose(*factor, solve_lower(*factor, v));
    };
    auto apply = [half](const Vector& v) { return half(half(v)); };
    auto half_inv = [factor](const Vector& v) {
        return apply_lower(*factor, apply_lower_transpose(*factor, v));
    };
    auto inv = [half_inv](const Vector& v) { return half_inv(half_inv(v)); };
    std::optional<DenseMatrix> dense;
    if (a.dim() <= kDenseLimit) {
        DenseMatrix m(a.dim(), a.dim());
        Vector e(a.dim(), 0.0);
        for (std::size_t j = 0; j < a.dim(); ++j) {
            e[j] = 1.0;
            m.set_col(j, apply(e));
            e[j] = 0.0;
        }
        dense = symmetrized(m);
    }
    return std::make_shared<CovarianceOperator>(a.dim(), apply, inv, std::move(dense));
}

std::shared_ptr<const CovarianceOperator> krylov_family_covariance(const PriorSpec& spec,
                                                                   const SparseMatrix& a,
                                                                   const Vector* b) {
    if (b == nullptr)
        throw std::invalid_argument("krylov prior needs the right-hand side to seed its basis");
    require_dense_scale(a, "krylov");
    const KrylovParams& p = spec.krylov;

    LinearOperatorFn m_apply;
    if (p.op == KrylovOperator::A) {
        m_apply = [as = a](const Vector& v) { return matvec(as, v); };
    } else {
        auto factor = std::make_shared<TriangularFactor>(incomplete_cholesky_with_shift(a));
        m_apply = [factor, as = a](const Vector& v) {
            return solve_lower_transpose(*factor, solve_lower(*factor, matvec(as, v)));
        };
    }

    double xi;
    if (p.xi) {
        xi = *p.xi;
    } else {
        auto eig = symmetric_eig(a.to_dense());
        const double lo = eig.eigenvalues.back(), hi = eig.eigenvalues.front();
        if (lo <= 0.0) throw std::runtime_error("krylov prior: matrix is not positive definite");
        const double kappa = hi / lo;
        xi = (kappa - 1.0) / (kappa + 1.0);
        if (xi <= 0.0) xi = 0.5;  // kappa = 1: any contraction factor works
    }
    const double sigma = p.sigma_scale ? *p.sigma_scale : norm2(*b) / frobenius_norm(a);

    KrylovBasis basis = krylov_basis(m_apply, *b, p.subspace_dim);
    const std::size_t k = basis.columns.cols();
    Vector phi = phi_diagonal(k - 1, sigma, xi);
    DenseMatrix q2 = qr_null_space(basis.columns);
    return krylov_prior_covariance(basis.columns, phi, q2, p.complement_weight);
}

}  // namespace

KrylovBasis krylov_basis(const LinearOperatorFn& m_apply, const Vector& b, std::size_t n) {
    const std::size_t d = b.size();
    const double b_norm = norm2(b);
    if (b_norm == 0.0) throw std::invalid_argument("krylov_basis: zero seed vector");
    std::vector<Vector> cols;
    cols.push_back(scaled(b, 1.0 / b_norm));
    bool truncated = false;
    for (std::size_t j = 1; j <= n && cols.size() < d; ++j) {
        Vector w = m_apply(cols.back());
        const double before = norm2(w);
        // two-pass modified Gram-Schmidt
        for (int pass = 0; pass < 2; ++pass)
            for (const Vector& q : cols) axpy(-dot(q, w), q, w);
        const double after = norm2(w);
        if (after <= 1e-12 * before || before == 0.0) {
            truncated = true;
            break;
        }
        cols.push_back(scaled(w, 1.0 / after));
    }
    KrylovBasis out;
    out.columns = DenseMatrix(d, cols.size());
    for (std::size_t j = 0; j < cols.size(); ++j) out.columns.set_col(j, cols[j]);
    out.truncated = truncated;
    return out;
}

Vector phi_diagonal(std::size_t n, double sigma_scale, double xi) {
    if (sigma_scale <= 0.0 || xi <= 0.0 || xi >= 1.0)
        throw std::invalid_argument("phi_diagonal: need sigma > 0 and xi in (0, 1)");
    Vector phi(n + 1);
    double factor = 2.0 * sigma_scale;
    for (std::size_t i = 0; i <= n; ++i) {
        phi[i] = factor * factor;
        factor *= xi;
    }
    return phi;
}

std::shared_ptr<const CovarianceOperator> krylov_prior_covariance(const DenseMatrix& k_basis,
                                                                  const Vector& phi,
                                                                  const DenseMatrix& q2,
                                                                  double complement_weight) {
    const std::size_t d = k_basis.rows();
    if (phi.size() != k_basis.cols())
        throw std::invalid_argument("krylov_prior_covariance: phi length mismatch");
    if (q2.rows() != d || q2.cols() != d - k_basis.cols())
        throw std::invalid_argument("krylov_prior_covariance: complement basis size mismatch");
    for (double w : phi)
        if (w <= 0.0) throw std::invalid_argument("krylov_prior_covariance: non-positive weight");
    if (complement_weight <= 0.0)
        throw std::invalid_argument("krylov_prior_covariance: non-positive complement weight");

    auto weighted_apply = [k_basis, phi, q2, complement_weight](const Vector& v) {
        Vector kv = matvec_transpose(k_basis, v);
        for (std::size_t i = 0; i < kv.size(); ++i) kv[i] *= phi[i];
        Vector out = matvec(k_basis, kv);
        Vector qv = matvec_transpose(q2, v);
        axpy(complement_weight, matvec(q2, qv), out);
        return out;
    };
    auto inverse_apply = [k_basis, phi, q2, complement_weight](const Vector& v) {
        Vector kv = matvec_transpose(k_basis, v);
        for (std::size_t i = 0; i < kv.size(); ++i) kv[i] /= phi[i];
        Vector out = matvec(k_basis, kv);
        Vector qv = matvec_transpose(q2, v);
        axpy(1.0 / complement_weight, matvec(q2, qv), out);
        return out;
    };
    std::optional<DenseMatrix> dense;
    if (d <= kDenseLimit) {
        DenseMatrix m(d, d);
        Vector e(d, 0.0);
        for (std::size_t j = 0; j < d; ++j) {
            e[j] = 1.0;
            m.set_col(j, weighted_apply(e));
            e[j] = 0.0;
        }
        dense = symmetrized(m);
    }
    return std::make_shared<CovarianceOperator>(d, weighted_apply, inverse_apply, std::move(dense));
}

std::shared_ptr<const CovarianceOperator> build_covariance(const PriorSpec& spec,
                                                           const SparseMatrix& a, const Vector* b) {
    spec.validate();
    if (!spec.x0.empty() && spec.x0.size() != a.dim())
        throw std::invalid_argument("build_covariance: x0 dimension mismatch");
    switch (spec.family) {
        case PriorFamily::Identity: return identity_covariance(a.dim());
        case PriorFamily::Dense:
            if (spec.sigma0->rows() != a.dim())
                throw std::invalid_argument("build_covariance: sigma0 dimension mismatch");
            return dense_covariance(*spec.sigma0);
        case PriorFamily::NaturalInverse: return natural_inverse_covariance(a);
        case PriorFamily::NaturalAtA: return natural_ata_covariance(a);
        case PriorFamily::Preconditioner: return preconditioner_covariance(a);
        case PriorFamily::Krylov: return krylov_family_covariance(spec, a, b);
    }
    throw std::logic_error("build_covariance: unreachable");
}

Prior build_prior(const PriorSpec& spec, const SparseMatrix& a, const Vector* b) {
    Prior prior;
    prior.covariance = build_covariance(spec, a, b);
    prior.x0 = spec.x0.empty() ? zeros(a.dim()) : spec.x0;
    return prior;
}

}  // namespace bayescg
