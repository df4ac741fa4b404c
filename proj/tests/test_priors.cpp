#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "bayescg/eig.hpp"
#include "bayescg/factor.hpp"
#include "bayescg/prior.hpp"
#include "bayescg/rng.hpp"
#include "bayescg/testgen.hpp"

using namespace bayescg;

namespace {

SparseMatrix test_matrix(std::size_t d, std::uint64_t seed, double density = 0.35) {
    ProblemConfig cfg;
    cfg.dim = d;
    cfg.density = density;
    cfg.seed = seed;
    return random_spd_sparse(cfg).a;
}

Vector random_vector(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    Vector v(n);
    for (double& x : v) x = rng.next_gaussian();
    return v;
}

// max |Sigma v - dense Sigma v| over a few probes, relative
void check_apply_matches_dense(const CovarianceOperator& cov, double tol = 1e-9) {
    REQUIRE(cov.has_dense());
    for (std::uint64_t s = 1; s <= 3; ++s) {
        auto v = random_vector(cov.dim(), 1000 + s);
        auto via_apply = cov.apply(v);
        auto via_dense = matvec(cov.dense(), v);
        for (std::size_t i = 0; i < cov.dim(); ++i)
            CHECK(via_apply[i] == doctest::Approx(via_dense[i]).epsilon(tol));
    }
}

void check_inverse_roundtrip(const CovarianceOperator& cov, double tol = 1e-8) {
    for (std::uint64_t s = 1; s <= 3; ++s) {
        auto v = random_vector(cov.dim(), 2000 + s);
        auto w = cov.apply_inverse(cov.apply(v));
        for (std::size_t i = 0; i < cov.dim(); ++i)
            CHECK(w[i] == doctest::Approx(v[i]).epsilon(tol));
    }
}

void check_positive_definite_dense(const CovarianceOperator& cov) {
    auto eig = symmetric_eig(cov.dense());
    CHECK(eig.eigenvalues.back() > 0.0);
}

}  // namespace

TEST_CASE("identity prior") {
    auto a = test_matrix(12, 1);
    auto cov = build_covariance({.family = PriorFamily::Identity}, a);
    auto v = random_vector(12, 5);
    CHECK(cov->apply(v) == v);
    CHECK(cov->apply_inverse(v) == v);
    CHECK(cov->trace() == doctest::Approx(12.0));
    check_positive_definite_dense(*cov);
}

TEST_CASE("dense prior validates and applies") {
    auto a = test_matrix(10, 2);
    // Sigma0 = tridiagonal SPD
    DenseMatrix s(10, 10);
    for (std::size_t i = 0; i < 10; ++i) {
        s(i, i) = 2.0;
        if (i > 0) {
            s(i, i - 1) = 0.5;
            s(i - 1, i) = 0.5;
        }
    }
    PriorSpec spec{.family = PriorFamily::Dense, .x0 = {}, .sigma0 = s, .krylov = {}};
    auto cov = build_covariance(spec, a);
    check_apply_matches_dense(*cov);
    check_inverse_roundtrip(*cov);

    // non-symmetric sigma0 rejected
    DenseMatrix bad = s;
    bad(0, 1) = 0.9;
    PriorSpec bad_spec{.family = PriorFamily::Dense, .x0 = {}, .sigma0 = bad, .krylov = {}};
    CHECK_THROWS_AS(build_covariance(bad_spec, a), std::invalid_argument);

    // non-PD sigma0 rejected by the Cholesky probe
    DenseMatrix npd = s;
    npd(3, 3) = -1.0;
    PriorSpec npd_spec{.family = PriorFamily::Dense, .x0 = {}, .sigma0 = npd, .krylov = {}};
    CHECK_THROWS(build_covariance(npd_spec, a));
}

TEST_CASE("natural inverse prior applies A^-1") {
    auto a = test_matrix(14, 3);
    auto cov = build_covariance({.family = PriorFamily::NaturalInverse}, a);
    auto v = random_vector(14, 7);
    auto w = cov->apply(v);           // A^-1 v
    auto back = matvec(a, w);
    for (std::size_t i = 0; i < 14; ++i) CHECK(back[i] == doctest::Approx(v[i]).epsilon(1e-9));
    check_apply_matches_dense(*cov);
    check_inverse_roundtrip(*cov);
    check_positive_definite_dense(*cov);
}

TEST_CASE("natural A'A prior applies (A'A)^-1") {
    auto a = test_matrix(14, 4);
    auto cov = build_covariance({.family = PriorFamily::NaturalAtA}, a);
    auto v = random_vector(14, 8);
    auto w = cov->apply(v);
    auto back = matvec_transpose(a, matvec(a, w));  // A'A w should be v
    for (std::size_t i = 0; i < 14; ++i) CHECK(back[i] == doctest::Approx(v[i]).epsilon(1e-8));
    check_apply_matches_dense(*cov, 1e-8);
    check_inverse_roundtrip(*cov);
}

TEST_CASE("preconditioner prior equals (P'P)^-1 with P = LL'") {
    auto a = test_matrix(16, 5);
    auto cov = build_covariance({.family = PriorFamily::Preconditioner}, a);
    check_apply_matches_dense(*cov, 1e-8);
    check_inverse_roundtrip(*cov);
    check_positive_definite_dense(*cov);

    // cross-check against the explicit dense construction
    auto f = incomplete_cholesky_with_shift(a);
    auto l = f.lower.to_dense();
    auto p = matmul_transpose_b(l, l);  // P = L L'
    auto ptp = matmul_transpose_a(p, p);
    LuFactor lu(ptp);
    auto v = random_vector(16, 9);
    auto expect = lu.solve(v);
    auto got = cov->apply(v);
    for (std::size_t i = 0; i < 16; ++i) CHECK(got[i] == doctest::Approx(expect[i]).epsilon(1e-7));
}

TEST_CASE("krylov basis spans the power basis and flags breakdown") {
    auto a = test_matrix(18, 6);
    auto b = random_vector(18, 10);
    LinearOperatorFn m_apply = [&a](const Vector& v) { return matvec(a, v); };
    auto basis = krylov_basis(m_apply, b, 6);
    CHECK_FALSE(basis.truncated);
    REQUIRE(basis.columns.cols() == 7);

    // orthonormality
    auto gram = matmul_transpose_a(basis.columns, basis.columns);
    CHECK(max_abs(subtract(gram, DenseMatrix::identity(7))) < 1e-10);

    // span check: each power-basis vector reconstructs from the columns
    Vector pk = b;
    for (std::size_t j = 0; j <= 6; ++j) {
        Vector coeff = matvec_transpose(basis.columns, pk);
        Vector recon = matvec(basis.columns, coeff);
        CHECK(norm2(subtract(recon, pk)) < 1e-8 * norm2(pk));
        pk = m_apply(pk);
    }

    // each column j lies in the span of {b, ..., M^j b}: the leading flag property
    // checked via least squares against the accumulated power basis
    DenseMatrix powers(18, 7);
    pk = b;
    for (std::size_t j = 0; j <= 6; ++j) {
        powers.set_col(j, pk);
        pk = m_apply(pk);
    }
    for (std::size_t j = 0; j < 7; ++j) {
        auto pj = powers.leading_cols(j + 1);
        auto qr = householder_qr(pj);
        // residual of projecting column j of the basis onto range(pj)
        Vector c = basis.columns.col(j);
        Vector qc = matvec_transpose(qr.q, c);
        double tail = 0.0;
        for (std::size_t i = j + 1; i < 18; ++i) tail += qc[i] * qc[i];
        CHECK(std::sqrt(tail) < 1e-7);
    }

    // M = I: immediate breakdown after the first column
    LinearOperatorFn identity_apply = [](const Vector& v) { return v; };
    auto flat = krylov_basis(identity_apply, b, 6);
    CHECK(flat.truncated);
    CHECK(flat.columns.cols() == 1);
}

TEST_CASE("phi diagonal weights") {
    auto phi = phi_diagonal(0, 0.5, 0.9);
    REQUIRE(phi.size() == 1);
    CHECK(phi[0] == doctest::Approx(1.0).epsilon(1e-15));

    auto phi2 = phi_diagonal(2, 1.0, 0.5);
    REQUIRE(phi2.size() == 3);
    CHECK(phi2[0] == doctest::Approx(4.0).epsilon(1e-15));
    CHECK(phi2[1] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(phi2[2] == doctest::Approx(0.25).epsilon(1e-15));
    for (std::size_t i = 0; i + 1 < phi2.size(); ++i) CHECK(phi2[i] > phi2[i + 1]);

    CHECK_THROWS_AS(phi_diagonal(2, -1.0, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(phi_diagonal(2, 1.0, 1.5), std::invalid_argument);
}

TEST_CASE("krylov prior covariance assembles the two-block form") {
    auto a = test_matrix(12, 11);
    auto b = random_vector(12, 12);
    LinearOperatorFn m_apply = [&a](const Vector& v) { return matvec(a, v); };
    auto basis = krylov_basis(m_apply, b, 4);
    REQUIRE(basis.columns.cols() == 5);
    auto phi = phi_diagonal(4, 1.3, 0.8);
    auto q2 = qr_null_space(basis.columns);
    auto cov = krylov_prior_covariance(basis.columns, phi, q2, 0.01);

    check_apply_matches_dense(*cov, 1e-9);
    check_inverse_roundtrip(*cov, 1e-7);
    check_positive_definite_dense(*cov);

    // dense form equals K Phi K' + w Q2 Q2'
    DenseMatrix kphi(12, 5);
    for (std::size_t i = 0; i < 12; ++i)
        for (std::size_t j = 0; j < 5; ++j) kphi(i, j) = basis.columns(i, j) * phi[j];
    auto expect = add(matmul_transpose_b(kphi, basis.columns),
                      scaled(matmul_transpose_b(q2, q2), 0.01));
    CHECK(max_abs(subtract(cov->dense(), expect)) < 1e-12);

    // eigenvalues: phi entries plus the complement weight with multiplicity d - k
    auto eig = symmetric_eig(cov->dense());
    std::size_t weight_count = 0;
    for (double lam : eig.eigenvalues)
        if (std::abs(lam - 0.01) < 1e-9) ++weight_count;
    CHECK(weight_count == 7);

    CHECK_THROWS_AS(krylov_prior_covariance(basis.columns, Vector(5, -1.0), q2, 0.01),
                    std::invalid_argument);
    CHECK_THROWS_AS(krylov_prior_covariance(basis.columns, phi, q2, 0.0), std::invalid_argument);
}

TEST_CASE("krylov prior approaches the complement projector when phi weights vanish") {
    auto a = test_matrix(6, 13);
    auto b = random_vector(6, 14);
    LinearOperatorFn m_apply = [&a](const Vector& v) { return matvec(a, v); };
    auto basis = krylov_basis(m_apply, b, 2);
    auto q2 = qr_null_space(basis.columns);
    auto phi = phi_diagonal(2, 1e-8, 0.5);
    const double w = 10.0;
    auto cov = krylov_prior_covariance(basis.columns, phi, q2, w);
    auto projector = scaled(matmul_transpose_b(q2, q2), w);
    CHECK(max_abs(subtract(cov->dense(), projector)) < 1e-14);
}

TEST_CASE("full krylov family prior built from a PriorSpec, including estimated parameters") {
    auto a = test_matrix(20, 15, 0.4);
    auto bvec = random_vector(20, 16);

    PriorSpec spec;
    spec.family = PriorFamily::Krylov;
    spec.krylov.subspace_dim = 5;
    auto cov = build_covariance(spec, a, &bvec);
    CHECK(cov->dim() == 20);
    check_apply_matches_dense(*cov, 1e-9);
    check_positive_definite_dense(*cov);

    // missing right-hand side is an error
    CHECK_THROWS_AS(build_covariance(spec, a, nullptr), std::invalid_argument);

    // explicit parameters are honored: leading weight = (2 sigma)^2
    spec.krylov.xi = 0.5;
    spec.krylov.sigma_scale = 2.0;
    auto cov2 = build_covariance(spec, a, &bvec);
    Vector b_unit = scaled(bvec, 1.0 / norm2(bvec));
    auto sb = cov2->apply(b_unit);
    CHECK(dot(b_unit, sb) == doctest::Approx(16.0).epsilon(1e-10));
}

TEST_CASE("prior spec json round trip") {
    PriorSpec spec;
    spec.family = PriorFamily::Krylov;
    spec.x0 = {1.0, 2.0, 3.0};
    spec.krylov.subspace_dim = 7;
    spec.krylov.xi = 0.75;
    spec.krylov.complement_weight = 0.02;
    spec.krylov.op = KrylovOperator::PreconditionedA;

    auto j = spec.to_json();
    auto spec2 = PriorSpec::from_json(j);
    CHECK(spec2.family == PriorFamily::Krylov);
    CHECK(spec2.x0 == spec.x0);
    CHECK(spec2.krylov.subspace_dim == 7);
    CHECK(spec2.krylov.xi == 0.75);
    CHECK_FALSE(spec2.krylov.sigma_scale.has_value());
    CHECK(spec2.krylov.complement_weight == 0.02);
    CHECK(spec2.krylov.op == KrylovOperator::PreconditionedA);

    PriorSpec dense_spec;
    dense_spec.family = PriorFamily::Dense;
    DenseMatrix s(2, 2);
    s(0, 0) = 2.0;
    s(1, 1) = 3.0;
    s(0, 1) = s(1, 0) = 0.5;
    dense_spec.sigma0 = s;
    auto j2 = dense_spec.to_json();
    auto back = PriorSpec::from_json(j2);
    REQUIRE(back.sigma0.has_value());
    CHECK(max_abs(subtract(*back.sigma0, s)) == 0.0);

    CHECK_THROWS_AS(family_from_name("no_such_family"), std::invalid_argument);
}

TEST_CASE("build_prior fills x0 with zeros by default") {
    auto a = test_matrix(8, 17);
    auto prior = build_prior({.family = PriorFamily::Identity}, a);
    CHECK(prior.x0 == zeros(8));

    PriorSpec with_center{.family = PriorFamily::Identity};
    with_center.x0 = random_vector(8, 18);
    auto prior2 = build_prior(with_center, a);
    CHECK(prior2.x0 == with_center.x0);

    PriorSpec wrong{.family = PriorFamily::Identity};
    wrong.x0 = random_vector(9, 19);
    CHECK_THROWS_AS(build_prior(wrong, a), std::invalid_argument);
}
