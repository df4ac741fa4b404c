#include "bayescg/solver.hpp"

#include <cmath>
#include <stdexcept>

#include "bayescg/eig.hpp"
#include "bayescg/factor.hpp"

namespace bayescg {

std::string mode_name(DirectionMode mode) {
    switch (mode) {
        case DirectionMode::Sequential: return "sequential";
        case DirectionMode::Batch: return "batch";
        case DirectionMode::Optimal: return "optimal";
        case DirectionMode::Provided: return "provided";
    }
    throw std::invalid_argument("unknown direction mode");
}

DirectionMode mode_from_name(const std::string& name) {
    if (name == "sequential" || name == "seq") return DirectionMode::Sequential;
    if (name == "batch") return DirectionMode::Batch;
    if (name == "optimal") return DirectionMode::Optimal;
    if (name == "provided") return DirectionMode::Provided;
    throw std::invalid_argument("unknown direction mode: " + name);
}

namespace {

void require_system(const SparseMatrix& a, const Vector& b, const Prior& prior) {
    if (b.size() != a.dim()) throw std::invalid_argument("solver: rhs dimension mismatch");
    if (!prior.covariance) throw std::invalid_argument("solver: prior covariance missing");
    if (prior.covariance->dim() != a.dim())
        throw std::invalid_argument("solver: prior covariance dimension mismatch");
    if (prior.x0.size() != a.dim()) throw std::invalid_argument("solver: x0 dimension mismatch");
}

std::size_t effective_max_iter(const SolveConfig& config, std::size_t d) {
    const std::size_t cap = config.max_iter == 0 ? d : config.max_iter;
    return std::min(cap, d);
}

double residual_drift(const SparseMatrix& a, const Vector& b, const Vector& x, const Vector& r) {
    Vector true_r = subtract(b, matvec(a, x));
    return norm2(subtract(r, true_r));
}

DenseMatrix columns_to_matrix(std::size_t d, const std::vector<Vector>& cols) {
    DenseMatrix m(d, cols.size());
    for (std::size_t j = 0; j < cols.size(); ++j) m.set_col(j, cols[j]);
    return m;
}

GaussianPosterior run_sequential(const SparseMatrix& a, const Vector& b, const Prior& prior,
                                 const SolveConfig& config) {
    const std::size_t d = a.dim();
    const std::size_t max_iter = effective_max_iter(config, d);
    const CovarianceOperator& sigma0 = *prior.covariance;

    GaussianPosterior post;
    post.prior = prior;
    post.mean = prior.x0;
    Vector r = subtract(b, matvec(a, prior.x0));
    double rr = dot(r, r);
    post.residual_history.push_back(std::sqrt(rr));
    if (config.record_iterates) post.iterates = std::vector<Vector>{post.mean};

    std::vector<Vector> factor_cols;
    std::vector<Vector> direction_cols;
    Vector s = r;  // unnormalized search direction
    double nu_acc = 0.0;
    std::size_t m = 0;
    while (m < max_iter && post.residual_history.back() > config.residual_tol) {
        Vector z = sigma0.apply(matvec_transpose(a, s));  // Sigma0 A' s
        Vector w = matvec(a, z);                          // A Sigma0 A' s
        const double e2 = dot(s, w);
        if (!(e2 > 0.0))
            throw std::runtime_error("bayescg: direction energy vanished at iteration " +
                                     std::to_string(m + 1));
        const double e = std::sqrt(e2);
        const double alpha = rr / e2;
        axpy(alpha, z, post.mean);
        factor_cols.push_back(scaled(z, 1.0 / e));
        if (config.record_directions) direction_cols.push_back(scaled(s, 1.0 / e));

        Vector r_next = r;
        axpy(-alpha, w, r_next);
        const double rr_next = dot(r_next, r_next);
        nu_acc += rr * rr / e2;
        ++m;
        post.projection_counts.push_back(0);
        if (config.drift_check_interval > 0 && m % config.drift_check_interval == 0)
            post.max_residual_drift =
                std::max(post.max_residual_drift, residual_drift(a, b, post.mean, r_next));

        const double beta = rr_next / rr;
        for (std::size_t i = 0; i < d; ++i) s[i] = r_next[i] + beta * s[i];
        r = std::move(r_next);
        rr = rr_next;
        post.residual_history.push_back(std::sqrt(rr));
        if (config.record_iterates) post.iterates->push_back(post.mean);
    }
    post.iterations = m;
    post.converged = post.residual_history.back() <= config.residual_tol;
    post.nu = m > 0 ? nu_acc / static_cast<double>(m) : 0.0;
    post.sigma_factor = columns_to_matrix(d, factor_cols);
    if (config.record_directions) post.directions = columns_to_matrix(d, direction_cols);
    return post;
}

// Batch and Provided modes share this loop. In Batch mode the next direction is
// the current residual re-orthogonalized (two modified Gram-Schmidt passes, so
// conjugacy holds to machine precision) against all stored directions in the
// A Sigma0 A' inner product. In Provided mode the given columns are consumed in
// order and orthogonalized the same way, which reduces them to the same
// normalized conjugate frame Lambda = I.
GaussianPosterior run_batch(const SparseMatrix& a, const Vector& b, const Prior& prior,
                            const SolveConfig& config, const DenseMatrix* provided) {
    const std::size_t d = a.dim();
    std::size_t max_iter = effective_max_iter(config, d);
    if (provided) {
        if (provided->rows() != d)
            throw std::invalid_argument("bayescg: provided direction rows mismatch");
        max_iter = std::min(max_iter, provided->cols());
    }
    const CovarianceOperator& sigma0 = *prior.covariance;

    GaussianPosterior post;
    post.prior = prior;
    post.mean = prior.x0;
    Vector r = subtract(b, matvec(a, prior.x0));
    post.residual_history.push_back(norm2(r));
    if (config.record_iterates) post.iterates = std::vector<Vector>{post.mean};

    std::vector<Vector> s_cols;      // normalized directions
    std::vector<Vector> w_cols;      // cached A Sigma0 A' s_i for O(d) projections
    std::vector<Vector> factor_cols;
    double nu_acc = 0.0;
    std::size_t m = 0;
    while (m < max_iter && post.residual_history.back() > config.residual_tol) {
        Vector s = provided ? provided->col(m) : r;
        const double norm_before = norm2(s);
        std::size_t projections = 0;
        for (int pass = 0; pass < 2; ++pass) {
            for (std::size_t i = 0; i < s_cols.size(); ++i) {
                axpy(-dot(w_cols[i], s), s_cols[i], s);
                ++projections;
            }
        }
        if (norm2(s) <= 1e-12 * norm_before) {
            if (provided)
                throw std::runtime_error("bayescg: provided direction " + std::to_string(m + 1) +
                                         " is numerically dependent on its predecessors");
            break;  // residual lies in the explored space; nothing left to learn
        }
        Vector z = sigma0.apply(matvec_transpose(a, s));
        Vector w = matvec(a, z);
        const double e2 = dot(s, w);
        if (!(e2 > 0.0))
            throw std::runtime_error("bayescg: direction energy vanished at iteration " +
                                     std::to_string(m + 1));
        const double e = std::sqrt(e2);
        Vector s_hat = scaled(s, 1.0 / e);
        Vector w_hat = scaled(w, 1.0 / e);
        Vector z_hat = scaled(z, 1.0 / e);
        const double gain = dot(s_hat, r);  // s_m' r_{m-1}; equals s_m' r_0 by conjugacy
        axpy(gain, z_hat, post.mean);
        axpy(-gain, w_hat, r);
        nu_acc += gain * gain;
        factor_cols.push_back(z_hat);
        s_cols.push_back(std::move(s_hat));
        w_cols.push_back(std::move(w_hat));
        ++m;
        post.projection_counts.push_back(projections);
        if (config.drift_check_interval > 0 && m % config.drift_check_interval == 0)
            post.max_residual_drift =
                std::max(post.max_residual_drift, residual_drift(a, b, post.mean, r));
        post.residual_history.push_back(norm2(r));
        if (config.record_iterates) post.iterates->push_back(post.mean);
    }
    post.iterations = m;
    post.converged = post.residual_history.back() <= config.residual_tol;
    post.nu = m > 0 ? nu_acc / static_cast<double>(m) : 0.0;
    post.sigma_factor = columns_to_matrix(d, factor_cols);
    if (config.record_directions) post.directions = columns_to_matrix(d, s_cols);
    return post;
}

}  // namespace

GaussianPosterior posterior_general(const SparseMatrix& a, const Vector& b, const Prior& prior,
                                    const DenseMatrix& directions) {
    require_system(a, b, prior);
    const std::size_t d = a.dim();
    const std::size_t m = directions.cols();
    if (directions.rows() != d)
        throw std::invalid_argument("posterior_general: direction rows mismatch");
    if (m == 0) throw std::invalid_argument("posterior_general: no directions given");
    const CovarianceOperator& sigma0 = *prior.covariance;

    // Z = Sigma0 A' S, Lambda = S' A Z
    DenseMatrix z(d, m);
    for (std::size_t j = 0; j < m; ++j)
        z.set_col(j, sigma0.apply(matvec_transpose(a, directions.col(j))));
    DenseMatrix az(d, m);
    for (std::size_t j = 0; j < m; ++j) az.set_col(j, matvec(a, z.col(j)));
    DenseMatrix lambda = symmetrized(matmul_transpose_a(directions, az));

    std::unique_ptr<CholeskyFactor> chol;
    try {
        chol = std::make_unique<CholeskyFactor>(lambda);
    } catch (const std::runtime_error&) {
        throw std::runtime_error(
            "posterior_general: information Gram matrix is singular; directions are dependent");
    }

    Vector r0 = subtract(b, matvec(a, prior.x0));
    Vector v(m);
    for (std::size_t j = 0; j < m; ++j) v[j] = dot(directions.col(j), r0);
    Vector c = chol->solve(v);

    GaussianPosterior post;
    post.prior = prior;
    post.mean = prior.x0;
    for (std::size_t j = 0; j < m; ++j) axpy(c[j], z.col(j), post.mean);
    post.nu = dot(v, c) / static_cast<double>(m);
    post.iterations = m;

    // sigma_factor = Z L^-T, so factor factor' = Z Lambda^-1 Z'
    post.sigma_factor = DenseMatrix(d, m);
    for (std::size_t i = 0; i < d; ++i) {
        Vector row(m);
        for (std::size_t j = 0; j < m; ++j) row[j] = z(i, j);
        Vector solved = chol->solve_lower(row);
        for (std::size_t j = 0; j < m; ++j) post.sigma_factor(i, j) = solved[j];
    }
    post.residual_history.push_back(norm2(r0));
    post.residual_history.push_back(norm2(subtract(b, matvec(a, post.mean))));
    post.directions = directions;
    return post;
}

GaussianPosterior bayescg(const SparseMatrix& a, const Vector& b, const Prior& prior,
                          const SolveConfig& config) {
    require_system(a, b, prior);
    switch (config.mode) {
        case DirectionMode::Sequential:
            return run_sequential(a, b, prior, config);
        case DirectionMode::Batch:
            return run_batch(a, b, prior, config, nullptr);
        case DirectionMode::Optimal: {
            const std::size_t m = effective_max_iter(config, a.dim());
            DenseMatrix s = optimal_directions(a, *prior.covariance, m);
            SolveConfig sub = config;
            sub.directions = std::move(s);
            return run_batch(a, b, prior, sub, &*sub.directions);
        }
        case DirectionMode::Provided:
            if (!config.directions)
                throw std::invalid_argument("bayescg: Provided mode needs config.directions");
            return run_batch(a, b, prior, config, &*config.directions);
    }
    throw std::logic_error("bayescg: unreachable");
}

DenseMatrix optimal_directions(const SparseMatrix& a, const CovarianceOperator& cov,
                               std::size_t m) {
    const std::size_t d = a.dim();
    if (m == 0 || m > d) throw std::invalid_argument("optimal_directions: m out of range");
    if (d > kDenseLimit)
        throw std::invalid_argument("optimal_directions: needs the dense eigensolver; dimension " +
                                    std::to_string(d) + " exceeds " + std::to_string(kDenseLimit));
    // W = A Sigma0 A', assembled column by column
    DenseMatrix w(d, d);
    Vector e(d, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
        e[j] = 1.0;
        w.set_col(j, matvec(a, cov.apply(matvec_transpose(a, e))));
        e[j] = 0.0;
    }
    auto eig = symmetric_eig(symmetrized(w));
    return eig.eigenvectors.leading_cols(m);
}

DenseMatrix optimal_directions_general(const DenseMatrix& a, const CovarianceOperator& cov,
                                       const DenseMatrix& m_target, std::size_t m,
                                       bool eigen_scaled_root) {
    const std::size_t d = a.rows();
    if (m == 0 || m > d) throw std::invalid_argument("optimal_directions_general: m out of range");
    auto meig = symmetric_eig(m_target);
    for (double lam : meig.eigenvalues)
        if (lam < 0.0) throw std::invalid_argument("optimal_directions_general: M not PSD");
    // root R with R R' = M
    DenseMatrix root(d, d);
    if (eigen_scaled_root) {
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j)
                root(i, j) = meig.eigenvectors(i, j) * std::sqrt(std::max(meig.eigenvalues[j], 0.0));
    } else {
        root = symmetric_sqrt(m_target);
    }
    // core = R' Sigma0 R, leading eigenvectors phi
    DenseMatrix sr(d, d);
    for (std::size_t j = 0; j < d; ++j) sr.set_col(j, cov.apply(root.col(j)));
    DenseMatrix core = symmetrized(matmul_transpose_a(root, sr));
    auto ceig = symmetric_eig(core);
    DenseMatrix phi = ceig.eigenvectors.leading_cols(m);
    // S = A^-T R phi
    DenseMatrix rphi = matmul(root, phi);
    LuFactor lu(a);
    DenseMatrix s(d, m);
    for (std::size_t j = 0; j < m; ++j) s.set_col(j, lu.solve_transpose(rphi.col(j)));
    return s;
}

CgResult classical_cg(const SparseMatrix& a, const Vector& b, const Vector& x0,
                      std::size_t max_iter, double tol) {
    if (b.size() != a.dim() || x0.size() != a.dim())
        throw std::invalid_argument("classical_cg: dimension mismatch");
    const std::size_t cap = std::min(max_iter == 0 ? a.dim() : max_iter, a.dim());
    CgResult out;
    Vector x = x0;
    Vector r = subtract(b, matvec(a, x));
    double rr = dot(r, r);
    out.iterates.push_back(x);
    out.residual_norms.push_back(std::sqrt(rr));
    Vector p = r;
    std::size_t m = 0;
    while (m < cap && out.residual_norms.back() > tol) {
        Vector ap = matvec(a, p);
        const double pap = dot(p, ap);
        if (!(pap > 0.0)) throw std::runtime_error("classical_cg: matrix is not positive definite");
        const double alpha = rr / pap;
        axpy(alpha, p, x);
        axpy(-alpha, ap, r);
        const double rr_next = dot(r, r);
        const double beta = rr_next / rr;
        for (std::size_t i = 0; i < p.size(); ++i) p[i] = r[i] + beta * p[i];
        rr = rr_next;
        ++m;
        out.iterates.push_back(x);
        out.residual_norms.push_back(std::sqrt(rr));
    }
    out.converged = out.residual_norms.back() <= tol;
    return out;
}

TPosterior hierarchical_posterior(const GaussianPosterior& g) {
    if (g.iterations == 0)
        throw std::invalid_argument("hierarchical_posterior: no iterations, scale is undefined");
    TPosterior t;
    t.location = g.mean;
    t.scale_factor = g.nu;
    t.dof = g.iterations;
    t.base = g;
    return t;
}

double termination_sigma(const GaussianPosterior& g) {
    const double remaining = static_cast<double>(g.dim()) - static_cast<double>(g.iterations);
    if (remaining <= 0.0) return 0.0;
    return std::sqrt(remaining * g.nu);
}

DenseMatrix GaussianPosterior::posterior_covariance() const {
    if (!prior.covariance || !prior.covariance->has_dense())
        throw std::logic_error("posterior_covariance: dense prior unavailable");
    DenseMatrix cov = prior.covariance->dense();
    const std::size_t m = sigma_factor.cols();
    for (std::size_t i = 0; i < cov.rows(); ++i)
        for (std::size_t j = 0; j < cov.cols(); ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < m; ++k) s += sigma_factor(i, k) * sigma_factor(j, k);
            cov(i, j) -= s;
        }
    return symmetrized(cov);
}

double GaussianPosterior::posterior_trace() const {
    if (!prior.covariance) throw std::logic_error("posterior_trace: prior missing");
    double t = prior.covariance->trace();
    for (std::size_t k = 0; k < sigma_factor.cols(); ++k) {
        const Vector col = sigma_factor.col(k);
        t -= dot(col, col);
    }
    return t;
}

double GaussianPosterior::prior_weighted_trace() const {
    if (!prior.covariance || !prior.covariance->has_inverse())
        throw std::logic_error("prior_weighted_trace: inverse prior action unavailable");
    double t = static_cast<double>(dim());
    for (std::size_t k = 0; k < sigma_factor.cols(); ++k) {
        const Vector col = sigma_factor.col(k);
        t -= dot(col, prior.covariance->apply_inverse(col));
    }
    return t;
}

nlohmann::json posterior_to_json(const GaussianPosterior& g, const std::string& method) {
    nlohmann::json j;
    j["schema"] = "bayescg-posterior-1";
    j["method"] = method;
    j["d"] = g.dim();
    j["m"] = g.iterations;
    j["mean"] = g.mean;
    std::vector<double> factor;  // column-major
    factor.reserve(g.dim() * g.sigma_factor.cols());
    for (std::size_t col = 0; col < g.sigma_factor.cols(); ++col)
        for (std::size_t row = 0; row < g.dim(); ++row) factor.push_back(g.sigma_factor(row, col));
    j["sigma_factor"] = factor;
    j["nu"] = g.nu;
    j["residual_history"] = g.residual_history;
    j["converged"] = g.converged;
    if (g.directions) {
        std::vector<double> dirs;
        for (std::size_t col = 0; col < g.directions->cols(); ++col)
            for (std::size_t row = 0; row < g.dim(); ++row) dirs.push_back((*g.directions)(row, col));
        j["directions"] = dirs;
    }
    return j;
}

GaussianPosterior posterior_from_json(const nlohmann::json& j, Prior prior) {
    if (j.at("schema").get<std::string>() != "bayescg-posterior-1")
        throw std::invalid_argument("posterior_from_json: unknown schema");
    GaussianPosterior g;
    g.mean = j.at("mean").get<Vector>();
    const std::size_t d = j.at("d").get<std::size_t>();
    const std::size_t m = j.at("m").get<std::size_t>();
    if (g.mean.size() != d) throw std::invalid_argument("posterior_from_json: mean size mismatch");
    const auto factor = j.at("sigma_factor").get<std::vector<double>>();
    if (factor.size() != d * m)
        throw std::invalid_argument("posterior_from_json: sigma_factor size mismatch");
    g.sigma_factor = DenseMatrix(d, m);
    for (std::size_t col = 0; col < m; ++col)
        for (std::size_t row = 0; row < d; ++row) g.sigma_factor(row, col) = factor[col * d + row];
    g.iterations = m;
    g.nu = j.at("nu").get<double>();
    g.residual_history = j.at("residual_history").get<std::vector<double>>();
    g.converged = j.value("converged", false);
    if (j.contains("directions")) {
        const auto dirs = j["directions"].get<std::vector<double>>();
        if (dirs.size() != d * m)
            throw std::invalid_argument("posterior_from_json: directions size mismatch");
        DenseMatrix s(d, m);
        for (std::size_t col = 0; col < m; ++col)
            for (std::size_t row = 0; row < d; ++row) s(row, col) = dirs[col * d + row];
        g.directions = std::move(s);
    }
    g.prior = std::move(prior);
    if (g.prior.covariance && g.prior.covariance->dim() != d)
        throw std::invalid_argument("posterior_from_json: prior dimension mismatch");
    return g;
}

}  // namespace bayescg
