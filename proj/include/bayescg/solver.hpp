#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bayescg/dense.hpp"
#include "bayescg/prior.hpp"
#include "bayescg/sparse.hpp"
#include "bayescg/vec.hpp"
#include "json.hpp"

namespace bayescg {

enum class DirectionMode { Sequential, Batch, Optimal, Provided };

std::string mode_name(DirectionMode mode);
DirectionMode mode_from_name(const std::string& name);

struct SolveConfig {
    std::size_t max_iter = 0;     // 0 means the problem dimension
    double residual_tol = 1e-10;  // stop once ||r|| <= tol
    DirectionMode mode = DirectionMode::Sequential;
    std::optional<DenseMatrix> directions;  // Provided mode: columns are search directions
    bool record_directions = false;
    bool record_iterates = false;
    std::size_t drift_check_interval = 10;
};

// Gaussian belief over the solution after m iterations: N(mean, Sigma_m) with
// Sigma_m = Sigma0 - sigma_factor sigma_factor'.
struct GaussianPosterior {
    Vector mean;
    DenseMatrix sigma_factor;  // d x m
    Prior prior;
    std::size_t iterations = 0;
    std::vector<double> residual_history;  // ||r_0||, ..., ||r_m||
    double nu = 0.0;                       // scale statistic nu_m
    bool converged = false;
    double max_residual_drift = 0.0;       // recomputed-residual check, updated periodically

    std::optional<DenseMatrix> directions;        // normalized, when recorded
    std::optional<std::vector<Vector>> iterates;  // x_0..x_m, when recorded
    std::vector<std::size_t> projection_counts;   // stored-direction projections per iteration

    std::size_t dim() const { return mean.size(); }
    DenseMatrix posterior_covariance() const;  // materialized Sigma_m (needs dense prior)
    double posterior_trace() const;            // trace(Sigma_m)
    double prior_weighted_trace() const;       // trace(Sigma_m Sigma0^-1)
};

// Student-t belief from the hierarchical model with a Jeffreys prior on the
// scale: location x_m, dof m, covariance scale nu_m * Sigma_m; the scale itself
// has an inverse-gamma marginal with shape m/2 and rate m nu_m / 2.
struct TPosterior {
    Vector location;
    double scale_factor = 0.0;  // nu_m
    std::size_t dof = 0;        // m
    GaussianPosterior base;

    double ig_shape() const { return 0.5 * static_cast<double>(dof); }
    double ig_rate() const { return 0.5 * static_cast<double>(dof) * scale_factor; }
};

// Closed-form posterior for an explicit block of search directions (columns of
// `directions`, not necessarily normalized or conjugate). Throws when the
// direction Gram matrix in the A Sigma0 A' inner product is numerically singular.
GaussianPosterior posterior_general(const SparseMatrix& a, const Vector& b, const Prior& prior,
                                    const DenseMatrix& directions);

// Iterative solver; dispatches on config.mode. Sequential recreates the
// conjugate-gradient recurrence, Batch re-orthogonalizes each new direction
// against all previous ones, Optimal precomputes leading eigenvector
// directions, Provided consumes config.directions column by column.
GaussianPosterior bayescg(const SparseMatrix& a, const Vector& b, const Prior& prior,
                          const SolveConfig& config);

// The m leading eigenvectors of A Sigma0 A', the information-optimal direction
// block for the squared-error loss.
DenseMatrix optimal_directions(const SparseMatrix& a, const CovarianceOperator& cov, std::size_t m);

// Reference construction for a general target inner-product matrix M (dense,
// test scale): S = A^-T M^(1/2) Phi_m with Phi_m the leading eigenvectors of
// M^(1/2) Sigma0 M^(1/2). With eigen_scaled_root the non-symmetric root
// V sqrt(Lambda) replaces the symmetric one; the span of the result is
// invariant to that choice.
DenseMatrix optimal_directions_general(const DenseMatrix& a, const CovarianceOperator& cov,
                                       const DenseMatrix& m_target, std::size_t m,
                                       bool eigen_scaled_root = false);

struct CgResult {
    std::vector<Vector> iterates;        // x_0..x_m
    std::vector<double> residual_norms;  // ||r_0||..||r_m||
    bool converged = false;
};

CgResult classical_cg(const SparseMatrix& a, const Vector& b, const Vector& x0,
                      std::size_t max_iter, double tol);

TPosterior hierarchical_posterior(const GaussianPosterior& g);

// sqrt((d - m) nu_m): the calibrated scale of the remaining error; a direct
// convergence criterion because it estimates E||x* - x_m||_{Sigma-whitened}.
double termination_sigma(const GaussianPosterior& g);

nlohmann::json posterior_to_json(const GaussianPosterior& g, const std::string& method);
GaussianPosterior posterior_from_json(const nlohmann::json& j, Prior prior);

}  // namespace bayescg
