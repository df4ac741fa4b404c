#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bayescg/dense.hpp"
#include "bayescg/solver.hpp"
#include "bayescg/special_functions.hpp"
#include "bayescg/testgen.hpp"
#include "bayescg/vec.hpp"
#include "json.hpp"

namespace bayescg {

// Spectral decomposition of the posterior covariance restricted to its range.
// The rank is d - m by construction; when conjugacy is lost numerically the
// singular values can disagree, in which case the flag is set and the SVD rank
// is the one actually used.
struct UncertainSubspace {
    DenseMatrix basis;          // d x rank, orthonormal columns
    Vector scales;              // positive eigenvalues of Sigma_m, descending
    std::size_t expected_rank = 0;  // d - m
    bool rank_mismatch = false;
    double min_eigenvalue = 0.0;    // most negative raw eigenvalue seen

    std::size_t rank() const { return scales.size(); }
};

// Throws std::runtime_error when Sigma_m has an eigenvalue below
// -1e-6 * (1 + sigma_max): the posterior is not a covariance any more.
UncertainSubspace uncertain_subspace(const GaussianPosterior& post);

// Same decomposition for an explicitly materialised covariance.
UncertainSubspace covariance_subspace(const DenseMatrix& cov, std::size_t expected_rank);

// ||D^{-1/2} U' diff||^2 for the given whitening basis.
double whitened_z(const DenseMatrix& basis, const Vector& scales, const Vector& diff);

// Squared posterior-whitened error of x_star; chi-squared with d - m degrees
// of freedom when x_star is a prior draw and the directions do not depend on it.
double gaussian_z(const GaussianPosterior& post, const Vector& x_star);

// Same statistic under the hierarchical posterior, divided by nu_m (d - m);
// follows F(d - m, m) under calibration.
double t_z(const TPosterior& post, const Vector& x_star);

// Draws x_m + U D^{1/2} z with z standard normal in the rank dimensions.
std::vector<Vector> sample_posterior(const GaussianPosterior& post, std::size_t n,
                                     std::uint64_t seed);

enum class ReferenceDistribution { ChiSquared, FRatio };

struct CalibrationReport {
    std::string label;                    // prior / direction tag, used in file names
    ReferenceDistribution reference = ReferenceDistribution::ChiSquared;
    std::size_t dof1 = 0;                 // chi-squared dof, or the F numerator dof
    std::size_t dof2 = 0;                 // F denominator dof; unused for chi-squared
    std::vector<std::uint64_t> seeds;     // per surviving replicate
    std::vector<double> statistics;
    std::size_t psd_failures = 0;         // replicates aborted on an indefinite Sigma_m
    std::size_t rank_mismatches = 0;
    std::optional<double> ks;             // unset when fewer than 10 samples survive
    double empirical_mean = 0.0;
    double empirical_variance = 0.0;

    double reference_cdf(double z) const;
    std::string to_csv() const;           // replicate, seed, z, reference_cdf
    nlohmann::json summary_json() const;
};

// Builds the summary statistics (mean, variance, KS against the reference)
// from the raw statistics already stored.
void finalize_report(CalibrationReport& report);

struct CalibrationConfig {
    ProblemConfig problem;          // per-replicate seed is derived from master_seed
    PriorSpec prior;
    std::size_t iterations = 10;    // m
    DirectionMode mode = DirectionMode::Batch;
    std::size_t replicates = 500;
    std::uint64_t master_seed = 0;
    std::size_t threads = 0;        // 0 means hardware concurrency
};

struct CalibrationRun {
    CalibrationReport gaussian;     // vs chi-squared(d - m)
    CalibrationReport student_t;    // vs F(d - m, m)
};

// Fills an unset Krylov contraction factor from the generated spectrum and an
// unset scale from ||x*||_A; in simulation both are known exactly, while
// build_prior can only estimate them. Other families pass through unchanged.
PriorSpec fill_krylov_oracle_params(PriorSpec spec, const GeneratedProblem& gen,
                                    const Vector& x_star);

// Per replicate: a fresh matrix, a truth drawn from the prior location scale
// (x* ~ N(0, I), b = A x*), the prior rebuilt on that system, m iterations,
// then both calibration statistics. Replicates run on a worker pool with
// split RNG streams, so the result is independent of scheduling.
CalibrationRun calibration_experiment(const CalibrationConfig& config);

}  // namespace bayescg
