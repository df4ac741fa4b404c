#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "bayescg/prior.hpp"
#include "bayescg/solver.hpp"
#include "bayescg/testgen.hpp"
#include "bayescg/uq.hpp"
#include "json.hpp"

namespace bayescg {

nlohmann::json problem_to_json(const ProblemConfig& config);
ProblemConfig problem_from_json(const nlohmann::json& j);

// Convergence study: for each replicate a fresh system, then every requested
// prior x direction-mode combination (plus classical CG) run to max_iter with
// per-iteration error, residual, and posterior-trace columns.
struct ConvergenceConfig {
    ProblemConfig problem;
    std::vector<PriorSpec> priors;          // defaults to {identity, natural_inverse,
                                            //  preconditioner, krylov} when empty
    std::vector<DirectionMode> modes{DirectionMode::Sequential, DirectionMode::Batch,
                                     DirectionMode::Optimal};
    bool include_cg = true;
    std::size_t max_iter = 0;               // 0 means the problem dimension
    std::size_t replicates = 3;
    std::uint64_t master_seed = 0;
    std::size_t threads = 0;
};

struct ConvergenceRow {
    std::size_t replicate = 0;
    std::uint64_t seed = 0;
    std::string prior;       // family name; "none" for classical CG
    std::string method;      // direction mode name, or "cg"
    std::size_t m = 0;
    double error = 0.0;      // ||x_m - x*||_2
    double residual = 0.0;   // ||b - A x_m||_2
    double trace_ratio = 0.0;  // tr(Sigma_m)/tr(Sigma_0); NaN for classical CG
};

struct ConvergenceResult {
    std::vector<ConvergenceRow> rows;  // sorted by (replicate, prior, method, m)
};

ConvergenceResult convergence_experiment(const ConvergenceConfig& config);
std::string convergence_csv(const ConvergenceResult& result);

// Head-to-head with the matrix-inference method: identical systems, identical
// batch directions; per-iteration mean errors for both, calibration statistics
// at the final iteration for both.
struct CompareConfig {
    ProblemConfig problem;
    std::size_t iterations = 10;
    std::size_t replicates = 10;
    std::uint64_t master_seed = 0;
    std::size_t threads = 0;
    bool half_convention = false;  // scale of the equivalent solution-space prior
};

struct CompareErrorRow {
    std::size_t replicate = 0;
    std::uint64_t seed = 0;
    std::size_t m = 0;
    double error_bayescg = 0.0;
    double error_matrix = 0.0;
};

struct CompareZRow {
    std::size_t replicate = 0;
    std::uint64_t seed = 0;
    double z_bayescg = 0.0;
    double z_matrix = 0.0;
    bool matrix_failed = false;  // singular Y'WY in the matrix method
};

struct CompareResult {
    std::vector<CompareErrorRow> error_rows;
    std::vector<CompareZRow> z_rows;
    std::size_t matrix_failures = 0;
    double z_mean_bayescg = 0.0;
    double z_mean_matrix = 0.0;
    double chi2_first_percentile = 0.0;  // of chi-squared(d - m)
    double prior_trace_full = 0.0;       // trace of b'b I + b b', averaged over replicates
    double prior_trace_half = 0.0;       // same under the one-half convention
};

CompareResult compare_experiment(const CompareConfig& config);
std::string compare_error_csv(const CompareResult& result);
std::string compare_z_csv(const CompareResult& result);
nlohmann::json compare_summary_json(const CompareResult& result, const CompareConfig& config);

// Calibration study over several priors on the same seeds.
struct UqExperimentConfig {
    CalibrationConfig base;           // prior field ignored; taken from `priors`
    std::vector<PriorSpec> priors;
};

struct UqExperimentResult {
    std::vector<CalibrationRun> runs;  // parallel to priors
};

UqExperimentResult uq_experiment(const UqExperimentConfig& config);

// Top-level driver configuration, a JSON mirror for the command line.
struct ExperimentConfig {
    std::string experiment;            // convergence | uq | compare
    ProblemConfig problem;
    std::vector<PriorSpec> priors;
    DirectionMode mode = DirectionMode::Batch;
    std::size_t iterations = 10;
    std::size_t max_iter = 0;
    std::size_t replicates = 3;
    std::uint64_t master_seed = 0;
    std::size_t threads = 0;
    std::filesystem::path out_dir = ".";
    bool half_convention = false;

    void validate() const;
    nlohmann::json to_json() const;
    static ExperimentConfig from_json(const nlohmann::json& j);
};

// Runs the configured experiment and writes its CSV/JSON outputs into
// config.out_dir. Returns the written file names.
std::vector<std::filesystem::path> run_experiment(const ExperimentConfig& config);

void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace bayescg
