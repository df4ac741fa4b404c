#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>

#include "bayescg/rng.hpp"
#include "bayescg/sparse.hpp"
#include "bayescg/system.hpp"
#include "bayescg/vec.hpp"

namespace bayescg {

enum class ProblemKind { SparseSpd, Poisson2D };

// Parameters of a generated test problem.
//
// SparseSpd: symmetric positive definite matrix with eigenvalues drawn from an
// exponential distribution with the given rate (mean 1/eig_rate), then rotated
// by random Givens rotations until the stored density reaches the target. No
// entry is ever dropped, so the spectrum is preserved by construction. With
// target density >= 0.95 (and dim > 2) a full random orthogonal similarity is
// used instead.
//
// Poisson2D: 5-point finite-difference Laplacian on an n x n interior grid
// (dim = grid * grid), the standard discrete Poisson matrix.
struct ProblemConfig {
    ProblemKind kind = ProblemKind::SparseSpd;
    std::size_t dim = 100;
    double density = 0.2;     // SparseSpd target fill fraction of d*d
    double eig_rate = 10.0;   // SparseSpd exponential rate
    std::size_t grid = 0;     // Poisson2D grid side; dim is derived as grid*grid
    std::uint64_t seed = 0;

    void validate() const;
};

struct GeneratedProblem {
    SparseMatrix a;
    Vector eigenvalues;       // drawn spectrum (SparseSpd); empty for Poisson2D
    double achieved_density = 0.0;
};

GeneratedProblem random_spd_sparse(const ProblemConfig& config);

SparseMatrix poisson2d(std::size_t grid);

GeneratedProblem generate_problem(const ProblemConfig& config);

// Truth draw x* ~ N(0, I) and right-hand side b = A x*, from a stream split off
// the given seed so the draw is independent of how A was produced.
std::pair<Vector, Vector> draw_truth_and_rhs(const SparseMatrix& a, std::uint64_t seed);

LinearSystem make_system(const ProblemConfig& config);

// Writes <stem>.mtx (coordinate symmetric) and <stem>.json with the generation
// parameters and drawn spectrum.
void write_problem(const GeneratedProblem& problem, const ProblemConfig& config,
                   const std::filesystem::path& dir, const std::string& stem);

}  // namespace bayescg
