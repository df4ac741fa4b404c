#include "bayescg/testgen.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "bayescg/factor.hpp"
#include "bayescg/matrix_market.hpp"
#include "json.hpp"

namespace bayescg {

void ProblemConfig::validate() const {
    if (kind == ProblemKind::SparseSpd) {
        if (dim == 0) throw std::invalid_argument("ProblemConfig: dim must be positive");
        if (eig_rate <= 0.0) throw std::invalid_argument("ProblemConfig: eig_rate must be positive");
        if (density <= 0.0 || density > 1.0)
            throw std::invalid_argument("ProblemConfig: density must be in (0, 1]");
        const double min_density = static_cast<double>(dim) / (static_cast<double>(dim) * dim);
        if (density < min_density)
            throw std::invalid_argument("ProblemConfig: density below the diagonal minimum 1/dim");
    } else {
        if (grid == 0) throw std::invalid_argument("ProblemConfig: grid must be positive");
    }
}

namespace {

GeneratedProblem dense_rotation_path(const Vector& lambda, Rng& rng) {
    const std::size_t d = lambda.size();
    DenseMatrix g(d, d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) g(i, j) = rng.next_gaussian();
    QrResult qr = householder_qr(g);
    // A = Q diag(lambda) Q'
    DenseMatrix ql(d, d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) ql(i, j) = qr.q(i, j) * lambda[j];
    DenseMatrix a = matmul_transpose_b(ql, qr.q);
    a = symmetrized(a);
    GeneratedProblem out;
    out.a = SparseMatrix::from_dense(a);
    out.achieved_density = 1.0;
    return out;
}

}  // namespace

GeneratedProblem random_spd_sparse(const ProblemConfig& config) {
    config.validate();
    const std::size_t d = config.dim;
    Rng spectrum_rng = Rng(config.seed).split(1);
    Rng rotation_rng = Rng(config.seed).split(2);

    Vector lambda(d);
    for (std::size_t i = 0; i < d; ++i)
        lambda[i] = spectrum_rng.next_exponential(config.eig_rate);

    if (config.density >= 0.95 && d > 2) {
        GeneratedProblem out = dense_rotation_path(lambda, rotation_rng);
        out.eigenvalues = lambda;
        return out;
    }

    // Work on a dense array with an explicit fill pattern; Givens rotations in
    // random planes merge row/column supports until the target density is hit.
    DenseMatrix w(d, d);
    std::vector<std::vector<bool>> fill(d, std::vector<bool>(d, false));
    std::size_t stored = d;
    for (std::size_t i = 0; i < d; ++i) {
        w(i, i) = lambda[i];
        fill[i][i] = true;
    }
    const auto target = static_cast<std::size_t>(
        std::ceil(config.density * static_cast<double>(d) * static_cast<double>(d)));
    const std::size_t max_rotations = 200 * d + 100;
    std::size_t rotations = 0;
    while (stored < target && rotations < max_rotations) {
        std::size_t p = static_cast<std::size_t>(rotation_rng.next_double() * d);
        std::size_t q = static_cast<std::size_t>(rotation_rng.next_double() * d);
        if (p >= d) p = d - 1;
        if (q >= d) q = d - 1;
        if (p == q) continue;
        ++rotations;
        const double angle = rotation_rng.next_double() * 2.0 * M_PI;
        const double c = std::cos(angle), s = std::sin(angle);
        // W <- G' W G with G the rotation in the (p, q) plane.
        for (std::size_t k = 0; k < d; ++k) {
            const double wkp = w(k, p), wkq = w(k, q);
            w(k, p) = c * wkp - s * wkq;
            w(k, q) = s * wkp + c * wkq;
        }
        for (std::size_t k = 0; k < d; ++k) {
            const double wpk = w(p, k), wqk = w(q, k);
            w(p, k) = c * wpk - s * wqk;
            w(q, k) = s * wpk + c * wqk;
        }
        // The fill pattern of rows/columns p and q becomes their union.
        for (std::size_t k = 0; k < d; ++k) {
            const bool u = fill[p][k] || fill[q][k];
            if (u && !fill[p][k]) { fill[p][k] = true; ++stored; }
            if (u && !fill[q][k]) { fill[q][k] = true; ++stored; }
        }
        for (std::size_t k = 0; k < d; ++k) {
            const bool u = fill[k][p] || fill[k][q];
            if (u && !fill[k][p]) { fill[k][p] = true; ++stored; }
            if (u && !fill[k][q]) { fill[k][q] = true; ++stored; }
        }
    }
    if (stored < target)
        throw std::runtime_error("random_spd_sparse: rotation budget exhausted before reaching density");

    // Assemble from the pattern, mirroring the lower triangle so symmetry is exact.
    std::vector<SparseMatrix::Triplet> t;
    t.reserve(stored);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j <= i; ++j)
            if (fill[i][j] || fill[j][i]) {
                t.push_back({i, j, w(i, j)});
                if (j != i) t.push_back({j, i, w(i, j)});
            }
    GeneratedProblem out;
    out.a = SparseMatrix::from_triplets(d, std::move(t));
    out.eigenvalues = lambda;
    out.achieved_density =
        static_cast<double>(out.a.nnz()) / (static_cast<double>(d) * static_cast<double>(d));
    return out;
}

SparseMatrix poisson2d(std::size_t grid) {
    if (grid == 0) throw std::invalid_argument("poisson2d: grid must be positive");
    const std::size_t d = grid * grid;
    std::vector<SparseMatrix::Triplet> t;
    auto idx = [grid](std::size_t i, std::size_t j) { return i * grid + j; };
    for (std::size_t i = 0; i < grid; ++i)
        for (std::size_t j = 0; j < grid; ++j) {
            const std::size_t row = idx(i, j);
            t.push_back({row, row, 4.0});
            if (i > 0) t.push_back({row, idx(i - 1, j), -1.0});
            if (i + 1 < grid) t.push_back({row, idx(i + 1, j), -1.0});
            if (j > 0) t.push_back({row, idx(i, j - 1), -1.0});
            if (j + 1 < grid) t.push_back({row, idx(i, j + 1), -1.0});
        }
    return SparseMatrix::from_triplets(d, std::move(t));
}

GeneratedProblem generate_problem(const ProblemConfig& config) {
    config.validate();
    if (config.kind == ProblemKind::SparseSpd) return random_spd_sparse(config);
    GeneratedProblem out;
    out.a = poisson2d(config.grid);
    out.achieved_density = static_cast<double>(out.a.nnz()) /
                           (static_cast<double>(out.a.dim()) * static_cast<double>(out.a.dim()));
    return out;
}

std::pair<Vector, Vector> draw_truth_and_rhs(const SparseMatrix& a, std::uint64_t seed) {
    Rng rng = Rng(seed).split(3);
    Vector x(a.dim());
    for (double& v : x) v = rng.next_gaussian();
    return {x, matvec(a, x)};
}

LinearSystem make_system(const ProblemConfig& config) {
    GeneratedProblem p = generate_problem(config);
    auto [x, b] = draw_truth_and_rhs(p.a, config.seed);
    return {std::move(p.a), std::move(b), std::move(x)};
}

void write_problem(const GeneratedProblem& problem, const ProblemConfig& config,
                   const std::filesystem::path& dir, const std::string& stem) {
    std::filesystem::create_directories(dir);
    write_matrix_market(problem.a, dir / (stem + ".mtx"), true);
    nlohmann::json meta;
    meta["family"] = config.kind == ProblemKind::SparseSpd ? "sparse_spd" : "poisson2d";
    meta["d"] = problem.a.dim();
    meta["seed"] = config.seed;
    if (config.kind == ProblemKind::SparseSpd) {
        meta["gamma"] = config.eig_rate;
        meta["density"] = config.density;
        meta["achieved_density"] = problem.achieved_density;
        meta["eigenvalues"] = problem.eigenvalues;
    } else {
        meta["grid"] = config.grid;
    }
    std::ofstream out(dir / (stem + ".json"));
    if (!out) throw std::runtime_error("cannot open sidecar for writing");
    out << meta.dump(2) << "\n";
}

}  // namespace bayescg
