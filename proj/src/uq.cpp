#include "bayescg/uq.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "bayescg/eig.hpp"
#include "bayescg/rng.hpp"

namespace bayescg {

UncertainSubspace covariance_subspace(const DenseMatrix& cov, std::size_t expected_rank) {
    auto svd = svd_psd(cov);

    const double smax = svd.singular_values.empty() ? 0.0 : svd.singular_values.front();
    double min_eig = 0.0;
    for (double e : svd.raw_eigenvalues) min_eig = std::min(min_eig, e);
    if (min_eig < -1e-6 * (1.0 + smax))
        throw std::runtime_error(
            "posterior covariance is indefinite (eigenvalue " + std::to_string(min_eig) + ")");

    std::size_t rank = 0;
    for (double s : svd.singular_values)
        if (s > 1e-8 * smax && s > 0.0) ++rank;

    UncertainSubspace sub;
    sub.expected_rank = expected_rank;
    sub.rank_mismatch = rank != expected_rank;
    sub.min_eigenvalue = min_eig;
    sub.basis = svd.u.leading_cols(rank);
    sub.scales.assign(svd.singular_values.begin(), svd.singular_values.begin() + rank);
    return sub;
}

UncertainSubspace uncertain_subspace(const GaussianPosterior& post) {
    const std::size_t d = post.dim();
    return covariance_subspace(post.posterior_covariance(), d - std::min(post.iterations, d));
}

double whitened_z(const DenseMatrix& basis, const Vector& scales, const Vector& diff) {
    if (basis.cols() != scales.size())
        throw std::invalid_argument("whitened_z: basis/scale size mismatch");
    double z = 0.0;
    for (std::size_t j = 0; j < scales.size(); ++j) {
        double c = 0.0;
        for (std::size_t i = 0; i < basis.rows(); ++i) c += basis(i, j) * diff[i];
        z += c * c / scales[j];
    }
    return z;
}

double gaussian_z(const GaussianPosterior& post, const Vector& x_star) {
    require_same_size(post.mean, x_star, "gaussian_z");
    auto sub = uncertain_subspace(post);
    return whitened_z(sub.basis, sub.scales, subtract(x_star, post.mean));
}

double t_z(const TPosterior& post, const Vector& x_star) {
    const std::size_t d = post.location.size();
    if (post.dof == 0 || post.dof >= d)
        throw std::invalid_argument("t_z: degrees of freedom must be in [1, d)");
    if (!(post.scale_factor > 0.0))
        throw std::invalid_argument("t_z: degenerate scale");
    const double z = gaussian_z(post.base, x_star);
    return z / (post.scale_factor * static_cast<double>(d - post.dof));
}

std::vector<Vector> sample_posterior(const GaussianPosterior& post, std::size_t n,
                                     std::uint64_t seed) {
    auto sub = uncertain_subspace(post);
    Rng rng(seed);
    std::vector<Vector> samples;
    samples.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        Vector x = post.mean;
        for (std::size_t j = 0; j < sub.rank(); ++j)
            axpy(std::sqrt(sub.scales[j]) * rng.next_gaussian(), sub.basis.col(j), x);
        samples.push_back(std::move(x));
    }
    return samples;
}

double CalibrationReport::reference_cdf(double z) const {
    if (reference == ReferenceDistribution::ChiSquared)
        return chi2_cdf(z, dof1);
    return f_cdf(z, dof1, dof2);
}

namespace {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

std::string CalibrationReport::to_csv() const {
    std::string out = "# bayescg-calibration-1\n";
    out += "replicate,seed,z,reference_cdf\n";
    for (std::size_t i = 0; i < statistics.size(); ++i) {
        out += std::to_string(i) + ',' + std::to_string(seeds[i]) + ',' +
               format_double(statistics[i]) + ',' + format_double(reference_cdf(statistics[i])) +
               '\n';
    }
    return out;
}

nlohmann::json CalibrationReport::summary_json() const {
    nlohmann::json j;
    j["label"] = label;
    j["reference"] =
        reference == ReferenceDistribution::ChiSquared ? "chi_squared" : "f_ratio";
    j["dof"] = reference == ReferenceDistribution::ChiSquared
                   ? nlohmann::json::array({dof1})
                   : nlohmann::json::array({dof1, dof2});
    j["replicates"] = statistics.size();
    j["psd_failures"] = psd_failures;
    j["rank_mismatches"] = rank_mismatches;
    if (ks.has_value()) {
        j["ks"] = *ks;
        j["ks_critical_1pct"] = ks_critical_value(statistics.size(), 0.01);
    } else {
        j["ks"] = nullptr;
    }
    j["mean"] = empirical_mean;
    j["variance"] = empirical_variance;
    return j;
}

void finalize_report(CalibrationReport& report) {
    const auto& z = report.statistics;
    if (z.empty()) return;
    double sum = 0.0;
    for (double v : z) sum += v;
    report.empirical_mean = sum / static_cast<double>(z.size());
    if (z.size() > 1) {
        double ss = 0.0;
        for (double v : z) {
            const double c = v - report.empirical_mean;
            ss += c * c;
        }
        report.empirical_variance = ss / static_cast<double>(z.size() - 1);
    }
    if (z.size() >= 10)
        report.ks = ks_statistic(z, [&report](double x) { return report.reference_cdf(x); });
}

PriorSpec fill_krylov_oracle_params(PriorSpec spec, const GeneratedProblem& gen,
                                    const Vector& x_star) {
    if (spec.family != PriorFamily::Krylov) return spec;
    if (!spec.krylov.xi.has_value() && !gen.eigenvalues.empty()) {
        double lo = gen.eigenvalues[0], hi = gen.eigenvalues[0];
        for (double e : gen.eigenvalues) {
            lo = std::min(lo, e);
            hi = std::max(hi, e);
        }
        const double kappa = hi / lo;
        if (kappa > 1.0) spec.krylov.xi = (kappa - 1.0) / (kappa + 1.0);
    }
    if (!spec.krylov.sigma_scale.has_value())
        spec.krylov.sigma_scale = std::sqrt(dot(x_star, matvec(gen.a, x_star)));
    return spec;
}

namespace {

struct ReplicateRow {
    std::uint64_t seed = 0;
    double z_gauss = 0.0;
    double z_t = 0.0;
    bool ok = false;
    bool psd_failure = false;
    bool rank_mismatch = false;
};

ReplicateRow run_replicate(const CalibrationConfig& config, std::uint64_t problem_seed) {
    ReplicateRow row;
    row.seed = problem_seed;

    ProblemConfig pc = config.problem;
    pc.seed = problem_seed;
    auto gen = generate_problem(pc);
    auto [x_star, b] = draw_truth_and_rhs(gen.a, problem_seed);

    auto prior = build_prior(fill_krylov_oracle_params(config.prior, gen, x_star), gen.a, &b);

    SolveConfig scfg;
    scfg.max_iter = config.iterations;
    scfg.residual_tol = 0.0;
    scfg.mode = config.mode;
    auto post = bayescg(gen.a, b, prior, scfg);

    try {
        auto sub = uncertain_subspace(post);
        row.z_gauss = whitened_z(sub.basis, sub.scales, subtract(x_star, post.mean));
        row.rank_mismatch = sub.rank_mismatch;
    } catch (const std::runtime_error&) {
        row.psd_failure = true;
        return row;
    }
    const auto t = hierarchical_posterior(post);
    row.z_t = row.z_gauss /
              (t.scale_factor * static_cast<double>(gen.a.dim() - post.iterations));
    row.ok = true;
    return row;
}

}  // namespace

CalibrationRun calibration_experiment(const CalibrationConfig& config) {
    config.problem.validate();
    if (config.replicates == 0)
        throw std::invalid_argument("calibration: need at least one replicate");
    const std::size_t d = config.problem.kind == ProblemKind::Poisson2D
                              ? config.problem.grid * config.problem.grid
                              : config.problem.dim;
    if (config.iterations == 0 || config.iterations >= d)
        throw std::invalid_argument("calibration: iteration count must be in [1, d)");

    const Rng master(config.master_seed);
    std::vector<ReplicateRow> rows(config.replicates);
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto worker = [&]() {
        for (;;) {
            const std::size_t r = next.fetch_add(1);
            if (r >= config.replicates) return;
            try {
                rows[r] = run_replicate(config, master.split(r + 1).seed());
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                return;
            }
        }
    };

    std::size_t nthreads = config.threads != 0
                               ? config.threads
                               : std::max(1u, std::thread::hardware_concurrency());
    nthreads = std::min(nthreads, config.replicates);
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    for (std::size_t t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);

    CalibrationRun run;
    const std::string label =
        family_name(config.prior.family) + "-" + mode_name(config.mode);
    run.gaussian.label = label;
    run.gaussian.reference = ReferenceDistribution::ChiSquared;
    run.gaussian.dof1 = d - config.iterations;
    run.student_t.label = label;
    run.student_t.reference = ReferenceDistribution::FRatio;
    run.student_t.dof1 = d - config.iterations;
    run.student_t.dof2 = config.iterations;

    for (const auto& row : rows) {
        if (row.psd_failure) {
            ++run.gaussian.psd_failures;
            ++run.student_t.psd_failures;
            continue;
        }
        if (row.rank_mismatch) {
            ++run.gaussian.rank_mismatches;
            ++run.student_t.rank_mismatches;
        }
        run.gaussian.seeds.push_back(row.seed);
        run.gaussian.statistics.push_back(row.z_gauss);
        run.student_t.seeds.push_back(row.seed);
        run.student_t.statistics.push_back(row.z_t);
    }
    finalize_report(run.gaussian);
    finalize_report(run.student_t);
    return run;
}

}  // namespace bayescg
