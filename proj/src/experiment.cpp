#include "bayescg/experiment.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "bayescg/hennig.hpp"
#include "bayescg/rng.hpp"
#include "bayescg/special_functions.hpp"

namespace bayescg {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// index-addressed worker pool; the body must only touch its own slot
void parallel_replicates(std::size_t n, std::size_t threads,
                         const std::function<void(std::size_t)>& body) {
    std::size_t nthreads =
        threads != 0 ? threads : std::max(1u, std::thread::hardware_concurrency());
    nthreads = std::min(nthreads, n);
    if (nthreads <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    for (std::size_t t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace

nlohmann::json problem_to_json(const ProblemConfig& config) {
    nlohmann::json j;
    j["kind"] = config.kind == ProblemKind::Poisson2D ? "poisson2d" : "sparse_spd";
    if (config.kind == ProblemKind::Poisson2D) {
        j["grid"] = config.grid;
    } else {
        j["dim"] = config.dim;
        j["density"] = config.density;
        j["eig_rate"] = config.eig_rate;
    }
    j["seed"] = config.seed;
    return j;
}

ProblemConfig problem_from_json(const nlohmann::json& j) {
    ProblemConfig config;
    const std::string kind = j.value("kind", "sparse_spd");
    if (kind == "poisson2d") {
        config.kind = ProblemKind::Poisson2D;
        config.grid = j.at("grid").get<std::size_t>();
    } else if (kind == "sparse_spd") {
        config.kind = ProblemKind::SparseSpd;
        config.dim = j.value("dim", config.dim);
        config.density = j.value("density", config.density);
        config.eig_rate = j.value("eig_rate", config.eig_rate);
    } else {
        throw std::invalid_argument("problem_from_json: unknown kind " + kind);
    }
    config.seed = j.value("seed", config.seed);
    config.validate();
    return config;
}

namespace {

std::vector<PriorSpec> default_convergence_priors() {
    std::vector<PriorSpec> priors(4);
    priors[0].family = PriorFamily::Identity;
    priors[1].family = PriorFamily::NaturalInverse;
    priors[2].family = PriorFamily::Preconditioner;
    priors[3].family = PriorFamily::Krylov;
    return priors;
}

std::vector<ConvergenceRow> convergence_replicate(const ConvergenceConfig& config,
                                                  std::size_t replicate,
                                                  std::uint64_t problem_seed) {
    ProblemConfig pc = config.problem;
    pc.seed = problem_seed;
    auto gen = generate_problem(pc);
    auto [x_star, b] = draw_truth_and_rhs(gen.a, problem_seed);
    const std::size_t d = gen.a.dim();
    const std::size_t cap = config.max_iter == 0 ? d : std::min(config.max_iter, d);

    std::vector<ConvergenceRow> rows;
    auto push = [&](const std::string& prior, const std::string& method, std::size_t m,
                    const Vector& x, double residual, double trace_ratio) {
        ConvergenceRow row;
        row.replicate = replicate;
        row.seed = problem_seed;
        row.prior = prior;
        row.method = method;
        row.m = m;
        row.error = norm2(subtract(x, x_star));
        row.residual = residual;
        row.trace_ratio = trace_ratio;
        rows.push_back(std::move(row));
    };

    if (config.include_cg) {
        auto cg = classical_cg(gen.a, b, zeros(d), cap, 0.0);
        for (std::size_t m = 0; m < cg.iterates.size(); ++m)
            push("none", "cg", m, cg.iterates[m], cg.residual_norms[m],
                 std::numeric_limits<double>::quiet_NaN());
    }

    const auto priors =
        config.priors.empty() ? default_convergence_priors() : config.priors;
    for (const auto& base_spec : priors) {
        auto spec = fill_krylov_oracle_params(base_spec, gen, x_star);
        auto prior = build_prior(spec, gen.a, &b);
        const double trace0 = prior.covariance->trace();
        for (auto mode : config.modes) {
            SolveConfig scfg;
            scfg.max_iter = cap;
            scfg.residual_tol = 0.0;
            scfg.mode = mode;
            scfg.record_iterates = true;
            auto post = bayescg(gen.a, b, prior, scfg);
            double removed = 0.0;
            for (std::size_t m = 0; m < post.iterates->size(); ++m) {
                if (m > 0 && m <= post.sigma_factor.cols()) {
                    const Vector col = post.sigma_factor.col(m - 1);
                    removed += dot(col, col);
                }
                push(family_name(spec.family), mode_name(mode), m, (*post.iterates)[m],
                     post.residual_history[m], (trace0 - removed) / trace0);
            }
        }
    }
    return rows;
}

}  // namespace

ConvergenceResult convergence_experiment(const ConvergenceConfig& config) {
    config.problem.validate();
    if (config.replicates == 0)
        throw std::invalid_argument("convergence: need at least one replicate");
    const Rng master(config.master_seed);
    std::vector<std::vector<ConvergenceRow>> per_replicate(config.replicates);
    parallel_replicates(config.replicates, config.threads, [&](std::size_t r) {
        per_replicate[r] = convergence_replicate(config, r, master.split(r + 1).seed());
    });
    ConvergenceResult result;
    for (auto& rows : per_replicate)
        for (auto& row : rows) result.rows.push_back(std::move(row));
    return result;
}

std::string convergence_csv(const ConvergenceResult& result) {
    std::string out = "# bayescg-convergence-1\n";
    out += "replicate,seed,prior,method,m,error,residual,trace_ratio\n";
    for (const auto& row : result.rows) {
        out += std::to_string(row.replicate) + ',' + std::to_string(row.seed) + ',' +
               row.prior + ',' + row.method + ',' + std::to_string(row.m) + ',' +
               fmt(row.error) + ',' + fmt(row.residual) + ',' + fmt(row.trace_ratio) + '\n';
    }
    return out;
}

namespace {

struct CompareReplicate {
    std::vector<CompareErrorRow> error_rows;
    CompareZRow z_row;
    double prior_trace_full = 0.0;
};

CompareReplicate compare_replicate(const CompareConfig& config, std::size_t replicate,
                                   std::uint64_t problem_seed) {
    ProblemConfig pc = config.problem;
    pc.seed = problem_seed;
    auto gen = generate_problem(pc);
    auto [x_star, b] = draw_truth_and_rhs(gen.a, problem_seed);
    const std::size_t d = gen.a.dim();
    const std::size_t m_max = std::min(config.iterations, d - 1);

    auto prior = equivalent_solution_prior(b, config.half_convention);
    SolveConfig scfg;
    scfg.max_iter = m_max;
    scfg.residual_tol = 0.0;
    scfg.mode = DirectionMode::Batch;
    scfg.record_directions = true;
    scfg.record_iterates = true;
    auto post = bayescg(gen.a, b, prior, scfg);

    CompareReplicate out;
    out.prior_trace_full = static_cast<double>(d + 1) * dot(b, b);

    auto a_dense = gen.a.to_dense();
    const auto identity = DenseMatrix::identity(d);
    std::vector<double> matrix_errors(m_max + 1, std::numeric_limits<double>::quiet_NaN());
    matrix_errors[0] = norm2(subtract(b, x_star));  // H_0 b = b
    MatrixPosterior final_mp;
    bool matrix_failed = false;
    for (std::size_t m = 1; m <= post.iterations; ++m) {
        auto s = post.directions->leading_cols(m);
        auto y = matmul(a_dense, s);
        try {
            auto mp = matrix_posterior(identity, identity, s, y);
            matrix_errors[m] = norm2(subtract(matvec(mp.h, b), x_star));
            if (m == post.iterations) final_mp = mp;
        } catch (const std::runtime_error&) {
            matrix_failed = true;
        }
    }

    for (std::size_t m = 0; m <= post.iterations; ++m) {
        CompareErrorRow row;
        row.replicate = replicate;
        row.seed = problem_seed;
        row.m = m;
        row.error_bayescg = norm2(subtract((*post.iterates)[m], x_star));
        row.error_matrix = matrix_errors[m];
        out.error_rows.push_back(row);
    }

    CompareZRow z;
    z.replicate = replicate;
    z.seed = problem_seed;
    z.z_bayescg = gaussian_z(post, x_star);
    if (!matrix_failed && final_mp.h.rows() == d) {
        auto proj = project_to_solution(final_mp, b);
        auto sub = covariance_subspace(proj.covariance, d - post.iterations);
        z.z_matrix = whitened_z(sub.basis, sub.scales, subtract(x_star, proj.mean));
    } else {
        z.matrix_failed = true;
        z.z_matrix = std::numeric_limits<double>::quiet_NaN();
    }
    out.z_row = z;
    return out;
}

}  // namespace

CompareResult compare_experiment(const CompareConfig& config) {
    config.problem.validate();
    if (config.replicates == 0)
        throw std::invalid_argument("compare: need at least one replicate");
    if (config.iterations == 0)
        throw std::invalid_argument("compare: need at least one iteration");
    const Rng master(config.master_seed);
    std::vector<CompareReplicate> reps(config.replicates);
    parallel_replicates(config.replicates, config.threads, [&](std::size_t r) {
        reps[r] = compare_replicate(config, r, master.split(r + 1).seed());
    });

    CompareResult result;
    double sum_b = 0.0, sum_m = 0.0, trace_full = 0.0;
    std::size_t n_matrix = 0;
    for (auto& rep : reps) {
        for (auto& row : rep.error_rows) result.error_rows.push_back(row);
        result.z_rows.push_back(rep.z_row);
        trace_full += rep.prior_trace_full;
        sum_b += rep.z_row.z_bayescg;
        if (rep.z_row.matrix_failed) {
            ++result.matrix_failures;
        } else {
            sum_m += rep.z_row.z_matrix;
            ++n_matrix;
        }
    }
    result.z_mean_bayescg = sum_b / static_cast<double>(reps.size());
    result.z_mean_matrix =
        n_matrix == 0 ? std::numeric_limits<double>::quiet_NaN()
                      : sum_m / static_cast<double>(n_matrix);
    const std::size_t d = config.problem.kind == ProblemKind::Poisson2D
                              ? config.problem.grid * config.problem.grid
                              : config.problem.dim;
    const std::size_t m = std::min(config.iterations, d - 1);
    result.chi2_first_percentile = chi2_quantile(0.01, static_cast<double>(d - m));
    result.prior_trace_full = trace_full / static_cast<double>(reps.size());
    result.prior_trace_half = 0.5 * result.prior_trace_full;
    return result;
}

std::string compare_error_csv(const CompareResult& result) {
    std::string out = "# bayescg-compare-errors-1\n";
    out += "replicate,seed,m,error_bayescg,error_matrix\n";
    for (const auto& row : result.error_rows) {
        out += std::to_string(row.replicate) + ',' + std::to_string(row.seed) + ',' +
               std::to_string(row.m) + ',' + fmt(row.error_bayescg) + ',' +
               fmt(row.error_matrix) + '\n';
    }
    return out;
}

std::string compare_z_csv(const CompareResult& result) {
    std::string out = "# bayescg-compare-z-1\n";
    out += "replicate,seed,z_bayescg,z_matrix,matrix_failed\n";
    for (const auto& row : result.z_rows) {
        out += std::to_string(row.replicate) + ',' + std::to_string(row.seed) + ',' +
               fmt(row.z_bayescg) + ',' + fmt(row.z_matrix) + ',' +
               (row.matrix_failed ? '1' : '0') + '\n';
    }
    return out;
}

nlohmann::json compare_summary_json(const CompareResult& result, const CompareConfig& config) {
    nlohmann::json j;
    j["replicates"] = config.replicates;
    j["iterations"] = config.iterations;
    j["z_mean_bayescg"] = result.z_mean_bayescg;
    if (std::isnan(result.z_mean_matrix))
        j["z_mean_matrix"] = nullptr;
    else
        j["z_mean_matrix"] = result.z_mean_matrix;
    j["chi2_first_percentile"] = result.chi2_first_percentile;
    j["matrix_failures"] = result.matrix_failures;
    j["prior_convention"] = config.half_convention ? "half" : "full";
    j["prior_trace_full"] = result.prior_trace_full;
    j["prior_trace_half"] = result.prior_trace_half;
    return j;
}

UqExperimentResult uq_experiment(const UqExperimentConfig& config) {
    if (config.priors.empty())
        throw std::invalid_argument("uq_experiment: need at least one prior");
    UqExperimentResult result;
    for (const auto& spec : config.priors) {
        CalibrationConfig run_config = config.base;
        run_config.prior = spec;
        result.runs.push_back(calibration_experiment(run_config));
    }
    return result;
}

void ExperimentConfig::validate() const {
    if (experiment != "convergence" && experiment != "uq" && experiment != "compare")
        throw std::invalid_argument("experiment must be convergence, uq, or compare");
    problem.validate();
    if (replicates == 0) throw std::invalid_argument("replicates must be at least 1");
    if ((experiment == "uq" || experiment == "compare") && iterations == 0)
        throw std::invalid_argument("iterations must be at least 1");
}

nlohmann::json ExperimentConfig::to_json() const {
    nlohmann::json j;
    j["experiment"] = experiment;
    j["problem"] = problem_to_json(problem);
    auto priors_json = nlohmann::json::array();
    for (const auto& spec : priors) priors_json.push_back(spec.to_json());
    j["priors"] = priors_json;
    j["mode"] = mode_name(mode);
    j["iterations"] = iterations;
    j["max_iter"] = max_iter;
    j["replicates"] = replicates;
    j["seed"] = master_seed;
    j["threads"] = threads;
    j["out"] = out_dir.string();
    j["half_convention"] = half_convention;
    return j;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
    ExperimentConfig config;
    config.experiment = j.at("experiment").get<std::string>();
    if (j.contains("problem")) config.problem = problem_from_json(j.at("problem"));
    if (j.contains("priors"))
        for (const auto& p : j.at("priors")) config.priors.push_back(PriorSpec::from_json(p));
    if (j.contains("mode")) config.mode = mode_from_name(j.at("mode").get<std::string>());
    config.iterations = j.value("iterations", config.iterations);
    config.max_iter = j.value("max_iter", config.max_iter);
    config.replicates = j.value("replicates", config.replicates);
    config.master_seed = j.value("seed", config.master_seed);
    config.threads = j.value("threads", config.threads);
    if (j.contains("out")) config.out_dir = j.at("out").get<std::string>();
    config.half_convention = j.value("half_convention", config.half_convention);
    config.validate();
    return config;
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    out << content;
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<std::filesystem::path> run_experiment(const ExperimentConfig& config) {
    config.validate();
    std::filesystem::create_directories(config.out_dir);
    std::vector<std::filesystem::path> written;

    if (config.experiment == "convergence") {
        ConvergenceConfig cc;
        cc.problem = config.problem;
        cc.priors = config.priors;
        cc.max_iter = config.max_iter;
        cc.replicates = config.replicates;
        cc.master_seed = config.master_seed;
        cc.threads = config.threads;
        auto result = convergence_experiment(cc);
        auto path = config.out_dir / "convergence.csv";
        write_text_file(path, convergence_csv(result));
        written.push_back(path);
    } else if (config.experiment == "uq") {
        UqExperimentConfig uc;
        uc.base.problem = config.problem;
        uc.base.iterations = config.iterations;
        uc.base.mode = config.mode;
        uc.base.replicates = config.replicates;
        uc.base.master_seed = config.master_seed;
        uc.base.threads = config.threads;
        uc.priors = config.priors;
        if (uc.priors.empty()) uc.priors.emplace_back();  // identity
        auto result = uq_experiment(uc);
        auto summaries = nlohmann::json::array();
        for (const auto& run : result.runs) {
            auto gpath = config.out_dir / ("uq_" + run.gaussian.label + "_gaussian.csv");
            auto tpath = config.out_dir / ("uq_" + run.student_t.label + "_t.csv");
            write_text_file(gpath, run.gaussian.to_csv());
            write_text_file(tpath, run.student_t.to_csv());
            written.push_back(gpath);
            written.push_back(tpath);
            summaries.push_back({{"gaussian", run.gaussian.summary_json()},
                                 {"student_t", run.student_t.summary_json()}});
        }
        auto spath = config.out_dir / "uq_summary.json";
        write_text_file(spath, summaries.dump(2) + "\n");
        written.push_back(spath);
    } else {
        CompareConfig cc;
        cc.problem = config.problem;
        cc.iterations = config.iterations;
        cc.replicates = config.replicates;
        cc.master_seed = config.master_seed;
        cc.threads = config.threads;
        cc.half_convention = config.half_convention;
        auto result = compare_experiment(cc);
        auto epath = config.out_dir / "compare_errors.csv";
        auto zpath = config.out_dir / "compare_z.csv";
        auto spath = config.out_dir / "compare_summary.json";
        write_text_file(epath, compare_error_csv(result));
        write_text_file(zpath, compare_z_csv(result));
        write_text_file(spath, compare_summary_json(result, cc).dump(2) + "\n");
        written.push_back(epath);
        written.push_back(zpath);
        written.push_back(spath);
    }
    return written;
}

}  // namespace bayescg
