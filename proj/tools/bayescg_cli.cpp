#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "bayescg/experiment.hpp"
#include "bayescg/matrix_market.hpp"
#include "bayescg/prior.hpp"
#include "bayescg/solver.hpp"
#include "bayescg/testgen.hpp"
#include "bayescg/uq.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitIterationCap = 2;

json load_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    json j;
    in >> j;
    return j;
}

struct SolveOptions {
    std::string matrix_path;
    std::string rhs_path;
    std::string prior_path;
    std::string mode = "sequential";
    std::size_t max_iter = 0;
    double tol = 1e-10;  // relative to ||b||
    bool hierarchical = false;
    std::string out_dir = ".";
};

int run_solve(const SolveOptions& opt) {
    auto a = bayescg::read_matrix_market_sparse(opt.matrix_path);
    if (bayescg::max_asymmetry(a) > 1e-10)
        throw std::runtime_error("matrix is not symmetric; the solver requires symmetry");
    auto b = bayescg::read_matrix_market_vector(opt.rhs_path);
    if (b.size() != a.dim())
        throw std::runtime_error("right-hand side length " + std::to_string(b.size()) +
                                 " does not match matrix dimension " + std::to_string(a.dim()));

    bayescg::PriorSpec spec;
    if (!opt.prior_path.empty()) spec = bayescg::PriorSpec::from_json(load_json(opt.prior_path));
    auto prior = bayescg::build_prior(spec, a, &b);

    bayescg::SolveConfig config;
    config.mode = bayescg::mode_from_name(opt.mode);
    config.max_iter = opt.max_iter;
    config.residual_tol = opt.tol * bayescg::norm2(b);
    config.record_directions = true;
    auto post = bayescg::bayescg(a, b, prior, config);

    fs::create_directories(opt.out_dir);
    auto j = bayescg::posterior_to_json(post, bayescg::mode_name(config.mode));
    j["prior"] = spec.to_json();
    if (opt.hierarchical) {
        auto t = bayescg::hierarchical_posterior(post);
        j["hierarchical"] = {{"dof", t.dof},
                             {"scale_factor", t.scale_factor},
                             {"ig_shape", t.ig_shape()},
                             {"ig_rate", t.ig_rate()}};
    }
    bayescg::write_text_file(fs::path(opt.out_dir) / "posterior.json", j.dump(2) + "\n");

    std::string csv = "# bayescg-residuals-1\nm,residual\n";
    for (std::size_t m = 0; m < post.residual_history.size(); ++m) {
        char buf[48];
        std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", m, post.residual_history[m]);
        csv += buf;
    }
    bayescg::write_text_file(fs::path(opt.out_dir) / "residuals.csv", csv);

    std::cout << "iterations: " << post.iterations << "\n"
              << "converged: " << (post.converged ? "yes" : "no") << "\n"
              << "residual: " << post.residual_history.back() << "\n"
              << "nu: " << post.nu << "\n"
              << "termination_sigma: " << bayescg::termination_sigma(post) << "\n";
    return post.converged ? kExitOk : kExitIterationCap;
}

bayescg::ExperimentConfig config_from_flags(const std::string& experiment,
                                            const std::string& config_path,
                                            const bayescg::ProblemConfig& problem,
                                            const std::vector<std::string>& prior_families,
                                            const std::string& mode, std::size_t iterations,
                                            std::size_t max_iter, std::size_t replicates,
                                            std::uint64_t seed, std::size_t threads,
                                            const std::string& out_dir) {
    bayescg::ExperimentConfig config;
    if (!config_path.empty()) {
        config = bayescg::ExperimentConfig::from_json(load_json(config_path));
        config.experiment = experiment;
        return config;
    }
    config.experiment = experiment;
    config.problem = problem;
    for (const auto& name : prior_families) {
        bayescg::PriorSpec spec;
        spec.family = bayescg::family_from_name(name);
        config.priors.push_back(spec);
    }
    config.mode = bayescg::mode_from_name(mode);
    config.iterations = iterations;
    config.max_iter = max_iter;
    config.replicates = replicates;
    config.master_seed = seed;
    config.threads = threads;
    config.out_dir = out_dir;
    config.validate();
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bayesian conjugate gradient solver and experiment driver"};
    app.require_subcommand(1);

    SolveOptions solve_opt;
    auto* solve = app.add_subcommand("solve", "solve one system and write the posterior");
    solve->add_option("--matrix", solve_opt.matrix_path, "system matrix (Matrix Market)")
        ->required();
    solve->add_option("--rhs", solve_opt.rhs_path, "right-hand side (Matrix Market)")->required();
    solve->add_option("--prior", solve_opt.prior_path, "prior spec JSON (default: identity)");
    solve->add_option("--mode", solve_opt.mode, "seq|batch|optimal (default seq)");
    solve->add_option("--max-iter", solve_opt.max_iter, "iteration cap (default: dimension)");
    solve->add_option("--tol", solve_opt.tol, "relative residual tolerance (default 1e-10)");
    solve->add_flag("--hierarchical", solve_opt.hierarchical,
                    "include the scale-marginalised posterior block");
    solve->add_option("--out", solve_opt.out_dir, "output directory (default .)");

    std::string config_path, mode = "batch", out_dir = ".";
    std::vector<std::string> prior_families;
    bayescg::ProblemConfig problem;
    std::size_t iterations = 10, max_iter = 0, replicates = 3, threads = 0, grid = 0;
    std::uint64_t seed = 0;
    bool half_convention = false;

    auto add_experiment_flags = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON experiment config (overrides flags)");
        cmd->add_option("--dim", problem.dim, "problem dimension");
        cmd->add_option("--density", problem.density, "target fill fraction");
        cmd->add_option("--eig-rate", problem.eig_rate, "spectrum exponential rate");
        cmd->add_option("--poisson-grid", grid, "use the 2d Poisson matrix on an n x n grid");
        cmd->add_option("--prior-family", prior_families,
                        "prior families to run (repeatable)");
        cmd->add_option("--mode", mode, "direction mode (default batch)");
        cmd->add_option("--iterations", iterations, "posterior iteration count m");
        cmd->add_option("--max-iter", max_iter, "iteration cap for convergence runs");
        cmd->add_option("--replicates", replicates, "replicate count");
        cmd->add_option("--seed", seed, "master seed");
        cmd->add_option("--threads", threads, "worker threads (default: hardware)");
        cmd->add_option("--out", out_dir, "output directory");
    };

    auto* convergence =
        app.add_subcommand("convergence", "per-iteration error study across priors and modes");
    add_experiment_flags(convergence);
    auto* uq = app.add_subcommand("uq", "calibration statistics for the posterior spread");
    add_experiment_flags(uq);
    auto* compare =
        app.add_subcommand("compare", "head-to-head with the matrix-inference method");
    add_experiment_flags(compare);
    compare->add_flag("--half-convention", half_convention,
                      "scale the equivalent prior by one half");

    bayescg::ProblemConfig gen_problem;
    std::string gen_out = ".", gen_stem = "problem";
    std::size_t gen_grid = 0;
    auto* generate = app.add_subcommand("generate", "write a test problem to disk");
    generate->add_option("--dim", gen_problem.dim, "dimension");
    generate->add_option("--density", gen_problem.density, "target fill fraction");
    generate->add_option("--eig-rate", gen_problem.eig_rate, "spectrum exponential rate");
    generate->add_option("--poisson-grid", gen_grid, "2d Poisson grid side");
    generate->add_option("--seed", gen_problem.seed, "generator seed");
    generate->add_option("--out", gen_out, "output directory");
    generate->add_option("--stem", gen_stem, "file stem");

    CLI11_PARSE(app, argc, argv);

    try {
        if (solve->parsed()) return run_solve(solve_opt);

        if (generate->parsed()) {
            if (gen_grid > 0) {
                gen_problem.kind = bayescg::ProblemKind::Poisson2D;
                gen_problem.grid = gen_grid;
            }
            gen_problem.validate();
            auto gen = bayescg::generate_problem(gen_problem);
            fs::create_directories(gen_out);
            bayescg::write_problem(gen, gen_problem, gen_out, gen_stem);
            auto [x_star, b] = bayescg::draw_truth_and_rhs(gen.a, gen_problem.seed);
            bayescg::write_matrix_market(b, fs::path(gen_out) / (gen_stem + "_b.mtx"));
            bayescg::write_matrix_market(x_star, fs::path(gen_out) / (gen_stem + "_x.mtx"));
            std::cout << "wrote " << gen_stem << ".mtx (d=" << gen.a.dim()
                      << ", density=" << gen.achieved_density << ")\n";
            return kExitOk;
        }

        for (auto* cmd : {convergence, uq, compare}) {
            if (!cmd->parsed()) continue;
            if (grid > 0) {
                problem.kind = bayescg::ProblemKind::Poisson2D;
                problem.grid = grid;
            }
            auto config = config_from_flags(cmd->get_name(), config_path, problem,
                                            prior_families, mode, iterations, max_iter,
                                            replicates, seed, threads, out_dir);
            if (cmd == compare) config.half_convention = half_convention;
            auto written = bayescg::run_experiment(config);
            for (const auto& path : written) std::cout << "wrote " << path.string() << "\n";
            return kExitOk;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
    return kExitError;
}
