#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "bayescg/experiment.hpp"
#include "bayescg/special_functions.hpp"

using namespace bayescg;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("bayescg_test_" + tag + "_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

int run_cli(const std::string& args) {
    std::string cmd = std::string(BAYESCG_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    int rc = std::system(cmd.c_str());
    REQUIRE(WIFEXITED(rc));
    return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    REQUIRE(in.good());
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

ConvergenceConfig small_grid_config() {
    ConvergenceConfig cc;
    cc.problem.dim = 24;
    cc.problem.density = 0.3;
    cc.problem.eig_rate = 0.5;
    cc.problem.seed = 3;
    PriorSpec identity;
    PriorSpec natural;
    natural.family = PriorFamily::NaturalInverse;
    cc.priors = {identity, natural};
    cc.modes = {DirectionMode::Sequential, DirectionMode::Batch};
    cc.max_iter = 8;
    cc.replicates = 2;
    cc.master_seed = 17;
    cc.threads = 1;
    return cc;
}

using ComboKey = std::pair<std::string, std::string>;  // prior, method

std::map<ComboKey, std::vector<ConvergenceRow>> by_combo(const ConvergenceResult& result,
                                                         std::size_t replicate) {
    std::map<ComboKey, std::vector<ConvergenceRow>> grouped;
    for (const auto& row : result.rows)
        if (row.replicate == replicate) grouped[{row.prior, row.method}].push_back(row);
    return grouped;
}

}  // namespace

TEST_CASE("problem config survives the json round trip") {
    ProblemConfig pc;
    pc.dim = 48;
    pc.density = 0.25;
    pc.eig_rate = 0.75;
    pc.seed = 99;
    auto back = problem_from_json(problem_to_json(pc));
    CHECK(back.kind == ProblemKind::SparseSpd);
    CHECK(back.dim == 48);
    CHECK(back.density == doctest::Approx(0.25));
    CHECK(back.eig_rate == doctest::Approx(0.75));
    CHECK(back.seed == 99);

    ProblemConfig grid;
    grid.kind = ProblemKind::Poisson2D;
    grid.grid = 6;
    grid.dim = 36;
    grid.seed = 4;
    auto gback = problem_from_json(problem_to_json(grid));
    CHECK(gback.kind == ProblemKind::Poisson2D);
    CHECK(gback.grid == 6);
    CHECK(gback.seed == 4);
}

TEST_CASE("experiment config survives the json round trip and validates") {
    ExperimentConfig cfg;
    cfg.experiment = "uq";
    cfg.problem.dim = 30;
    cfg.problem.density = 0.4;
    cfg.problem.seed = 12;
    PriorSpec krylov;
    krylov.family = PriorFamily::Krylov;
    krylov.krylov.subspace_dim = 5;
    krylov.krylov.xi = 0.5;
    krylov.krylov.sigma_scale = 2.0;
    cfg.priors = {PriorSpec{}, krylov};
    cfg.mode = DirectionMode::Optimal;
    cfg.iterations = 6;
    cfg.replicates = 40;
    cfg.master_seed = 77;
    cfg.out_dir = "/tmp/somewhere";
    cfg.half_convention = true;

    auto back = ExperimentConfig::from_json(cfg.to_json());
    CHECK(back.experiment == "uq");
    CHECK(back.problem.dim == 30);
    REQUIRE(back.priors.size() == 2);
    CHECK(back.priors[0].family == PriorFamily::Identity);
    CHECK(back.priors[1].family == PriorFamily::Krylov);
    CHECK(back.priors[1].krylov.subspace_dim == 5);
    REQUIRE(back.priors[1].krylov.xi.has_value());
    CHECK(*back.priors[1].krylov.xi == doctest::Approx(0.5));
    CHECK(back.mode == DirectionMode::Optimal);
    CHECK(back.iterations == 6);
    CHECK(back.replicates == 40);
    CHECK(back.master_seed == 77);
    CHECK(back.out_dir == fs::path("/tmp/somewhere"));
    CHECK(back.half_convention);
    CHECK_NOTHROW(back.validate());

    ExperimentConfig bad = cfg;
    bad.experiment = "nonsense";
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    ExperimentConfig zero_iter = cfg;
    zero_iter.iterations = 0;
    CHECK_THROWS_AS(zero_iter.validate(), std::invalid_argument);
}

TEST_CASE("convergence grid covers classical cg and every prior x mode combination") {
    auto result = convergence_experiment(small_grid_config());

    for (std::size_t rep = 0; rep < 2; ++rep) {
        auto grouped = by_combo(result, rep);
        std::set<ComboKey> expected{{"none", "cg"},
                                    {"identity", "sequential"},
                                    {"identity", "batch"},
                                    {"natural_inverse", "sequential"},
                                    {"natural_inverse", "batch"}};
        REQUIRE(grouped.size() == expected.size());
        for (const auto& key : expected) REQUIRE(grouped.count(key) == 1);

        double initial = grouped[{"none", "cg"}].front().error;
        CHECK(initial > 0.0);
        for (auto& [key, rows] : grouped) {
            REQUIRE(rows.size() == 9);  // m = 0..8
            for (std::size_t i = 0; i < rows.size(); ++i) CHECK(rows[i].m == i);
            // every run starts from x0 = 0, so the m = 0 error is shared
            CHECK(rows.front().error == doctest::Approx(initial).epsilon(1e-12));
            CHECK(rows.back().error < initial);
        }
        CHECK(grouped[{"natural_inverse", "batch"}].back().error < 0.5 * initial);
    }
}

TEST_CASE("natural inverse prior reproduces the classical cg iterates") {
    auto result = convergence_experiment(small_grid_config());
    for (std::size_t rep = 0; rep < 2; ++rep) {
        auto grouped = by_combo(result, rep);
        const auto& cg = grouped[{"none", "cg"}];
        const auto& natural = grouped[{"natural_inverse", "sequential"}];
        REQUIRE(cg.size() == natural.size());
        for (std::size_t i = 0; i < cg.size(); ++i)
            CHECK(natural[i].error == doctest::Approx(cg[i].error).epsilon(1e-6));
    }
}

TEST_CASE("posterior trace ratio starts at one and contracts monotonically") {
    auto result = convergence_experiment(small_grid_config());
    auto grouped = by_combo(result, 0);
    for (auto& [key, rows] : grouped) {
        if (key.second == "cg") {
            for (const auto& row : rows) CHECK(std::isnan(row.trace_ratio));
            continue;
        }
        CHECK(rows.front().trace_ratio == doctest::Approx(1.0).epsilon(1e-12));
        for (std::size_t i = 1; i < rows.size(); ++i) {
            CHECK(rows[i].trace_ratio <= rows[i - 1].trace_ratio + 1e-8);
            CHECK(rows[i].trace_ratio >= -1e-8);
        }
    }
}

TEST_CASE("convergence csv carries its schema line and one row per grid point") {
    auto result = convergence_experiment(small_grid_config());
    auto csv = convergence_csv(result);
    REQUIRE(csv.rfind("# bayescg-convergence-1\n", 0) == 0);
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);  // schema
    std::getline(in, line);
    CHECK(line == "replicate,seed,prior,method,m,error,residual,trace_ratio");
    std::size_t rows = 0;
    while (std::getline(in, line))
        if (!line.empty()) ++rows;
    CHECK(rows == result.rows.size());
    CHECK(rows == 2 * 5 * 9);  // replicates x combos x iterations
}

TEST_CASE("convergence experiment is thread count invariant") {
    auto cc = small_grid_config();
    cc.threads = 1;
    auto serial = convergence_experiment(cc);
    cc.threads = 3;
    auto parallel = convergence_experiment(cc);
    REQUIRE(serial.rows.size() == parallel.rows.size());
    for (std::size_t i = 0; i < serial.rows.size(); ++i) {
        const auto& a = serial.rows[i];
        const auto& b = parallel.rows[i];
        CHECK(a.replicate == b.replicate);
        CHECK(a.prior == b.prior);
        CHECK(a.method == b.method);
        CHECK(a.m == b.m);
        CHECK(a.error == b.error);
        CHECK(a.residual == b.residual);
        // NaN for cg rows, so compare via bit pattern semantics
        CHECK((a.trace_ratio == b.trace_ratio ||
               (std::isnan(a.trace_ratio) && std::isnan(b.trace_ratio))));
    }
}

TEST_CASE("head-to-head comparison run is internally consistent") {
    CompareConfig cc;
    cc.problem.dim = 30;
    cc.problem.density = 0.3;
    cc.problem.eig_rate = 0.1;
    cc.problem.seed = 7;
    cc.iterations = 5;
    cc.replicates = 4;
    cc.master_seed = 21;
    cc.threads = 1;
    auto result = compare_experiment(cc);

    CHECK(result.matrix_failures == 0);
    REQUIRE(result.z_rows.size() == 4);
    REQUIRE(result.error_rows.size() == 4 * 6);  // m = 0..5 per replicate
    for (const auto& row : result.error_rows) {
        CHECK(std::isfinite(row.error_bayescg));
        CHECK(std::isfinite(row.error_matrix));
        // both methods start from the same projected prior mean x0 = b
        if (row.m == 0)
            CHECK(row.error_bayescg == doctest::Approx(row.error_matrix).epsilon(1e-9));
    }
    for (const auto& row : result.z_rows) {
        CHECK(row.z_bayescg >= 0.0);
        CHECK(row.z_matrix >= 0.0);
        CHECK_FALSE(row.matrix_failed);
    }
    CHECK(result.chi2_first_percentile ==
          doctest::Approx(chi2_quantile(0.01, 25.0)).epsilon(1e-9));
    CHECK(result.prior_trace_full == doctest::Approx(2.0 * result.prior_trace_half));

    auto ecsv = compare_error_csv(result);
    auto zcsv = compare_z_csv(result);
    CHECK(ecsv.rfind("# bayescg-compare-errors-1\n", 0) == 0);
    CHECK(zcsv.rfind("# bayescg-compare-z-1\n", 0) == 0);

    auto summary = compare_summary_json(result, cc);
    for (const char* key : {"z_mean_bayescg", "z_mean_matrix", "chi2_first_percentile",
                            "matrix_failures", "prior_convention", "prior_trace_full",
                            "prior_trace_half", "replicates", "iterations"})
        CHECK(summary.contains(key));
}

TEST_CASE("run_experiment writes the files it reports") {
    TempDir tmp("runexp");

    ExperimentConfig conv;
    conv.experiment = "convergence";
    conv.problem.dim = 16;
    conv.problem.density = 0.4;
    conv.problem.seed = 5;
    PriorSpec identity;
    conv.priors = {identity};
    conv.max_iter = 5;
    conv.replicates = 1;
    conv.threads = 1;
    conv.out_dir = tmp.path / "conv";
    auto conv_files = run_experiment(conv);
    REQUIRE(conv_files.size() == 1);
    CHECK(conv_files[0].filename() == "convergence.csv");
    CHECK(slurp(conv_files[0]).rfind("# bayescg-convergence-1\n", 0) == 0);

    ExperimentConfig uq = conv;
    uq.experiment = "uq";
    uq.iterations = 4;
    uq.replicates = 15;
    uq.out_dir = tmp.path / "uq";
    auto uq_files = run_experiment(uq);
    REQUIRE(uq_files.size() == 3);
    CHECK(uq_files[0].filename() == "uq_identity-batch_gaussian.csv");
    CHECK(uq_files[1].filename() == "uq_identity-batch_t.csv");
    CHECK(uq_files[2].filename() == "uq_summary.json");
    auto summary = nlohmann::json::parse(slurp(uq_files[2]));
    REQUIRE(summary.is_array());
    REQUIRE(summary.size() == 1);
    CHECK(summary[0]["gaussian"]["replicates"] == 15);
    CHECK(summary[0]["student_t"]["reference"] == "f_ratio");

    ExperimentConfig cmp = conv;
    cmp.experiment = "compare";
    cmp.problem.eig_rate = 0.1;
    cmp.iterations = 4;
    cmp.replicates = 3;
    cmp.out_dir = tmp.path / "cmp";
    auto cmp_files = run_experiment(cmp);
    REQUIRE(cmp_files.size() == 3);
    for (const auto& f : cmp_files) CHECK(fs::exists(f));
    auto cmp_summary = nlohmann::json::parse(slurp(cmp_files[2]));
    CHECK(cmp_summary["replicates"] == 3);
    CHECK(std::isfinite(cmp_summary["z_mean_matrix"].get<double>()));
}

TEST_CASE("cli generates, solves, and runs experiments end to end") {
    TempDir tmp("cli");
    const std::string dir = tmp.path.string();

    CHECK(run_cli("generate --dim 16 --density 0.4 --eig-rate 0.5 --seed 5 --out " + dir +
                  " --stem p16") == 0);
    for (const char* name : {"p16.mtx", "p16.json", "p16_b.mtx", "p16_x.mtx"})
        CHECK(fs::exists(tmp.path / name));

    CHECK(run_cli("solve --matrix " + dir + "/p16.mtx --rhs " + dir +
                  "/p16_b.mtx --mode batch --tol 1e-8 --out " + dir + "/run") == 0);
    auto posterior = nlohmann::json::parse(slurp(tmp.path / "run/posterior.json"));
    CHECK(posterior["schema"] == "bayescg-posterior-1");
    CHECK(posterior["converged"] == true);
    CHECK(posterior["d"] == 16);
    CHECK(slurp(tmp.path / "run/residuals.csv").rfind("# bayescg-residuals-1\n", 0) == 0);

    // iteration cap reached before the tolerance: distinct exit code
    CHECK(run_cli("solve --matrix " + dir + "/p16.mtx --rhs " + dir +
                  "/p16_b.mtx --max-iter 2 --tol 1e-14 --out " + dir + "/capped") == 2);

    // missing required flag
    CHECK(run_cli("solve --matrix " + dir + "/p16.mtx") != 0);

    CHECK(run_cli("compare --dim 24 --density 0.3 --eig-rate 0.1 --iterations 4 "
                  "--replicates 3 --seed 9 --out " + dir + "/cmp") == 0);
    auto cmp = nlohmann::json::parse(slurp(tmp.path / "cmp/compare_summary.json"));
    CHECK(std::isfinite(cmp["z_mean_bayescg"].get<double>()));
    CHECK(std::isfinite(cmp["z_mean_matrix"].get<double>()));

    CHECK(run_cli("uq --dim 20 --density 0.3 --prior-family identity --iterations 4 "
                  "--replicates 12 --seed 13 --threads 2 --out " + dir + "/uq") == 0);
    CHECK(fs::exists(tmp.path / "uq/uq_identity-batch_gaussian.csv"));
    CHECK(fs::exists(tmp.path / "uq/uq_summary.json"));

    CHECK(run_cli("convergence --dim 16 --density 0.4 --prior-family identity "
                  "--prior-family natural_inverse --max-iter 6 --replicates 2 --seed 3 "
                  "--out " + dir + "/conv") == 0);
    CHECK(slurp(tmp.path / "conv/convergence.csv").rfind("# bayescg-convergence-1\n", 0) == 0);
}
