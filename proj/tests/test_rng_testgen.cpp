#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "bayescg/eig.hpp"
#include "bayescg/matrix_market.hpp"
#include "bayescg/rng.hpp"
#include "bayescg/special_functions.hpp"
#include "bayescg/testgen.hpp"
#include "json.hpp"

using namespace bayescg;

TEST_CASE("rng streams are reproducible and split streams are independent of draw order") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

    Rng base(7);
    Rng s1 = base.split(1);
    // consuming draws from the base must not change what split produces
    for (int i = 0; i < 10; ++i) base.next_double();
    Rng s1_again = base.split(1);
    for (int i = 0; i < 50; ++i) CHECK(s1.next_u64() == s1_again.next_u64());

    Rng s2 = Rng(7).split(2);
    bool any_diff = false;
    Rng s1_b = Rng(7).split(1);
    for (int i = 0; i < 50; ++i) any_diff |= (s1_b.next_u64() != s2.next_u64());
    CHECK(any_diff);
}

TEST_CASE("gaussian sampler has correct moments and distribution") {
    Rng rng(1234);
    const int n = 200000;
    std::vector<double> xs(n);
    double mean = 0.0;
    for (auto& x : xs) {
        x = rng.next_gaussian();
        mean += x;
    }
    mean /= n;
    double var = 0.0, skew = 0.0;
    for (double x : xs) {
        var += (x - mean) * (x - mean);
        skew += std::pow(x - mean, 3);
    }
    var /= n - 1;
    skew /= n;
    CHECK(std::abs(mean) < 0.01);
    CHECK(var == doctest::Approx(1.0).epsilon(0.02));
    CHECK(std::abs(skew) < 0.03);

    // KS against the normal cdf
    auto normal_cdf = [](double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); };
    const double d = ks_statistic(xs, normal_cdf);
    CHECK(d < ks_critical_value(n, 0.01));
}

TEST_CASE("exponential sampler matches rate parameterization") {
    Rng rng(99);
    const int n = 100000;
    const double rate = 10.0;
    std::vector<double> xs(n);
    double mean = 0.0;
    for (auto& x : xs) {
        x = rng.next_exponential(rate);
        mean += x;
    }
    mean /= n;
    CHECK(mean == doctest::Approx(1.0 / rate).epsilon(0.02));
    auto exp_cdf = [rate](double x) { return 1.0 - std::exp(-rate * x); };
    CHECK(ks_statistic(xs, exp_cdf) < ks_critical_value(n, 0.01));
}

TEST_CASE("gamma sampler matches the gamma cdf for solver-relevant shapes") {
    Rng rng(7);
    const int n = 50000;
    for (double shape : {0.5, 2.5, 5.0}) {
        for (double rate : {1.0, 3.0}) {
            std::vector<double> xs(n);
            for (auto& x : xs) x = rng.next_gamma(shape, rate);
            auto cdf = [&](double x) { return regularized_gamma_p(shape, rate * x); };
            CHECK(ks_statistic(xs, cdf) < ks_critical_value(n, 0.01));
        }
    }
}

TEST_CASE("generated sparse SPD matrix preserves the drawn spectrum") {
    ProblemConfig cfg;
    cfg.dim = 60;
    cfg.density = 0.25;
    cfg.eig_rate = 10.0;
    cfg.seed = 2024;
    auto p = random_spd_sparse(cfg);

    CHECK(max_asymmetry(p.a) == 0.0);
    CHECK(p.achieved_density >= cfg.density);
    CHECK(p.achieved_density <= cfg.density + 0.05);

    auto eig = symmetric_eig(p.a.to_dense());
    Vector drawn = p.eigenvalues;
    std::sort(drawn.begin(), drawn.end(), std::greater<>());
    REQUIRE(eig.eigenvalues.size() == drawn.size());
    for (std::size_t i = 0; i < drawn.size(); ++i)
        CHECK(eig.eigenvalues[i] == doctest::Approx(drawn[i]).epsilon(1e-8));
    CHECK(eig.eigenvalues.back() > 0.0);
}

TEST_CASE("d=2 generation is a single rotation reaching full density") {
    ProblemConfig cfg;
    cfg.dim = 2;
    cfg.density = 0.75;
    cfg.seed = 5;
    auto p = random_spd_sparse(cfg);
    CHECK(p.a.nnz() == 4);
    auto eig = symmetric_eig(p.a.to_dense());
    Vector drawn = p.eigenvalues;
    std::sort(drawn.begin(), drawn.end(), std::greater<>());
    CHECK(eig.eigenvalues[0] == doctest::Approx(drawn[0]).epsilon(1e-12));
    CHECK(eig.eigenvalues[1] == doctest::Approx(drawn[1]).epsilon(1e-12));
}

TEST_CASE("dense path at full density also preserves the spectrum") {
    ProblemConfig cfg;
    cfg.dim = 40;
    cfg.density = 1.0;
    cfg.seed = 31;
    auto p = random_spd_sparse(cfg);
    CHECK(p.a.nnz() == 40 * 40);
    auto eig = symmetric_eig(p.a.to_dense());
    Vector drawn = p.eigenvalues;
    std::sort(drawn.begin(), drawn.end(), std::greater<>());
    for (std::size_t i = 0; i < drawn.size(); ++i)
        CHECK(eig.eigenvalues[i] == doctest::Approx(drawn[i]).epsilon(1e-8));
}

TEST_CASE("same seed reproduces the generated problem exactly") {
    ProblemConfig cfg;
    cfg.dim = 30;
    cfg.density = 0.3;
    cfg.seed = 77;
    auto p1 = random_spd_sparse(cfg);
    auto p2 = random_spd_sparse(cfg);
    REQUIRE(p1.a.nnz() == p2.a.nnz());
    CHECK(p1.a.values() == p2.a.values());
    CHECK(p1.a.col_indices() == p2.a.col_indices());

    auto [x1, b1] = draw_truth_and_rhs(p1.a, cfg.seed);
    auto [x2, b2] = draw_truth_and_rhs(p2.a, cfg.seed);
    CHECK(x1 == x2);
    CHECK(b1 == b2);
}

TEST_CASE("truth and rhs are consistent") {
    ProblemConfig cfg;
    cfg.dim = 25;
    cfg.density = 0.4;
    cfg.seed = 99;
    auto sys = make_system(cfg);
    REQUIRE(sys.x_star.has_value());
    auto ax = matvec(sys.a, *sys.x_star);
    for (std::size_t i = 0; i < sys.dim(); ++i)
        CHECK(ax[i] == doctest::Approx(sys.b[i]).epsilon(1e-12));
}

TEST_CASE("poisson2d stencil structure") {
    auto a1 = poisson2d(1);
    CHECK(a1.dim() == 1);
    CHECK(a1.coeff(0, 0) == 4.0);

    auto a2 = poisson2d(2);
    auto eig = symmetric_eig(a2.to_dense());
    // eigenvalues of the 2x2-grid Laplacian: 2, 4, 4, 6
    CHECK(eig.eigenvalues[0] == doctest::Approx(6.0).epsilon(1e-12));
    CHECK(eig.eigenvalues[1] == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(eig.eigenvalues[2] == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(eig.eigenvalues[3] == doctest::Approx(2.0).epsilon(1e-12));

    auto a4 = poisson2d(4);
    CHECK(a4.dim() == 16);
    CHECK(max_asymmetry(a4) == 0.0);
    // row sums: 4 - number of neighbours; zero only for interior nodes
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) {
            double sum = 0.0;
            for (double v : a4.row_values(i * 4 + j)) sum += v;
            const bool interior = i > 0 && i < 3 && j > 0 && j < 3;
            if (interior)
                CHECK(sum == 0.0);
            else
                CHECK(sum > 0.0);
        }
}

TEST_CASE("problem files carry matrix and generation metadata") {
    ProblemConfig cfg;
    cfg.dim = 20;
    cfg.density = 0.3;
    cfg.seed = 12;
    auto p = random_spd_sparse(cfg);
    auto dir = std::filesystem::temp_directory_path() / "bayescg_testgen";
    write_problem(p, cfg, dir, "prob");

    auto a = read_matrix_market_sparse(dir / "prob.mtx");
    CHECK(max_abs(subtract(a.to_dense(), p.a.to_dense())) == 0.0);

    std::ifstream meta_in(dir / "prob.json");
    auto meta = nlohmann::json::parse(meta_in);
    CHECK(meta["family"] == "sparse_spd");
    CHECK(meta["d"] == 20);
    CHECK(meta["gamma"] == 10.0);
    CHECK(meta["seed"] == 12);
    REQUIRE(meta["eigenvalues"].size() == 20);
    for (std::size_t i = 0; i < 20; ++i)
        CHECK(meta["eigenvalues"][i].get<double>() == p.eigenvalues[i]);
}

TEST_CASE("config validation rejects out-of-range parameters") {
    ProblemConfig cfg;
    cfg.dim = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.dim = 10;
    cfg.density = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.density = 1.5;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.density = 0.01;  // below 1/dim
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.density = 0.5;
    cfg.eig_rate = -1.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.eig_rate = 10.0;
    CHECK_NOTHROW(cfg.validate());

    ProblemConfig pcfg;
    pcfg.kind = ProblemKind::Poisson2D;
    pcfg.grid = 0;
    CHECK_THROWS_AS(pcfg.validate(), std::invalid_argument);
    pcfg.grid = 3;
    CHECK_NOTHROW(pcfg.validate());
}
