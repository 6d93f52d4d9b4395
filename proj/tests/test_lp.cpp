#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "meanrisk/errors.hpp"
#include "meanrisk/lp.hpp"

using namespace meanrisk;

namespace {

LinearProgram make_lp(std::vector<double> obj, std::vector<std::vector<double>> rows,
                      std::vector<RowSense> senses, std::vector<double> rhs,
                      std::vector<double> lower, std::vector<double> upper) {
    LinearProgram lp;
    lp.objective = std::move(obj);
    lp.rows = std::move(rows);
    lp.senses = std::move(senses);
    lp.rhs = std::move(rhs);
    lp.lower = std::move(lower);
    lp.upper = std::move(upper);
    return lp;
}

}  // namespace

TEST_CASE("min x subject to x >= 3") {
    const LinearProgram lp =
        make_lp({1.0}, {{1.0}}, {RowSense::ge}, {3.0}, {0.0}, {lp_inf});
    const LpSolution s = solve_lp(lp);
    REQUIRE(s.status == LpStatus::optimal);
    CHECK(s.x[0] == doctest::Approx(3.0));
    CHECK(s.objective_value == doctest::Approx(3.0));
}

TEST_CASE("unbounded detection") {
    const LinearProgram lp = make_lp({-1.0}, {}, {}, {}, {0.0}, {lp_inf});
    CHECK(solve_lp(lp).status == LpStatus::unbounded);
}

TEST_CASE("infeasible detection") {
    const LinearProgram lp = make_lp({1.0}, {{1.0}, {1.0}}, {RowSense::ge, RowSense::le},
                                     {3.0, 1.0}, {0.0}, {lp_inf});
    CHECK(solve_lp(lp).status == LpStatus::infeasible);
}

TEST_CASE("degenerate optimum on the simplex") {
    const LinearProgram lp = make_lp({1.0, 1.0}, {{1.0, 1.0}}, {RowSense::eq}, {1.0},
                                     {0.0, 0.0}, {lp_inf, lp_inf});
    const LpSolution s = solve_lp(lp);
    REQUIRE(s.status == LpStatus::optimal);
    CHECK(s.objective_value == doctest::Approx(1.0));
    CHECK(s.x[0] + s.x[1] == doctest::Approx(1.0));
}

TEST_CASE("free variables and negative bounds") {
    // min x + y s.t. x + y >= -4, x in [-10, 10], y free, y >= via row y >= -1.
    const LinearProgram lp =
        make_lp({1.0, 1.0}, {{1.0, 1.0}, {0.0, 1.0}}, {RowSense::ge, RowSense::ge}, {-4.0, -1.0},
                {-10.0, -lp_inf}, {10.0, lp_inf});
    const LpSolution s = solve_lp(lp);
    REQUIRE(s.status == LpStatus::optimal);
    CHECK(s.objective_value == doctest::Approx(-4.0));
    CHECK(feasibility_residual(lp, s.x) < 1e-8);
}

TEST_CASE("equality rows with upper bounds") {
    // min -2x - 3y s.t. x + y = 4, x <= 3, y <= 3.
    const LinearProgram lp = make_lp({-2.0, -3.0}, {{1.0, 1.0}}, {RowSense::eq}, {4.0},
                                     {0.0, 0.0}, {3.0, 3.0});
    const LpSolution s = solve_lp(lp);
    REQUIRE(s.status == LpStatus::optimal);
    CHECK(s.x[0] == doctest::Approx(1.0));
    CHECK(s.x[1] == doctest::Approx(3.0));
    CHECK(s.objective_value == doctest::Approx(-11.0));
}

TEST_CASE("warm-start re-solve over many objectives") {
    // Hexagon-like feasible set; sweep rotating objectives and compare against
    // fresh solves.
    LinearProgram lp;
    lp.objective = {0.0, 0.0};
    lp.lower = {-lp_inf, -lp_inf};
    lp.upper = {lp_inf, lp_inf};
    const std::vector<std::array<double, 3>> cuts{{1.0, 0.0, 2.0},  {0.0, 1.0, 2.0},
                                                  {-1.0, 0.0, 2.0}, {0.0, -1.0, 2.0},
                                                  {1.0, 1.0, 3.0},  {-1.0, -1.0, 3.0}};
    for (const auto& c : cuts) {
        lp.rows.push_back({c[0], c[1]});
        lp.senses.push_back(RowSense::le);
        lp.rhs.push_back(c[2]);
    }

    SimplexSolver warm(lp);
    for (int k = 0; k < 64; ++k) {
        const double ang = 2.0 * M_PI * static_cast<double>(k) / 64.0;
        const std::vector<double> obj{std::cos(ang), std::sin(ang)};
        const LpSolution a = warm.solve(obj);
        LinearProgram fresh = lp;
        fresh.objective = obj;
        const LpSolution b = solve_lp(fresh);
        REQUIRE(a.status == LpStatus::optimal);
        REQUIRE(b.status == LpStatus::optimal);
        CHECK(a.objective_value == doctest::Approx(b.objective_value).epsilon(1e-9));
    }
}

TEST_CASE("randomized instances stay feasible and deterministic") {
    std::mt19937_64 gen(42);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 4 + static_cast<int>(gen() % 4);
        const int m = 3 + static_cast<int>(gen() % 4);
        LinearProgram lp;
        lp.objective.resize(n);
        for (auto& c : lp.objective) c = u(gen);
        lp.lower.assign(n, 0.0);
        lp.upper.assign(n, 5.0);  // boxed, so never unbounded
        for (int r = 0; r < m; ++r) {
            std::vector<double> row(n);
            for (auto& a : row) a = u(gen);
            lp.rows.push_back(row);
            lp.senses.push_back(r % 2 == 0 ? RowSense::le : RowSense::ge);
            lp.rhs.push_back(u(gen) * 2.0);
        }
        const LpSolution s1 = solve_lp(lp);
        const LpSolution s2 = solve_lp(lp);
        CHECK(s1.status == s2.status);
        if (s1.status == LpStatus::optimal) {
            CHECK(s1.objective_value == s2.objective_value);  // bitwise determinism
            CHECK(feasibility_residual(lp, s1.x) < 1e-8);
            for (int j = 0; j < n; ++j) {
                CHECK(s1.x[static_cast<std::size_t>(j)] >= -1e-9);
                CHECK(s1.x[static_cast<std::size_t>(j)] <= 5.0 + 1e-9);
            }
        }
    }
}

TEST_CASE("validate rejects malformed programs") {
    LinearProgram lp = make_lp({1.0}, {{1.0, 2.0}}, {RowSense::ge}, {0.0}, {0.0}, {lp_inf});
    CHECK_THROWS_AS(lp.validate(), config_error);
    lp = make_lp({1.0}, {{1.0}}, {RowSense::ge}, {0.0}, {2.0}, {1.0});
    CHECK_THROWS_AS(lp.validate(), config_error);
    CHECK(!make_lp({1.0}, {{1.0}}, {RowSense::ge}, {0.0}, {0.0}, {lp_inf}).dump().empty());
}
