#pragma once

#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace meanrisk {

inline constexpr double lp_inf = std::numeric_limits<double>::infinity();

enum class RowSense { le, eq, ge };

struct LinearProgram {
    std::vector<double> objective;          // n
    std::vector<std::vector<double>> rows;  // m x n
    std::vector<RowSense> senses;           // m
    std::vector<double> rhs;                // m
    std::vector<double> lower;              // n, -inf allowed
    std::vector<double> upper;              // n, +inf allowed

    std::size_t num_vars() const { return objective.size(); }
    std::size_t num_rows() const { return rows.size(); }
    void validate() const;

    // LP text format dump for debugging.
    std::string dump() const;
};

enum class LpStatus { optimal, infeasible, unbounded };

struct LpSolution {
    LpStatus status = LpStatus::infeasible;
    std::vector<double> x;
    double objective_value = 0.0;
};

// Dense two-phase primal simplex over a fixed constraint set. The feasibility
// work (phase 1) is done once; subsequent solves with a different objective
// re-optimize from the previous basis, which makes weight sweeps over the
// same polytope cheap. Dantzig pricing with a Bland's-rule fallback after a
// degeneracy stall; deterministic for identical inputs.
class SimplexSolver {
public:
    explicit SimplexSolver(const LinearProgram& lp);
    ~SimplexSolver();
    SimplexSolver(SimplexSolver&&) noexcept;
    SimplexSolver& operator=(SimplexSolver&&) noexcept;

    // Re-solve with `objective` over the original variables.
    LpSolution solve(std::span<const double> objective);
    LpSolution solve();  // uses the objective stored in the LP

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

LpSolution solve_lp(const LinearProgram& lp);

// Max feasibility residual of a candidate point (bounds + rows), for tests.
double feasibility_residual(const LinearProgram& lp, std::span<const double> x);

}  // namespace meanrisk
