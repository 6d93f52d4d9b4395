#include "meanrisk/lp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "meanrisk/errors.hpp"

namespace meanrisk {

namespace {
constexpr double kPivotTol = 1e-7;
constexpr double kCostTol = 1e-9;
constexpr double kPhase1Tol = 1e-7;
constexpr int kDegenerateStall = 100;
}  // namespace

void LinearProgram::validate() const {
    const std::size_t n = objective.size();
    if (lower.size() != n || upper.size() != n) throw config_error("LinearProgram: bound size mismatch");
    if (senses.size() != rows.size() || rhs.size() != rows.size())
        throw config_error("LinearProgram: row data size mismatch");
    for (const auto& row : rows)
        if (row.size() != n) throw config_error("LinearProgram: row length mismatch");
    for (std::size_t j = 0; j < n; ++j)
        if (lower[j] > upper[j]) throw config_error("LinearProgram: lower bound above upper bound");
}

std::string LinearProgram::dump() const {
    std::ostringstream os;
    auto term = [&os](double c, std::size_t j, bool first) {
        if (c == 0.0) return first;
        os << (c < 0 ? " - " : (first ? " " : " + ")) << std::abs(c) << " x" << j;
        return false;
    };
    os << "Minimize\n obj:";
    bool first = true;
    for (std::size_t j = 0; j < objective.size(); ++j) first = term(objective[j], j, first);
    os << "\nSubject To\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
        os << " c" << i << ":";
        first = true;
        for (std::size_t j = 0; j < rows[i].size(); ++j) first = term(rows[i][j], j, first);
        os << (senses[i] == RowSense::le ? " <= " : senses[i] == RowSense::ge ? " >= " : " = ") << rhs[i] << '\n';
    }
    os << "Bounds\n";
    for (std::size_t j = 0; j < objective.size(); ++j)
        os << ' ' << lower[j] << " <= x" << j << " <= " << upper[j] << '\n';
    os << "End\n";
    return os.str();
}

struct SimplexSolver::Impl {
    // Standard form: min c.y  s.t. T y = b, y >= 0, built from the user LP by
    // shifting/splitting bounded variables and adding slack/artificial columns.
    std::size_t orig_n = 0;
    // x_j = offset[j] + sign1[j]*y[col1[j]] (+ sign2*y[col2[j]] for free vars)
    std::vector<double> offset;
    std::vector<int> col1, col2;
    std::vector<double> sign1;

    std::size_t m = 0;       // tableau rows
    std::size_t ny = 0;      // structural columns
    std::size_t ncols = 0;   // structural + slack + artificial
    std::size_t art_begin = 0;
    std::vector<double> tab;  // m x ncols
    std::vector<double> rhs;  // m
    std::vector<int> basis;   // m
    bool phase1_done = false;
    bool feasible = false;

    std::vector<double> stored_objective;
    LinearProgram source;  // kept for residual checks and rebuild on drift

    double& at(std::size_t r, std::size_t c) { return tab[r * ncols + c]; }

    void build(const LinearProgram& lp);
    bool run_phase1();
    // Optimizes min cost.y from the current basis; returns false on unbounded.
    bool optimize(const std::vector<double>& cost);
    LpSolution extract(const std::vector<double>& objective) const;
    void pivot(std::size_t row, std::size_t col, std::vector<double>& d);
};

void SimplexSolver::Impl::build(const LinearProgram& lp) {
    lp.validate();
    orig_n = lp.num_vars();
    offset.assign(orig_n, 0.0);
    col1.assign(orig_n, -1);
    col2.assign(orig_n, -1);
    sign1.assign(orig_n, 1.0);
    stored_objective = lp.objective;
    source = lp;

    struct ExtraRow {
        int col;
        double ub;  // y_col <= ub
    };
    std::vector<ExtraRow> bound_rows;
    ny = 0;
    for (std::size_t j = 0; j < orig_n; ++j) {
        const double l = lp.lower[j], u = lp.upper[j];
        if (l == -lp_inf && u == lp_inf) {
            col1[j] = static_cast<int>(ny++);
            col2[j] = static_cast<int>(ny++);
        } else if (l != -lp_inf) {
            offset[j] = l;
            col1[j] = static_cast<int>(ny++);
            if (u != lp_inf) bound_rows.push_back({col1[j], u - l});
        } else {  // upper bound only
            offset[j] = u;
            sign1[j] = -1.0;
            col1[j] = static_cast<int>(ny++);
        }
    }

    const std::size_t m_user = lp.num_rows();
    m = m_user + bound_rows.size();

    // Row data over y with senses, rhs shifted by variable offsets.
    std::vector<std::vector<double>> rowsY(m, std::vector<double>(ny, 0.0));
    std::vector<RowSense> senses(m);
    std::vector<double> b(m);
    for (std::size_t i = 0; i < m_user; ++i) {
        double shift = 0.0;
        for (std::size_t j = 0; j < orig_n; ++j) {
            const double a = lp.rows[i][j];
            if (a == 0.0) continue;
            shift += a * offset[j];
            rowsY[i][static_cast<std::size_t>(col1[j])] += a * sign1[j];
            if (col2[j] >= 0) rowsY[i][static_cast<std::size_t>(col2[j])] -= a;
        }
        senses[i] = lp.senses[i];
        b[i] = lp.rhs[i] - shift;
    }
    for (std::size_t k = 0; k < bound_rows.size(); ++k) {
        const std::size_t i = m_user + k;
        rowsY[i][static_cast<std::size_t>(bound_rows[k].col)] = 1.0;
        senses[i] = RowSense::le;
        b[i] = bound_rows[k].ub;
    }

    // Normalize to b >= 0, count slack and artificial columns.
    std::size_t n_slack = 0, n_art = 0;
    for (std::size_t i = 0; i < m; ++i) {
        if (b[i] < 0.0) {
            for (double& a : rowsY[i]) a = -a;
            b[i] = -b[i];
            senses[i] = senses[i] == RowSense::le ? RowSense::ge
                       : senses[i] == RowSense::ge ? RowSense::le
                                                   : RowSense::eq;
        }
        if (senses[i] != RowSense::eq) ++n_slack;
        if (senses[i] != RowSense::le) ++n_art;
    }
    art_begin = ny + n_slack;
    ncols = art_begin + n_art;
    tab.assign(m * ncols, 0.0);
    rhs = b;
    basis.assign(m, -1);

    std::size_t slack_at = ny, art_at = art_begin;
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < ny; ++j) at(i, j) = rowsY[i][j];
        if (senses[i] == RowSense::le) {
            at(i, slack_at) = 1.0;
            basis[i] = static_cast<int>(slack_at++);
        } else if (senses[i] == RowSense::ge) {
            at(i, slack_at) = -1.0;
            ++slack_at;
            at(i, art_at) = 1.0;
            basis[i] = static_cast<int>(art_at++);
        } else {
            at(i, art_at) = 1.0;
            basis[i] = static_cast<int>(art_at++);
        }
    }
}

void SimplexSolver::Impl::pivot(std::size_t row, std::size_t col, std::vector<double>& d) {
    const double piv = at(row, col);
    const double inv = 1.0 / piv;
    for (std::size_t j = 0; j < ncols; ++j) at(row, j) *= inv;
    rhs[row] *= inv;
    at(row, col) = 1.0;
    for (std::size_t r = 0; r < m; ++r) {
        if (r == row) continue;
        const double f = at(r, col);
        if (f == 0.0) continue;
        for (std::size_t j = 0; j < ncols; ++j) at(r, j) -= f * at(row, j);
        at(r, col) = 0.0;
        rhs[r] -= f * rhs[row];
        if (rhs[r] < 0.0 && rhs[r] > -1e-11) rhs[r] = 0.0;
    }
    const double fd = d[col];
    if (fd != 0.0) {
        for (std::size_t j = 0; j < ncols; ++j) d[j] -= fd * at(row, j);
        d[col] = 0.0;
    }
    basis[row] = static_cast<int>(col);
}

bool SimplexSolver::Impl::optimize(const std::vector<double>& cost) {
    // Reduced costs from the current basis.
    std::vector<double> d = cost;
    for (std::size_t r = 0; r < m; ++r) {
        const double cb = cost[static_cast<std::size_t>(basis[r])];
        if (cb == 0.0) continue;
        for (std::size_t j = 0; j < ncols; ++j) d[j] -= cb * at(r, j);
    }
    for (std::size_t r = 0; r < m; ++r) d[static_cast<std::size_t>(basis[r])] = 0.0;

    bool bland = false;
    int stall = 0;
    const std::size_t max_iter = 2000 + 60 * (m + ncols);
    for (std::size_t iter = 0; iter < max_iter; ++iter) {
        // Entering column (artificials stay banned once phase 1 is done).
        std::size_t enter = ncols;
        const std::size_t scan_end = phase1_done ? art_begin : ncols;
        if (bland) {
            for (std::size_t j = 0; j < scan_end; ++j)
                if (d[j] < -kCostTol) {
                    enter = j;
                    break;
                }
        } else {
            double best = -kCostTol;
            for (std::size_t j = 0; j < scan_end; ++j)
                if (d[j] < best) {
                    best = d[j];
                    enter = j;
                }
        }
        if (enter == ncols) return true;  // optimal

        // Ratio test. Ties go to the larger pivot element (numerical safety);
        // under Bland's rule ties go to the smallest basis index instead.
        std::size_t leave = m;
        double best_ratio = 0.0;
        // Prefer pivots above kPivotTol; fall back to tiny but nonzero pivots
        // before declaring the direction unbounded (thin feasible regions can
        // leave only near-degenerate rows).
        for (double pivot_tol : {kPivotTol, 1e-11}) {
            for (std::size_t r = 0; r < m; ++r) {
                const double a = at(r, enter);
                if (a <= pivot_tol) continue;
                const double ratio = rhs[r] / a;
                const bool tie = leave != m && ratio < best_ratio + 1e-12;
                const bool better = tie && (bland ? basis[r] < basis[leave]
                                                  : a > at(leave, enter));
                if (leave == m || ratio < best_ratio - 1e-12 || better) {
                    leave = r;
                    best_ratio = ratio;
                }
            }
            if (leave != m) break;
        }
        if (leave == m) return false;  // unbounded

        if (best_ratio < 1e-11) {
            if (++stall > kDegenerateStall) bland = true;
        } else {
            stall = 0;
            bland = false;
        }
        pivot(leave, enter, d);
    }
    throw solver_error("simplex: iteration limit reached (m=" + std::to_string(m) +
                       ", n=" + std::to_string(ncols) + ")");
}

bool SimplexSolver::Impl::run_phase1() {
    std::vector<double> cost(ncols, 0.0);
    for (std::size_t j = art_begin; j < ncols; ++j) cost[j] = 1.0;
    if (!optimize(cost)) throw solver_error("simplex: phase 1 unbounded");
    double art_sum = 0.0;
    for (std::size_t r = 0; r < m; ++r)
        if (static_cast<std::size_t>(basis[r]) >= art_begin) art_sum += rhs[r];
    phase1_done = true;
    if (art_sum > kPhase1Tol) {
        feasible = false;
        return false;
    }
    // Pivot zero-level artificials out where possible; a row with no eligible
    // column is redundant and keeps its artificial at level zero.
    std::vector<double> dummy(ncols, 0.0);
    for (std::size_t r = 0; r < m; ++r) {
        if (static_cast<std::size_t>(basis[r]) < art_begin) continue;
        for (std::size_t j = 0; j < art_begin; ++j) {
            if (std::abs(at(r, j)) > 1e-7) {
                pivot(r, j, dummy);
                break;
            }
        }
    }
    feasible = true;
    return true;
}

LpSolution SimplexSolver::Impl::extract(const std::vector<double>& objective) const {
    std::vector<double> y(ncols, 0.0);
    for (std::size_t r = 0; r < m; ++r) y[static_cast<std::size_t>(basis[r])] = rhs[r];
    LpSolution sol;
    sol.status = LpStatus::optimal;
    sol.x.assign(orig_n, 0.0);
    for (std::size_t j = 0; j < orig_n; ++j) {
        double v = offset[j] + sign1[j] * y[static_cast<std::size_t>(col1[j])];
        if (col2[j] >= 0) v -= y[static_cast<std::size_t>(col2[j])];
        sol.x[j] = v;
    }
    sol.objective_value = 0.0;
    for (std::size_t j = 0; j < orig_n; ++j) sol.objective_value += objective[j] * sol.x[j];
    return sol;
}

SimplexSolver::SimplexSolver(const LinearProgram& lp) : impl_(std::make_unique<Impl>()) {
    impl_->build(lp);
}
SimplexSolver::~SimplexSolver() = default;
SimplexSolver::SimplexSolver(SimplexSolver&&) noexcept = default;
SimplexSolver& SimplexSolver::operator=(SimplexSolver&&) noexcept = default;

LpSolution SimplexSolver::solve(std::span<const double> objective) {
    if (objective.size() != impl_->orig_n)
        throw config_error("SimplexSolver: objective size mismatch");
    for (int attempt = 0;; ++attempt) {
        Impl& s = *impl_;
        if (!s.phase1_done && !s.run_phase1()) return {LpStatus::infeasible, {}, 0.0};
        if (!s.feasible) return {LpStatus::infeasible, {}, 0.0};

        std::vector<double> cost(s.ncols, 0.0);
        for (std::size_t j = 0; j < s.orig_n; ++j) {
            const double c = objective[j];
            if (c == 0.0) continue;
            cost[static_cast<std::size_t>(s.col1[j])] += c * s.sign1[j];
            if (s.col2[j] >= 0) cost[static_cast<std::size_t>(s.col2[j])] -= c;
        }
        if (!s.optimize(cost)) return {LpStatus::unbounded, {}, 0.0};
        LpSolution sol = s.extract(std::vector<double>(objective.begin(), objective.end()));
        const double drift = feasibility_residual(s.source, sol.x);
        if (drift <= 1e-8) return sol;
        if (attempt >= 1)
            throw solver_error("simplex: residual " + std::to_string(drift) +
                               " after tableau rebuild");
        // Accumulated tableau round-off; rebuild from scratch and re-solve.
        auto fresh = std::make_unique<Impl>();
        fresh->build(s.source);
        impl_ = std::move(fresh);
    }
}

LpSolution SimplexSolver::solve() { return solve(impl_->stored_objective); }

LpSolution solve_lp(const LinearProgram& lp) { return SimplexSolver(lp).solve(); }

double feasibility_residual(const LinearProgram& lp, std::span<const double> x) {
    double res = 0.0;
    for (std::size_t j = 0; j < lp.num_vars(); ++j) {
        if (lp.lower[j] != -lp_inf) res = std::max(res, lp.lower[j] - x[j]);
        if (lp.upper[j] != lp_inf) res = std::max(res, x[j] - lp.upper[j]);
    }
    for (std::size_t i = 0; i < lp.num_rows(); ++i) {
        double ax = 0.0;
        for (std::size_t j = 0; j < lp.num_vars(); ++j) ax += lp.rows[i][j] * x[j];
        const double diff = ax - lp.rhs[i];
        switch (lp.senses[i]) {
            case RowSense::le: res = std::max(res, diff); break;
            case RowSense::ge: res = std::max(res, -diff); break;
            case RowSense::eq: res = std::max(res, std::abs(diff)); break;
        }
    }
    return res;
}

}  // namespace meanrisk
