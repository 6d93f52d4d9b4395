#include "meanrisk/frontier.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "meanrisk/errors.hpp"

namespace meanrisk {

namespace {

double dot(const std::vector<double>& c, const std::vector<double>& x) {
    double s = 0.0;
    for (std::size_t j = 0; j < c.size(); ++j) s += c[j] * x[j];
    return s;
}

// Lexicographic solve: minimize `first`, then `second` over the first-stage
// optimum (within 1e-9).
LpSolution lexicographic_min(const BiObjectiveLp& bp, const std::vector<double>& first,
                             const std::vector<double>& second, bool* infeasible) {
    SimplexSolver stage1(bp.constraints);
    LpSolution s1 = stage1.solve(first);
    if (s1.status == LpStatus::infeasible) {
        *infeasible = true;
        return s1;
    }
    if (s1.status == LpStatus::unbounded)
        throw solver_error("dichotomic_frontier: objective unbounded (boundedness precondition violated)");

    // The slack must cover the first-stage solve's feasibility drift; widen
    // once if round-off leaves the restriction empty.
    LinearProgram restricted = bp.constraints;
    restricted.rows.push_back(first);
    restricted.senses.push_back(RowSense::le);
    for (double slack : {1e-9, 1e-7}) {
        restricted.rhs.push_back(s1.objective_value + slack * std::max(1.0, std::abs(s1.objective_value)));
        try {
            LpSolution s2 = SimplexSolver(restricted).solve(second);
            if (s2.status == LpStatus::optimal) {
                *infeasible = false;
                return s2;
            }
        } catch (const solver_error&) {
            // The restricted slice can be too thin for stable pivoting.
        }
        restricted.rhs.pop_back();
    }
    // Fallback: a slightly perturbed weighted objective yields a supported
    // efficient point at the same end of the frontier without restricting the
    // feasible set.
    double scale1 = 0.0, scale2 = 0.0;
    for (std::size_t j = 0; j < first.size(); ++j) {
        scale1 = std::max(scale1, std::abs(first[j]));
        scale2 = std::max(scale2, std::abs(second[j]));
    }
    std::vector<double> perturbed = first;
    const double eps = 1e-7 * scale1 / std::max(1e-12, scale2);
    for (std::size_t j = 0; j < first.size(); ++j) perturbed[j] += eps * second[j];
    LpSolution s2 = SimplexSolver(bp.constraints).solve(perturbed);
    if (s2.status != LpStatus::optimal)
        throw solver_error("dichotomic_frontier: lexicographic second stage failed");
    *infeasible = false;
    return s2;
}

}  // namespace

FrontierVertexList dichotomic_frontier(const BiObjectiveLp& bp, const FrontierOptions& opts) {
    bool infeasible = false;
    LpSolution left = lexicographic_min(bp, bp.obj1, bp.obj2, &infeasible);
    if (infeasible) return {};
    LpSolution right = lexicographic_min(bp, bp.obj2, bp.obj1, &infeasible);
    if (infeasible) return {};

    auto image = [&bp](const LpSolution& s) -> std::array<double, 2> {
        return {dot(bp.obj1, s.x), dot(bp.obj2, s.x)};
    };

    std::vector<std::array<double, 2>> pts{image(left), image(right)};
    std::vector<std::vector<double>> sols{std::move(left.x), std::move(right.x)};

    SimplexSolver warm(bp.constraints);
    std::vector<double> weighted(bp.obj1.size());

    // Segment stack indexed into pts; recursion order is deterministic.
    std::vector<std::pair<std::size_t, std::size_t>> stack;
    if (std::abs(pts[0][0] - pts[1][0]) > opts.merge_tol || std::abs(pts[0][1] - pts[1][1]) > opts.merge_tol)
        stack.emplace_back(0, 1);

    while (!stack.empty()) {
        auto [a, b] = stack.back();
        stack.pop_back();
        const std::array<double, 2>& pa = pts[a];
        const std::array<double, 2>& pb = pts[b];
        double w1 = pa[1] - pb[1];
        double w2 = pb[0] - pa[0];
        if (w1 <= 0.0 || w2 <= 0.0) continue;
        const double norm = w1 + w2;
        w1 /= norm;
        w2 /= norm;
        for (std::size_t j = 0; j < weighted.size(); ++j) weighted[j] = w1 * bp.obj1[j] + w2 * bp.obj2[j];
        LpSolution s = warm.solve(weighted);
        if (s.status != LpStatus::optimal)
            throw solver_error("dichotomic_frontier: weighted-sum solve failed");
        const std::array<double, 2> p = image(s);
        const double current = std::min(w1 * pa[0] + w2 * pa[1], w1 * pb[0] + w2 * pb[1]);
        if (w1 * p[0] + w2 * p[1] < current - opts.improve_tol) {
            const std::size_t idx = pts.size();
            pts.push_back(p);
            sols.push_back(std::move(s.x));
            stack.emplace_back(a, idx);
            stack.emplace_back(idx, b);
        }
    }

    // Sort, merge near-duplicates, drop dominated points.
    std::vector<std::size_t> order(pts.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&pts](std::size_t i, std::size_t j) {
        if (pts[i][0] != pts[j][0]) return pts[i][0] < pts[j][0];
        return pts[i][1] < pts[j][1];
    });

    FrontierVertexList out;
    for (std::size_t i : order) {
        if (!out.vertices.empty()) {
            const auto& prev = out.vertices.back();
            const double dx = pts[i][0] - prev[0];
            const double dy = pts[i][1] - prev[1];
            if (std::hypot(dx, dy) <= opts.merge_tol) continue;  // merged
            if (pts[i][1] >= prev[1] - opts.merge_tol) continue;  // dominated
        }
        out.vertices.push_back(pts[i]);
        out.solutions.push_back(std::move(sols[i]));
    }
    return out;
}

FrontierVertexList prune_frontier(const FrontierVertexList& frontier, double tol) {
    const std::size_t n = frontier.size();
    if (tol <= 0.0 || n <= 2) return frontier;

    std::vector<bool> keep(n, false);
    keep.front() = keep.back() = true;
    double max_dropped = 0.0;

    std::vector<std::pair<std::size_t, std::size_t>> stack{{0, n - 1}};
    while (!stack.empty()) {
        auto [a, b] = stack.back();
        stack.pop_back();
        if (b - a <= 1) continue;
        // Vertical deviation of interior vertices below the chord (a,b).
        const auto& pa = frontier.vertices[a];
        const auto& pb = frontier.vertices[b];
        double worst = 0.0;
        std::size_t worst_i = a;
        for (std::size_t i = a + 1; i < b; ++i) {
            const auto& p = frontier.vertices[i];
            const double t = (p[0] - pa[0]) / (pb[0] - pa[0]);
            const double chord = pa[1] + t * (pb[1] - pa[1]);
            const double dev = chord - p[1];
            if (dev > worst) {
                worst = dev;
                worst_i = i;
            }
        }
        if (worst <= tol) {
            max_dropped = std::max(max_dropped, worst);
        } else {
            keep[worst_i] = true;
            stack.emplace_back(a, worst_i);
            stack.emplace_back(worst_i, b);
        }
    }

    FrontierVertexList out;
    for (std::size_t i = 0; i < n; ++i) {
        if (!keep[i]) continue;
        auto v = frontier.vertices[i];
        v[1] -= max_dropped;  // dominated-side rounding: pruned region contains the exact one
        out.vertices.push_back(v);
        out.solutions.push_back(frontier.solutions.empty() ? std::vector<double>{} : frontier.solutions[i]);
    }
    return out;
}

}  // namespace meanrisk
