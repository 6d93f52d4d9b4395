#pragma once

#include <array>
#include <vector>

#include "meanrisk/lp.hpp"

namespace meanrisk {

// Two objective rows over a shared constraint set; the first row is the
// negative-expectation objective, the second the risk objective.
struct BiObjectiveLp {
    std::vector<double> obj1;
    std::vector<double> obj2;
    LinearProgram constraints;  // objective field unused
};

// Vertices of the nondominated frontier ordered increasingly by the first
// objective (and therefore decreasingly by the second), with the preimage
// solution per vertex.
struct FrontierVertexList {
    std::vector<std::array<double, 2>> vertices;
    std::vector<std::vector<double>> solutions;

    std::size_t size() const { return vertices.size(); }
};

struct FrontierOptions {
    double improve_tol = 1e-7;  // accepted weighted-objective improvement
    double merge_tol = 1e-7;    // objective-space merge radius
};

// Dichotomic (Aneja-Nair) weighted-sum search: lexicographic endpoint solves
// anchor the recursion, then each segment is probed with its normal weight.
// Requires the problem bounded in both objectives; throws solver_error on an
// unbounded objective, returns an empty list when infeasible.
FrontierVertexList dichotomic_frontier(const BiObjectiveLp& bp, const FrontierOptions& opts = {});

// Coarsens a frontier to at most a Hausdorff `tol` perturbation, rounding
// toward the dominated side only (the pruned region contains the exact one).
// Solutions of dropped vertices are discarded.
FrontierVertexList prune_frontier(const FrontierVertexList& frontier, double tol);

}  // namespace meanrisk
