#pragma once

#include <array>
#include <vector>

#include "meanrisk/frontier.hpp"
#include "meanrisk/risk.hpp"
#include "meanrisk/scenario_tree.hpp"

namespace meanrisk {

// 2-D polyhedron of "vertex list + R^2_+ cone" form; vertices ordered
// increasingly by the first component (negative expectation).
struct UpperImage {
    std::vector<std::array<double, 2>> vertices;

    std::size_t size() const { return vertices.size(); }
    bool empty() const { return vertices.empty(); }

    // Risk coordinate of the lower boundary at `neg_mean` (interpolated;
    // constant beyond the last vertex). neg_mean must be >= the first vertex.
    double boundary_risk(double neg_mean) const;

    // p is a member iff it weakly dominates a boundary point.
    bool contains(const std::array<double, 2>& p, double tol = 0.0) const;

    // Vertical distance from p to the lower boundary (0 on the boundary,
    // positive inside and outside alike); +inf left of the first vertex.
    double boundary_distance(const std::array<double, 2>& p) const;
};

// Per-node frontier data of one time level: vertex matrix A and solution
// matrix B. Each B column holds the value-weight position phi (d entries)
// followed by the successor profile x_{t+1} for every child (2 entries each),
// all normalized to unit wealth.
struct NodeSolution {
    std::vector<std::array<double, 2>> vertices;  // columns of A
    std::vector<double> phi;                      // d x k, column-major per vertex
    std::vector<double> child_profiles;           // (2*children) x k, column-major per vertex
    int assets = 0;
    int children = 0;

    UpperImage upper_image() const { return {vertices}; }
    std::size_t num_vertices() const { return vertices.size(); }
};

// Solutions of all node problems at one time t. For i.i.d. markets a single
// representative node is stored and shared by every node of the level.
struct StageSolution {
    int time = 0;
    bool shared = false;                // true under the i.i.d. shortcut
    std::vector<NodeSolution> nodes;    // one entry when shared
    std::vector<int> node_ids;          // explicit-tree ids (empty when shared)

    const NodeSolution& at(std::size_t node_index) const {
        return shared ? nodes.front() : nodes[node_index];
    }
};

struct BellmanOptions {
    double prune_tol = 0.0;        // epsilon-pruning of stage frontiers, off by default
    std::size_t vertex_budget = 0; // 0 = unlimited
    bool parallel = true;          // OpenMP over nodes within a level
    FrontierOptions frontier;
};

// One-step branching data of a single node, in value coordinates: gross
// returns of each child relative to the node.
struct OneStepNode {
    std::vector<std::vector<double>> child_returns;
    std::vector<double> child_probs;
};

// P_T(1): the single vertex (-1, -1) plus the cone.
UpperImage terminal_upper_image();

// Bi-objective LP of the unit-wealth one-step problem at a node: position
// weights phi >= 0 summing to 1, per child a convex expansion over the next
// upper image's vertices scaled by realized wealth, and the CVaR auxiliaries.
BiObjectiveLp assemble_one_step_vlp(const OneStepNode& node,
                                    const std::vector<UpperImage>& next_images,
                                    const RiskSpec& spec);

// Extracts (phi, per-child profiles) from an LP solution of the one-step VLP
// assembled from the same (node, next_images) pair.
void split_one_step_solution(const OneStepNode& node, const std::vector<UpperImage>& next_images,
                             const std::vector<double>& x, std::vector<double>& phi_out,
                             std::vector<double>& child_profiles_out);

// Solves the node problems of one time level. `next_images` holds, per node
// of the level, the upper images of its children.
NodeSolution solve_node(const OneStepNode& node, const std::vector<UpperImage>& next_images,
                        const RiskSpec& spec, const BellmanOptions& opts);

StageSolution solve_stage(const ScenarioTree& tree, int t,
                          const std::vector<UpperImage>& next_images_by_node_index,
                          const RiskSpec& spec, const BellmanOptions& opts = {});

// Backward recursion of unit-wealth upper images for t = T-1..0. Under the
// i.i.d. shortcut one node problem is solved per level.
std::vector<StageSolution> backward_recursion(const ScenarioTree& tree, const RiskSpec& spec,
                                              const BellmanOptions& opts = {});

// Single-threaded reference for the explicit-tree path.
std::vector<StageSolution> backward_recursion_serial(const ScenarioTree& tree, const RiskSpec& spec,
                                                     BellmanOptions opts = {});

UpperImage scale_upper_image(const UpperImage& image, double wealth);

// Root upper image P_0(1) of a finished recursion.
UpperImage root_upper_image(const std::vector<StageSolution>& stages);

// One-step data helpers shared with the strategy module.
OneStepNode one_step_from_model(const ReturnModel& model);
OneStepNode one_step_from_tree(const ScenarioTree& tree, int node_id);

}  // namespace meanrisk
