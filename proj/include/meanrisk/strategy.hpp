#pragma once

#include <array>
#include <string>
#include <vector>

#include "meanrisk/bellman.hpp"
#include "meanrisk/risk.hpp"
#include "meanrisk/scenario_tree.hpp"

namespace meanrisk {

// How the investor picks the initial efficient profile on P_0(v0).
struct ProfileTarget {
    enum class Mode { risk_budget, target_mean, risk_aversion };
    Mode mode = Mode::risk_aversion;
    double value = 0.5;  // risk budget rho*, expected value E*, or lambda in [0,1]
};

struct TradeRecord {
    int time = 0;
    int node = 0;                      // node id (explicit tree) or branch index (implicit)
    double wealth = 0.0;
    std::vector<double> position;      // units per asset; empty at the horizon
    std::vector<double> value_position; // currency amount per asset
    MeanRiskProfile profile;
    double lambda_lo = 0.0;
    double lambda_hi = 1.0;
};

// Baselines rebalanced to fixed value weights or the myopic rule.
struct StaticStrategy {
    enum class Rule { myopic, naive, fixed };
    Rule rule = Rule::naive;
    double lambda = 0.5;               // myopic risk aversion
    std::vector<double> weights;       // fixed rule only; nonnegative, sum to 1
};

// Unique minimal boundary point of a scaled upper image matching the target.
// Throws config_error listing the attainable interval when out of range.
MeanRiskProfile select_initial_profile(const UpperImage& p0, const ProfileTarget& target);

struct ForwardStep {
    std::vector<double> value_position;                // v * phi blend, sums to v
    std::vector<std::array<double, 2>> child_profiles; // scaled by v
    double overshoot = 0.0;                            // clamping magnitude, 0 if interior
};

// Position and successor profiles from a precomputed stage solution: locate the
// segment of A holding x1/v, blend the two incident solution columns, and
// project the blended successor risk components back onto the child frontiers
// (the blend of two on-frontier profiles is a chord, not a frontier point).
ForwardStep forward_step_polyhedral(const NodeSolution& sol, double wealth, double neg_mean_target,
                                    const OneStepNode& node,
                                    const std::vector<UpperImage>& next_images);

// Same output via a direct LP solve: minimize the one-step risk objective
// subject to the expectation objective being at most neg_mean_target / wealth.
ForwardStep solve_induction_lp(const OneStepNode& node, double wealth, double neg_mean_target,
                               const std::vector<UpperImage>& next_images, const RiskSpec& spec);

// Weight interval [lambda_lo, lambda_hi] for which `point` optimizes the
// scalarization (1-lambda, lambda) over the frontier; degenerate on an edge,
// closed interval at a vertex. Throws config_error if point is off the
// frontier by more than 1e-7 (relative to the unit scale).
std::array<double, 2> moving_scalarization(const UpperImage& image, const MeanRiskProfile& point);

// Forward pass along a realized path. For explicit trees `path` lists node ids
// starting at the root; for implicit i.i.d. markets it lists realized branch
// indices (path[0] is the root and ignored). Warnings (clamping) are appended
// to `warnings` when given.
std::vector<TradeRecord> forward_strategy_path(const ScenarioTree& tree,
                                               const std::vector<StageSolution>& stages, double v0,
                                               const MeanRiskProfile& x0, const std::vector<int>& path,
                                               std::vector<std::string>* warnings = nullptr);

StaticStrategy myopic_strategy(double lambda);
StaticStrategy naive_strategy();
StaticStrategy fixed_weight_strategy(std::vector<double> weights);

// Value weights the strategy holds at a node with the given one-step data.
std::vector<double> strategy_weights(const StaticStrategy& strategy, const OneStepNode& node,
                                     const RiskSpec& spec);

// Root profile (-E_0(v_T), rho_0(v_T)) of the strategy started at wealth v0.
MeanRiskProfile evaluate_strategy(const ScenarioTree& tree, const StaticStrategy& strategy,
                                  const RiskSpec& spec, double v0);

}  // namespace meanrisk
