#pragma once

#include <vector>

#include "meanrisk/scenario_tree.hpp"

namespace meanrisk {

struct RiskSpec {
    double alpha = 0.05;  // CVaR level, in (0,1]

    void validate() const;
};

// One-step-ahead payoffs at the children of a node.
struct ConditionalDistribution {
    std::vector<double> values;
    std::vector<double> probs;

    void validate() const;
};

struct MeanRiskProfile {
    double neg_mean = 0.0;  // -E_t
    double risk = 0.0;      // rho_t
};

// CVaR_alpha via stable sort + fractional tail averaging; equals the
// Rockafellar-Uryasev minimum min_z { z + (1/alpha) E[(-X - z)^+] }.
double one_step_cvar(const RiskSpec& spec, const ConditionalDistribution& dist);

double one_step_mean(const ConditionalDistribution& dist);

// Backward composition of (−E_t, rho_t) over an explicit tree: leaves carry
// (-v_T, -v_T), interior nodes apply the one-step maps to their children.
// Returns one profile per node, indexed by node id. OpenMP-parallel over the
// nodes of each level.
std::vector<MeanRiskProfile> composed_profile(const ScenarioTree& tree, const RiskSpec& spec,
                                              const std::vector<double>& terminal);

// Single-threaded reference used to cross-check the parallel version.
std::vector<MeanRiskProfile> composed_profile_serial(const ScenarioTree& tree, const RiskSpec& spec,
                                                     const std::vector<double>& terminal);

// Root profile of a constant-value-weights strategy on an i.i.d. market with
// initial wealth v0; per-level scalar recursion instead of a full tree sweep.
MeanRiskProfile fixed_mix_profile(const ReturnModel& model, int horizon, const RiskSpec& spec,
                                  const std::vector<double>& weights, double v0);

}  // namespace meanrisk
