#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace meanrisk {

// One-step gross returns and branch probabilities shared by every node of an
// i.i.d. market.
struct ReturnModel {
    std::vector<std::vector<double>> scenarios;  // k x d gross returns
    std::vector<double> probs;                   // k, positive, sum to 1

    int branches() const { return static_cast<int>(scenarios.size()); }
    int assets() const { return scenarios.empty() ? 0 : static_cast<int>(scenarios.front().size()); }

    void validate() const;  // throws config_error on violation
};

struct TreeNode {
    int id = -1;
    int time = 0;
    int parent = -1;                 // -1 for the root
    std::vector<int> children;       // ordered
    double cond_prob = 1.0;          // probability given the parent
    std::vector<double> prices;      // d positive prices
};

// Finite filtered event tree. Two storage regimes:
//   - explicit: all nodes materialized (general trees, small i.i.d. trees),
//   - implicit: i.i.d. markets whose full tree would exceed the node cap;
//     only the ReturnModel and horizon are kept, root prices are all 1.
class ScenarioTree {
public:
    static constexpr std::size_t default_node_cap = 2'000'000;

    ScenarioTree() = default;

    int horizon() const { return horizon_; }
    int assets() const { return assets_; }
    bool iid() const { return iid_; }
    bool materialized() const { return !nodes_.empty(); }
    const std::optional<ReturnModel>& model() const { return model_; }

    const std::vector<TreeNode>& nodes() const { return nodes_; }
    const TreeNode& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }
    const std::vector<int>& level(int t) const { return levels_[static_cast<std::size_t>(t)]; }
    int root() const { return 0; }

    // Gross returns of child `c` relative to node `id` (elementwise price ratio).
    std::vector<double> child_returns(int id, int c) const;

    // Unconditional probability of a node (product of cond_probs on its path).
    double path_prob(int id) const;

    // One node per line: id, time, parent, cond_prob, prices. Explicit trees only.
    std::string dump() const;

    static ScenarioTree from_explicit(int horizon, int assets, std::vector<TreeNode> nodes, bool iid,
                                      std::optional<ReturnModel> model = std::nullopt);
    static ScenarioTree from_implicit(const ReturnModel& model, int horizon);

private:
    int horizon_ = 0;
    int assets_ = 0;
    bool iid_ = false;
    std::optional<ReturnModel> model_;
    std::vector<TreeNode> nodes_;            // empty when implicit
    std::vector<std::vector<int>> levels_;   // node ids grouped by time
};

// Explicit i.i.d. tree with k^T leaves; refuses above `node_cap` nodes
// (throws config_error; use build_iid_market instead).
ScenarioTree build_iid_tree(const ReturnModel& model, int horizon,
                            std::size_t node_cap = ScenarioTree::default_node_cap);

// Implicit i.i.d. market for horizons whose full tree does not fit in memory.
ScenarioTree build_iid_market(const ReturnModel& model, int horizon);

// Two-asset binomial market, bond first, stock second. Per-period bond return
// is bond_annual_rate^(1/periods_per_year); the caller-supplied u/d/p must
// reproduce stock_annual_mean^(1/periods_per_year) in expectation.
ScenarioTree build_binomial(double stock_annual_mean, double bond_annual_rate, double stock_up,
                            double stock_down, double up_prob, int periods_per_year, double years,
                            std::size_t node_cap = ScenarioTree::default_node_cap);

// Derives (u, d) for p = 0.5 from annual mean and volatility by matching the
// first two per-period moments: u/d = m +- sigma/sqrt(periods_per_year).
std::pair<double, double> binomial_up_down(double stock_annual_mean, double annual_volatility,
                                           int periods_per_year);

// Equiprobable sign-flip scenarios mean +- L*eps matching mean and covariance
// exactly. Zero-variance assets (deterministic, e.g. a bond) are excluded from
// the sign expansion, giving 2^(d_risky) scenarios.
ReturnModel moment_matched_scenarios(const std::vector<double>& mean,
                                     const std::vector<std::vector<double>>& covariance);

// List of violated invariants, empty iff valid. Diagnostic, never throws.
std::vector<std::string> validate_tree(const ScenarioTree& tree);

}  // namespace meanrisk
