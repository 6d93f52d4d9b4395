#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "meanrisk/bellman.hpp"
#include "meanrisk/strategy.hpp"

namespace meanrisk {

// Run configuration, read from a JSON file. Market section selects one of:
//   {"type":"binomial", "stock_annual_mean","bond_annual_rate","periods_per_year","years",
//    and either "annual_volatility" or explicit "stock_up","stock_down","up_prob"}
//   {"type":"iid", "scenarios","probs","horizon"}
//   {"type":"moment_matched", "mean","covariance","horizon"}
struct RunConfig {
    std::string market_json;  // canonical dump of the market section
    double alpha = 0.05;
    double v0 = 1.0;
    ProfileTarget target;
    int path_count = 0;
    std::uint64_t seed = 0;
    std::vector<std::vector<int>> explicit_paths;
    std::string output_dir;
    double prune_tol = 0.0;
    std::size_t vertex_budget = 0;
    std::size_t node_cap = ScenarioTree::default_node_cap;
    double myopic_lambda = 0.5;

    void validate() const;
};

RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);

ScenarioTree build_tree_from_config(const RunConfig& config);

// FNV-1a over the canonical config serialization; identifies inputs.
std::uint64_t config_hash(const RunConfig& config);

struct LevelFrontier {
    int time = 0;
    std::vector<int> node_ids;                                   // -1 for a shared level
    std::vector<std::vector<std::array<double, 2>>> vertices;    // unit-wealth, per node
};

struct BaselineRow {
    std::string name;
    MeanRiskProfile profile;
    bool in_upper_image = false;
    MeanRiskProfile dominating;  // frontier point at the same mean, when attainable
    bool has_dominating = false;
};

struct RunReport {
    int schema_version = 1;
    std::string config_hash_hex;
    int horizon = 0;
    double v0 = 1.0;
    double alpha = 0.05;
    std::vector<LevelFrontier> frontiers;    // unit-wealth, t = 0..T-1
    MeanRiskProfile selected;                // on P_0(v0)
    std::vector<std::vector<TradeRecord>> paths;
    std::vector<BaselineRow> baselines;
    std::vector<std::string> warnings;
    std::map<std::string, double> timings_ms;  // excluded from the report hash
};

RunReport run_pipeline(const RunConfig& config);

// CSV with header "t,node,neg_mean,risk"; header-only when the level is absent.
std::string export_frontier_csv(const RunReport& report, int level);

// CSV with header "t,node,wealth,position_0..,neg_mean,risk,lambda_lo,lambda_hi".
std::string export_trades_csv(const std::vector<TradeRecord>& records);

std::string export_report_json(const RunReport& report);
RunReport import_report_json(const std::string& json_text);

// FNV-1a over the canonical report serialization without timings.
std::uint64_t report_hash(const RunReport& report);

// Root-to-leaf paths drawn by conditional probabilities; node ids for explicit
// trees, branch indices (with a leading 0) for implicit markets. The generator
// is fully specified, so equal seeds give byte-identical paths everywhere.
std::vector<std::vector<int>> sample_paths(const ScenarioTree& tree, int count, std::uint64_t seed);

// Stage-solution cache: JSON files named by the config hash.
void save_stage_solutions(const std::string& dir, std::uint64_t key,
                          const std::vector<StageSolution>& stages);
bool load_stage_solutions(const std::string& dir, std::uint64_t key,
                          std::vector<StageSolution>& stages);

}  // namespace meanrisk
