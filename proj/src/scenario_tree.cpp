#include "meanrisk/scenario_tree.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "meanrisk/errors.hpp"

namespace meanrisk {

namespace {
constexpr double kProbTol = 1e-12;
}

void ReturnModel::validate() const {
    if (scenarios.empty()) throw config_error("ReturnModel: no scenarios");
    if (probs.size() != scenarios.size()) throw config_error("ReturnModel: probs/scenarios size mismatch");
    const std::size_t d = scenarios.front().size();
    if (d == 0) throw config_error("ReturnModel: zero assets");
    double sum = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (probs[i] <= 0.0) throw config_error("ReturnModel: nonpositive probability");
        sum += probs[i];
        if (scenarios[i].size() != d) throw config_error("ReturnModel: ragged scenario matrix");
        for (double r : scenarios[i])
            if (r <= 0.0) throw config_error("ReturnModel: nonpositive gross return");
    }
    if (std::abs(sum - 1.0) > kProbTol) throw config_error("ReturnModel: probabilities do not sum to 1");
}

std::vector<double> ScenarioTree::child_returns(int id, int c) const {
    const TreeNode& n = node(id);
    const TreeNode& ch = node(n.children[static_cast<std::size_t>(c)]);
    std::vector<double> g(static_cast<std::size_t>(assets_));
    for (int i = 0; i < assets_; ++i)
        g[static_cast<std::size_t>(i)] =
            ch.prices[static_cast<std::size_t>(i)] / n.prices[static_cast<std::size_t>(i)];
    return g;
}

double ScenarioTree::path_prob(int id) const {
    double p = 1.0;
    for (int cur = id; cur >= 0; cur = node(cur).parent) p *= node(cur).cond_prob;
    return p;
}

std::string ScenarioTree::dump() const {
    if (!materialized()) throw config_error("ScenarioTree::dump: tree is implicit");
    std::ostringstream os;
    for (const TreeNode& n : nodes_) {
        os << n.id << ' ' << n.time << ' ' << n.parent << ' ' << n.cond_prob;
        for (double p : n.prices) os << ' ' << p;
        os << '\n';
    }
    return os.str();
}

ScenarioTree ScenarioTree::from_explicit(int horizon, int assets, std::vector<TreeNode> nodes,
                                         bool iid, std::optional<ReturnModel> model) {
    ScenarioTree t;
    t.horizon_ = horizon;
    t.assets_ = assets;
    t.iid_ = iid;
    t.model_ = std::move(model);
    t.nodes_ = std::move(nodes);
    t.levels_.assign(static_cast<std::size_t>(horizon) + 1, {});
    for (const TreeNode& n : t.nodes_) t.levels_[static_cast<std::size_t>(n.time)].push_back(n.id);
    return t;
}

ScenarioTree ScenarioTree::from_implicit(const ReturnModel& model, int horizon) {
    model.validate();
    if (horizon < 1) throw config_error("ScenarioTree: horizon must be >= 1");
    ScenarioTree t;
    t.horizon_ = horizon;
    t.assets_ = model.assets();
    t.iid_ = true;
    t.model_ = model;
    return t;
}

ScenarioTree build_iid_tree(const ReturnModel& model, int horizon, std::size_t node_cap) {
    model.validate();
    if (horizon < 1) throw config_error("build_iid_tree: horizon must be >= 1");
    const std::size_t k = model.scenarios.size();
    std::size_t count = 1, layer = 1;
    for (int t = 0; t < horizon; ++t) {
        if (layer > node_cap / k) throw config_error("build_iid_tree: node count exceeds cap, use build_iid_market");
        layer *= k;
        count += layer;
        if (count > node_cap) throw config_error("build_iid_tree: node count exceeds cap, use build_iid_market");
    }

    const int d = model.assets();
    std::vector<TreeNode> nodes;
    nodes.reserve(count);
    TreeNode root;
    root.id = 0;
    root.prices.assign(static_cast<std::size_t>(d), 1.0);
    nodes.push_back(root);

    std::vector<int> frontier{0};
    for (int t = 0; t < horizon; ++t) {
        std::vector<int> next;
        next.reserve(frontier.size() * k);
        for (int pid : frontier) {
            for (std::size_t s = 0; s < k; ++s) {
                TreeNode n;
                n.id = static_cast<int>(nodes.size());
                n.time = t + 1;
                n.parent = pid;
                n.cond_prob = model.probs[s];
                n.prices.resize(static_cast<std::size_t>(d));
                for (int i = 0; i < d; ++i)
                    n.prices[static_cast<std::size_t>(i)] =
                        nodes[static_cast<std::size_t>(pid)].prices[static_cast<std::size_t>(i)] *
                        model.scenarios[s][static_cast<std::size_t>(i)];
                nodes[static_cast<std::size_t>(pid)].children.push_back(n.id);
                next.push_back(n.id);
                nodes.push_back(std::move(n));
            }
        }
        frontier = std::move(next);
    }
    return ScenarioTree::from_explicit(horizon, d, std::move(nodes), /*iid=*/true, model);
}

ScenarioTree build_iid_market(const ReturnModel& model, int horizon) {
    return ScenarioTree::from_implicit(model, horizon);
}

ScenarioTree build_binomial(double stock_annual_mean, double bond_annual_rate, double stock_up,
                            double stock_down, double up_prob, int periods_per_year, double years,
                            std::size_t node_cap) {
    if (periods_per_year < 1) throw config_error("build_binomial: periods_per_year must be >= 1");
    if (stock_down > stock_up) throw config_error("build_binomial: stock_down must be <= stock_up");
    if (!(up_prob > 0.0 && up_prob < 1.0)) throw config_error("build_binomial: up_prob must be in (0,1)");
    if (stock_up <= 0.0 || stock_down <= 0.0 || bond_annual_rate <= 0.0 || stock_annual_mean <= 0.0)
        throw config_error("build_binomial: nonpositive return parameter");

    const double per_period_mean = std::pow(stock_annual_mean, 1.0 / periods_per_year);
    const double implied = up_prob * stock_up + (1.0 - up_prob) * stock_down;
    if (std::abs(implied - per_period_mean) > 1e-10)
        throw config_error("build_binomial: u/d/p imply per-period mean " + std::to_string(implied) +
                           ", expected " + std::to_string(per_period_mean));

    const double bond_step = std::pow(bond_annual_rate, 1.0 / periods_per_year);
    const int horizon = static_cast<int>(std::lround(periods_per_year * years));
    if (horizon < 1) throw config_error("build_binomial: horizon must be >= 1");

    ReturnModel model;
    model.scenarios = {{bond_step, stock_up}, {bond_step, stock_down}};
    model.probs = {up_prob, 1.0 - up_prob};

    // Full tree only when it fits; daily-trading horizons stay implicit.
    std::size_t count = 1, layer = 1;
    bool fits = true;
    for (int t = 0; t < horizon && fits; ++t) {
        if (layer > node_cap / 2) fits = false;
        layer *= 2;
        count += layer;
        if (count > node_cap) fits = false;
    }
    if (fits) return build_iid_tree(model, horizon, node_cap);
    return build_iid_market(model, horizon);
}

std::pair<double, double> binomial_up_down(double stock_annual_mean, double annual_volatility,
                                           int periods_per_year) {
    const double m = std::pow(stock_annual_mean, 1.0 / periods_per_year);
    const double s = annual_volatility / std::sqrt(static_cast<double>(periods_per_year));
    if (m - s <= 0.0) throw config_error("binomial_up_down: volatility implies nonpositive down return");
    return {m + s, m - s};
}

ReturnModel moment_matched_scenarios(const std::vector<double>& mean,
                                     const std::vector<std::vector<double>>& covariance) {
    const int d = static_cast<int>(mean.size());
    if (d == 0) throw config_error("moment_matched_scenarios: empty mean");
    if (covariance.size() != mean.size()) throw config_error("moment_matched_scenarios: dimension mismatch");
    for (const auto& row : covariance)
        if (row.size() != mean.size()) throw config_error("moment_matched_scenarios: covariance not square");
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < i; ++j)
            if (std::abs(covariance[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] -
                         covariance[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)]) > 1e-12)
                throw config_error("moment_matched_scenarios: covariance not symmetric");

    // Deterministic assets (zero row) are kept fixed at their mean.
    std::vector<int> risky;
    for (int i = 0; i < d; ++i) {
        double rowmax = 0.0;
        for (int j = 0; j < d; ++j)
            rowmax = std::max(rowmax, std::abs(covariance[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]));
        if (rowmax > 0.0) risky.push_back(i);
    }
    const int r = static_cast<int>(risky.size());

    // L = V * sqrt(Lambda) on the risky sub-block via cyclic Jacobi; exact
    // moment matching only needs L*L^T = Sigma.
    std::vector<std::vector<double>> a(static_cast<std::size_t>(r), std::vector<double>(static_cast<std::size_t>(r)));
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < r; ++j)
            a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
                covariance[static_cast<std::size_t>(risky[static_cast<std::size_t>(i)])]
                          [static_cast<std::size_t>(risky[static_cast<std::size_t>(j)])];
    std::vector<std::vector<double>> v(static_cast<std::size_t>(r), std::vector<double>(static_cast<std::size_t>(r), 0.0));
    for (int i = 0; i < r; ++i) v[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)] = 1.0;
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < r; ++p)
            for (int q = p + 1; q < r; ++q) off += std::abs(a[static_cast<std::size_t>(p)][static_cast<std::size_t>(q)]);
        if (off < 1e-14) break;
        for (int p = 0; p < r; ++p) {
            for (int q = p + 1; q < r; ++q) {
                const double apq = a[static_cast<std::size_t>(p)][static_cast<std::size_t>(q)];
                if (std::abs(apq) < 1e-16) continue;
                const double app = a[static_cast<std::size_t>(p)][static_cast<std::size_t>(p)];
                const double aqq = a[static_cast<std::size_t>(q)][static_cast<std::size_t>(q)];
                const double theta = 0.5 * std::atan2(2.0 * apq, aqq - app);
                const double c = std::cos(theta), s = std::sin(theta);
                for (int i = 0; i < r; ++i) {
                    const double aip = a[static_cast<std::size_t>(i)][static_cast<std::size_t>(p)];
                    const double aiq = a[static_cast<std::size_t>(i)][static_cast<std::size_t>(q)];
                    a[static_cast<std::size_t>(i)][static_cast<std::size_t>(p)] = c * aip - s * aiq;
                    a[static_cast<std::size_t>(i)][static_cast<std::size_t>(q)] = s * aip + c * aiq;
                }
                for (int i = 0; i < r; ++i) {
                    const double api = a[static_cast<std::size_t>(p)][static_cast<std::size_t>(i)];
                    const double aqi = a[static_cast<std::size_t>(q)][static_cast<std::size_t>(i)];
                    a[static_cast<std::size_t>(p)][static_cast<std::size_t>(i)] = c * api - s * aqi;
                    a[static_cast<std::size_t>(q)][static_cast<std::size_t>(i)] = s * api + c * aqi;
                }
                for (int i = 0; i < r; ++i) {
                    const double vip = v[static_cast<std::size_t>(i)][static_cast<std::size_t>(p)];
                    const double viq = v[static_cast<std::size_t>(i)][static_cast<std::size_t>(q)];
                    v[static_cast<std::size_t>(i)][static_cast<std::size_t>(p)] = c * vip - s * viq;
                    v[static_cast<std::size_t>(i)][static_cast<std::size_t>(q)] = s * vip + c * viq;
                }
            }
        }
    }
    std::vector<std::vector<double>> factor(static_cast<std::size_t>(r), std::vector<double>(static_cast<std::size_t>(r)));
    for (int j = 0; j < r; ++j) {
        double lam = a[static_cast<std::size_t>(j)][static_cast<std::size_t>(j)];
        if (lam < -1e-10) throw config_error("moment_matched_scenarios: covariance not positive semidefinite");
        const double s = std::sqrt(std::max(lam, 0.0));
        for (int i = 0; i < r; ++i)
            factor[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
                v[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] * s;
    }

    const int k = 1 << r;
    ReturnModel model;
    model.probs.assign(static_cast<std::size_t>(k), 1.0 / k);
    model.scenarios.assign(static_cast<std::size_t>(k), std::vector<double>(mean.begin(), mean.end()));
    for (int mask = 0; mask < k; ++mask) {
        for (int i = 0; i < r; ++i) {
            double dot = 0.0;
            for (int j = 0; j < r; ++j) {
                const double eps = (mask >> j) & 1 ? 1.0 : -1.0;
                dot += factor[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] * eps;
            }
            auto& ret = model.scenarios[static_cast<std::size_t>(mask)][static_cast<std::size_t>(risky[static_cast<std::size_t>(i)])];
            ret += dot;
        }
        for (int i = 0; i < d; ++i) {
            const double ret = model.scenarios[static_cast<std::size_t>(mask)][static_cast<std::size_t>(i)];
            if (ret <= 0.0) {
                std::ostringstream os;
                os << "moment_matched_scenarios: nonpositive return " << ret << " in scenario " << mask;
                throw config_error(os.str());
            }
        }
    }
    return model;
}

std::vector<std::string> validate_tree(const ScenarioTree& tree) {
    std::vector<std::string> issues;
    if (!tree.materialized()) {
        if (tree.model()) {
            try {
                tree.model()->validate();
            } catch (const config_error& e) {
                issues.emplace_back(e.what());
            }
        } else {
            issues.emplace_back("implicit tree without return model");
        }
        return issues;
    }

    const auto& nodes = tree.nodes();
    int roots = 0;
    for (const TreeNode& n : nodes) {
        if (n.parent < 0) {
            ++roots;
            if (n.time != 0) issues.push_back("root at nonzero time");
            if (n.cond_prob != 1.0) issues.push_back("root cond_prob != 1");
        } else {
            const TreeNode& p = tree.node(n.parent);
            if (n.time != p.time + 1) issues.push_back("node " + std::to_string(n.id) + ": time != parent time + 1");
        }
        if (n.cond_prob <= 0.0) issues.push_back("node " + std::to_string(n.id) + ": nonpositive cond_prob");
        for (double price : n.prices)
            if (price <= 0.0) {
                issues.push_back("node " + std::to_string(n.id) + ": nonpositive price");
                break;
            }
        if (n.time < tree.horizon()) {
            if (n.children.empty()) {
                issues.push_back("node " + std::to_string(n.id) + ": non-terminal node without children");
            } else {
                double sum = 0.0;
                for (int c : n.children) sum += tree.node(c).cond_prob;
                if (std::abs(sum - 1.0) > kProbTol)
                    issues.push_back("node " + std::to_string(n.id) + ": child probabilities sum to " + std::to_string(sum));
            }
        } else if (!n.children.empty()) {
            issues.push_back("node " + std::to_string(n.id) + ": leaf with children");
        }
    }
    if (roots != 1) issues.push_back("tree has " + std::to_string(roots) + " roots");

    if (tree.iid() && !nodes.empty()) {
        // Every node must branch with the same (returns, prob) multiset.
        std::vector<std::pair<std::vector<double>, double>> ref;
        bool have_ref = false;
        for (const TreeNode& n : nodes) {
            if (n.children.empty()) continue;
            std::vector<std::pair<std::vector<double>, double>> branch;
            for (std::size_t c = 0; c < n.children.size(); ++c)
                branch.emplace_back(tree.child_returns(n.id, static_cast<int>(c)),
                                    tree.node(n.children[c]).cond_prob);
            std::sort(branch.begin(), branch.end());
            if (!have_ref) {
                ref = branch;
                have_ref = true;
                continue;
            }
            bool same = branch.size() == ref.size();
            for (std::size_t i = 0; same && i < branch.size(); ++i) {
                if (std::abs(branch[i].second - ref[i].second) > kProbTol) same = false;
                for (std::size_t j = 0; same && j < branch[i].first.size(); ++j)
                    if (std::abs(branch[i].first[j] - ref[i].first[j]) > kProbTol) same = false;
            }
            if (!same) {
                issues.push_back("node " + std::to_string(n.id) + ": branching differs under iid flag");
                break;
            }
        }
    }
    return issues;
}

}  // namespace meanrisk
