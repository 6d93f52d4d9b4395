#include "meanrisk/strategy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "meanrisk/errors.hpp"
#include "meanrisk/lp.hpp"

namespace meanrisk {

namespace {

std::string range_msg(const char* what, double lo, double hi, double got) {
    return std::string(what) + " out of range: attainable [" + std::to_string(lo) + ", " +
           std::to_string(hi) + "], requested " + std::to_string(got);
}

// Lambda of the edge (i, i+1): lambda / (1 - lambda) = dA1 / (-dA2).
double edge_lambda(const UpperImage& im, std::size_t i) {
    const double d1 = im.vertices[i + 1][0] - im.vertices[i][0];
    const double d2 = im.vertices[i][1] - im.vertices[i + 1][1];
    if (d1 + d2 <= 0.0) return 0.5;
    return d1 / (d1 + d2);
}

}  // namespace

MeanRiskProfile select_initial_profile(const UpperImage& p0, const ProfileTarget& target) {
    if (p0.empty()) throw config_error("select_initial_profile: empty upper image");
    const auto& v = p0.vertices;

    switch (target.mode) {
        case ProfileTarget::Mode::target_mean: {
            const double neg = -target.value;
            if (neg < v.front()[0] - 1e-9 || neg > v.back()[0] + 1e-9)
                throw config_error(range_msg("target mean", -v.back()[0], -v.front()[0], target.value));
            const double q = std::clamp(neg, v.front()[0], v.back()[0]);
            return {q, p0.boundary_risk(q)};
        }
        case ProfileTarget::Mode::risk_budget: {
            const double rho = target.value;
            if (rho < v.back()[1] - 1e-9 || rho > v.front()[1] + 1e-9)
                throw config_error(range_msg("risk budget", v.back()[1], v.front()[1], rho));
            const double r = std::clamp(rho, v.back()[1], v.front()[1]);
            // Risk is strictly decreasing along the vertex order.
            for (std::size_t i = 0; i + 1 < v.size(); ++i) {
                if (r <= v[i][1] && r >= v[i + 1][1]) {
                    const double t = (v[i][1] - r) / (v[i][1] - v[i + 1][1]);
                    return {v[i][0] + t * (v[i + 1][0] - v[i][0]), r};
                }
            }
            return {v.front()[0], v.front()[1]};
        }
        case ProfileTarget::Mode::risk_aversion: {
            const double lam = target.value;
            if (lam < 0.0 || lam > 1.0) throw config_error(range_msg("risk aversion", 0.0, 1.0, lam));
            std::size_t best = 0;
            double best_val = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < v.size(); ++i) {
                const double val = (1.0 - lam) * v[i][0] + lam * v[i][1];
                if (val < best_val - 1e-15 || (std::abs(val - best_val) <= 1e-15 && v[i][1] < v[best][1])) {
                    best_val = val;
                    best = i;
                }
            }
            return {v[best][0], v[best][1]};
        }
    }
    throw config_error("select_initial_profile: unknown target mode");
}

ForwardStep forward_step_polyhedral(const NodeSolution& sol, double wealth, double neg_mean_target,
                                    const OneStepNode& node,
                                    const std::vector<UpperImage>& next_images) {
    if (sol.vertices.empty()) throw solver_error("forward_step_polyhedral: empty vertex matrix");
    if (wealth <= 0.0) throw config_error("forward_step_polyhedral: wealth must be positive");
    const std::size_t n = sol.num_vertices();
    const std::size_t d = static_cast<std::size_t>(sol.assets);
    const std::size_t kc = static_cast<std::size_t>(sol.children);
    double u = neg_mean_target / wealth;

    ForwardStep out;
    if (u < sol.vertices.front()[0]) {
        out.overshoot = sol.vertices.front()[0] - u;
        u = sol.vertices.front()[0];
    } else if (u > sol.vertices.back()[0]) {
        out.overshoot = u - sol.vertices.back()[0];
        u = sol.vertices.back()[0];
    }

    std::size_t i = 0;
    while (i + 1 < n && sol.vertices[i + 1][0] <= u) ++i;
    double w = 1.0;
    std::size_t j = i;
    if (u > sol.vertices[i][0] && i + 1 < n) {
        j = i + 1;
        w = (u - sol.vertices[j][0]) / (sol.vertices[i][0] - sol.vertices[j][0]);
    }

    out.value_position.resize(d);
    for (std::size_t a = 0; a < d; ++a)
        out.value_position[a] = wealth * (w * sol.phi[i * d + a] + (1.0 - w) * sol.phi[j * d + a]);
    out.child_profiles.resize(kc);
    for (std::size_t c = 0; c < kc; ++c) {
        const std::size_t off = 2 * kc;
        const double x1 =
            w * sol.child_profiles[i * off + 2 * c] + (1.0 - w) * sol.child_profiles[j * off + 2 * c];
        // Blending two on-frontier profiles gives a chord point; project the
        // risk component back onto the child frontier at the blended mean.
        double wealth_c = 0.0;
        for (std::size_t a = 0; a < d; ++a)
            wealth_c += node.child_returns[c][a] * out.value_position[a] / wealth;
        const double unit_mean = std::max(x1 / wealth_c, next_images[c].vertices.front()[0]);
        out.child_profiles[c] = {wealth * wealth_c * unit_mean,
                                 wealth * wealth_c * next_images[c].boundary_risk(unit_mean)};
    }
    return out;
}

ForwardStep solve_induction_lp(const OneStepNode& node, double wealth, double neg_mean_target,
                               const std::vector<UpperImage>& next_images, const RiskSpec& spec) {
    if (wealth <= 0.0) throw config_error("solve_induction_lp: wealth must be positive");
    BiObjectiveLp bp = assemble_one_step_vlp(node, next_images, spec);
    LinearProgram lp = bp.constraints;
    lp.rows.push_back(bp.obj1);
    lp.senses.push_back(RowSense::le);
    lp.rhs.push_back(neg_mean_target / wealth + 1e-11);
    lp.objective = bp.obj2;
    LpSolution s = solve_lp(lp);
    if (s.status == LpStatus::infeasible)
        throw config_error("solve_induction_lp: expectation target unattainable");
    if (s.status != LpStatus::optimal) throw solver_error("solve_induction_lp: solve failed");

    std::vector<double> phi, profiles;
    split_one_step_solution(node, next_images, s.x, phi, profiles);
    ForwardStep out;
    out.value_position.resize(phi.size());
    for (std::size_t a = 0; a < phi.size(); ++a) out.value_position[a] = wealth * phi[a];
    out.child_profiles.resize(node.child_returns.size());
    for (std::size_t c = 0; c < out.child_profiles.size(); ++c) {
        // Same canonicalization as the stored B columns: non-tail child risk
        // components are unpinned in the LP, so project them onto the child
        // frontier.
        double wealth_c = 0.0;
        for (std::size_t a = 0; a < phi.size(); ++a)
            wealth_c += node.child_returns[c][a] * phi[a];
        const double unit_mean =
            std::max(profiles[2 * c] / wealth_c, next_images[c].vertices.front()[0]);
        out.child_profiles[c] = {wealth * wealth_c * unit_mean,
                                 wealth * wealth_c * next_images[c].boundary_risk(unit_mean)};
    }
    return out;
}

std::array<double, 2> moving_scalarization(const UpperImage& image, const MeanRiskProfile& point) {
    if (image.empty()) throw config_error("moving_scalarization: empty frontier");
    const auto& v = image.vertices;
    if (image.boundary_distance({point.neg_mean, point.risk}) > 1e-7)
        throw config_error("moving_scalarization: point is not on the frontier");
    if (v.size() == 1) return {0.0, 1.0};

    const double q = std::clamp(point.neg_mean, v.front()[0], v.back()[0]);
    // Vertex hit: closed interval spanned by the incident edge weights.
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (std::abs(q - v[i][0]) <= 1e-9) {
            const double lo = (i == 0) ? 0.0 : edge_lambda(image, i - 1);
            const double hi = (i + 1 == v.size()) ? 1.0 : edge_lambda(image, i);
            return {lo, hi};
        }
    }
    for (std::size_t i = 0; i + 1 < v.size(); ++i) {
        if (q > v[i][0] && q < v[i + 1][0]) {
            const double lam = edge_lambda(image, i);
            return {lam, lam};
        }
    }
    return {0.0, 1.0};
}

namespace {

struct PathContext {
    OneStepNode node;          // one-step data at the current node
    int child_index = -1;      // realized branch
    std::vector<double> prices;
};

}  // namespace

std::vector<TradeRecord> forward_strategy_path(const ScenarioTree& tree,
                                               const std::vector<StageSolution>& stages, double v0,
                                               const MeanRiskProfile& x0, const std::vector<int>& path,
                                               std::vector<std::string>* warnings) {
    const int T = tree.horizon();
    if (static_cast<int>(path.size()) != T + 1)
        throw config_error("forward_strategy_path: path must list T+1 nodes");
    if (static_cast<int>(stages.size()) != T)
        throw config_error("forward_strategy_path: stage solutions must cover t = 0..T-1");
    if (v0 <= 0.0) throw config_error("forward_strategy_path: v0 must be positive");

    const bool implicit = !tree.materialized();
    if (!implicit && path.front() != tree.root())
        throw config_error("forward_strategy_path: path must start at the root");

    std::vector<double> prices;
    if (implicit)
        prices.assign(static_cast<std::size_t>(tree.assets()), 1.0);

    std::vector<TradeRecord> out;
    out.reserve(static_cast<std::size_t>(T) + 1);
    double wealth = v0;
    MeanRiskProfile carried = x0;

    for (int t = 0; t <= T; ++t) {
        TradeRecord rec;
        rec.time = t;
        rec.node = path[static_cast<std::size_t>(t)];
        rec.wealth = wealth;
        rec.profile = carried;

        if (t == T) {
            rec.lambda_lo = 0.0;
            rec.lambda_hi = 1.0;
            out.push_back(std::move(rec));
            break;
        }

        const StageSolution& stage = stages[static_cast<std::size_t>(t)];
        std::size_t node_index = 0;
        OneStepNode step_node;
        if (implicit) {
            step_node = one_step_from_model(*tree.model());
        } else {
            const auto& ids = tree.level(t);
            const auto it = std::lower_bound(ids.begin(), ids.end(), rec.node);
            if (it == ids.end() || *it != rec.node)
                throw config_error("forward_strategy_path: node " + std::to_string(rec.node) +
                                   " is not at level " + std::to_string(t));
            node_index = static_cast<std::size_t>(it - ids.begin());
            step_node = one_step_from_tree(tree, rec.node);
        }
        const NodeSolution& sol = stage.at(node_index);

        const auto lam = moving_scalarization(sol.upper_image(),
                                              {carried.neg_mean / wealth, carried.risk / wealth});
        rec.lambda_lo = lam[0];
        rec.lambda_hi = lam[1];

        std::vector<UpperImage> next_images;
        if (t + 1 == T) {
            next_images.assign(step_node.child_returns.size(), terminal_upper_image());
        } else {
            const StageSolution& next_stage = stages[static_cast<std::size_t>(t) + 1];
            if (next_stage.shared) {
                next_images.assign(step_node.child_returns.size(),
                                   next_stage.nodes.front().upper_image());
            } else {
                for (int child_id : tree.node(rec.node).children) {
                    const auto cit = std::lower_bound(next_stage.node_ids.begin(),
                                                      next_stage.node_ids.end(), child_id);
                    next_images.push_back(
                        next_stage.nodes[static_cast<std::size_t>(cit - next_stage.node_ids.begin())]
                            .upper_image());
                }
            }
        }

        ForwardStep step = forward_step_polyhedral(sol, wealth, carried.neg_mean, step_node, next_images);
        if (step.overshoot > 1e-9 && warnings)
            warnings->push_back("t=" + std::to_string(t) + ": target clamped to the frontier range by " +
                                std::to_string(step.overshoot));
        rec.value_position = step.value_position;
        const std::vector<double>& S = implicit ? prices : tree.node(rec.node).prices;
        rec.position.resize(step.value_position.size());
        for (std::size_t a = 0; a < S.size(); ++a) rec.position[a] = step.value_position[a] / S[a];

        // Realized branch.
        int c;
        if (implicit) {
            c = path[static_cast<std::size_t>(t) + 1];
            if (c < 0 || c >= static_cast<int>(step_node.child_returns.size()))
                throw config_error("forward_strategy_path: branch index out of range");
        } else {
            const auto& ch = tree.node(rec.node).children;
            const auto it = std::find(ch.begin(), ch.end(), path[static_cast<std::size_t>(t) + 1]);
            if (it == ch.end())
                throw config_error("forward_strategy_path: path node " +
                                   std::to_string(path[static_cast<std::size_t>(t) + 1]) +
                                   " is not a child of " + std::to_string(rec.node));
            c = static_cast<int>(it - ch.begin());
        }

        double next_wealth = 0.0;
        const auto& g = step_node.child_returns[static_cast<std::size_t>(c)];
        for (std::size_t a = 0; a < g.size(); ++a) next_wealth += step.value_position[a] * g[a];
        if (implicit)
            for (std::size_t a = 0; a < prices.size(); ++a) prices[a] *= g[a];

        carried = {step.child_profiles[static_cast<std::size_t>(c)][0],
                   step.child_profiles[static_cast<std::size_t>(c)][1]};
        wealth = next_wealth;
        out.push_back(std::move(rec));
    }
    return out;
}

StaticStrategy myopic_strategy(double lambda) {
    if (lambda < 0.0 || lambda > 1.0) throw config_error("myopic_strategy: lambda must be in [0,1]");
    return {StaticStrategy::Rule::myopic, lambda, {}};
}

StaticStrategy naive_strategy() { return {StaticStrategy::Rule::naive, 0.0, {}}; }

StaticStrategy fixed_weight_strategy(std::vector<double> weights) {
    double sum = 0.0;
    for (double w : weights) {
        if (w < -1e-12) throw config_error("fixed_weight_strategy: negative weight");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw config_error("fixed_weight_strategy: weights must sum to 1");
    return {StaticStrategy::Rule::fixed, 0.0, std::move(weights)};
}

std::vector<double> strategy_weights(const StaticStrategy& strategy, const OneStepNode& node,
                                     const RiskSpec& spec) {
    const std::size_t d = node.child_returns.empty() ? 0 : node.child_returns.front().size();
    switch (strategy.rule) {
        case StaticStrategy::Rule::naive:
            return std::vector<double>(d, 1.0 / static_cast<double>(d));
        case StaticStrategy::Rule::fixed:
            if (strategy.weights.size() != d) throw config_error("strategy_weights: dimension mismatch");
            return strategy.weights;
        case StaticStrategy::Rule::myopic:
            break;
    }

    // One-period scalarized problem: min (1-lambda)(-E[g.phi]) + lambda CVaR(g.phi)
    // over the simplex. Columns: phi (d), u (k), z.
    const std::size_t k = node.child_returns.size();
    LinearProgram lp;
    const std::size_t z = d + k;
    lp.objective.assign(d + k + 1, 0.0);
    lp.lower.assign(d + k + 1, 0.0);
    lp.upper.assign(d + k + 1, lp_inf);
    lp.lower[z] = -lp_inf;
    for (std::size_t c = 0; c < k; ++c) {
        for (std::size_t a = 0; a < d; ++a)
            lp.objective[a] -= (1.0 - strategy.lambda) * node.child_probs[c] * node.child_returns[c][a];
        lp.objective[d + c] = strategy.lambda * node.child_probs[c] / spec.alpha;
    }
    lp.objective[z] = strategy.lambda;

    lp.rows.emplace_back(d + k + 1, 0.0);
    for (std::size_t a = 0; a < d; ++a) lp.rows.back()[a] = 1.0;
    lp.senses.push_back(RowSense::eq);
    lp.rhs.push_back(1.0);
    for (std::size_t c = 0; c < k; ++c) {  // u_c + g_c.phi + z >= 0
        lp.rows.emplace_back(d + k + 1, 0.0);
        auto& row = lp.rows.back();
        row[d + c] = 1.0;
        row[z] = 1.0;
        for (std::size_t a = 0; a < d; ++a) row[a] = node.child_returns[c][a];
        lp.senses.push_back(RowSense::ge);
        lp.rhs.push_back(0.0);
    }
    LpSolution s = solve_lp(lp);
    if (s.status != LpStatus::optimal) throw solver_error("strategy_weights: myopic solve failed");
    return {s.x.begin(), s.x.begin() + static_cast<std::ptrdiff_t>(d)};
}

MeanRiskProfile evaluate_strategy(const ScenarioTree& tree, const StaticStrategy& strategy,
                                  const RiskSpec& spec, double v0) {
    spec.validate();
    if (v0 < 0.0) throw config_error("evaluate_strategy: negative initial wealth");
    if (v0 == 0.0) return {0.0, 0.0};

    if (tree.iid()) {
        if (!tree.model()) throw config_error("evaluate_strategy: iid tree without return model");
        // Constant value weights under i.i.d. returns: closed-form recursion.
        const std::vector<double> w = strategy_weights(strategy, one_step_from_model(*tree.model()), spec);
        return fixed_mix_profile(*tree.model(), tree.horizon(), spec, w, v0);
    }

    if (!tree.materialized()) throw config_error("evaluate_strategy: tree not materialized");
    const int T = tree.horizon();
    std::vector<double> wealth(tree.nodes().size(), 0.0);
    wealth[static_cast<std::size_t>(tree.root())] = v0;
    for (int t = 0; t < T; ++t) {
        for (int id : tree.level(t)) {
            const OneStepNode node = one_step_from_tree(tree, id);
            const std::vector<double> w = strategy_weights(strategy, node, spec);
            double sum = 0.0;
            for (double x : w) sum += x;
            if (std::abs(sum - 1.0) > 1e-9)
                throw solver_error("evaluate_strategy: self-financing violation at node " + std::to_string(id));
            const double v = wealth[static_cast<std::size_t>(id)];
            const auto& ch = tree.node(id).children;
            for (std::size_t c = 0; c < ch.size(); ++c) {
                double g = 0.0;
                for (std::size_t a = 0; a < w.size(); ++a) g += w[a] * node.child_returns[c][a];
                wealth[static_cast<std::size_t>(ch[c])] = v * g;
            }
        }
    }
    const auto& leaves = tree.level(T);
    std::vector<double> terminal(leaves.size());
    for (std::size_t i = 0; i < leaves.size(); ++i) terminal[i] = wealth[static_cast<std::size_t>(leaves[i])];
    const auto profiles = composed_profile(tree, spec, terminal);
    return profiles[static_cast<std::size_t>(tree.root())];
}

}  // namespace meanrisk
