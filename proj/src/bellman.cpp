#include "meanrisk/bellman.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include "meanrisk/errors.hpp"

namespace meanrisk {

double UpperImage::boundary_risk(double neg_mean) const {
    if (vertices.empty()) throw config_error("UpperImage: empty");
    if (neg_mean >= vertices.back()[0]) return vertices.back()[1];
    auto it = std::upper_bound(vertices.begin(), vertices.end(), neg_mean,
                               [](double v, const std::array<double, 2>& p) { return v < p[0]; });
    if (it == vertices.begin()) return vertices.front()[1];
    const auto& hi = *it;
    const auto& lo = *(it - 1);
    const double t = (neg_mean - lo[0]) / (hi[0] - lo[0]);
    return lo[1] + t * (hi[1] - lo[1]);
}

bool UpperImage::contains(const std::array<double, 2>& p, double tol) const {
    if (vertices.empty()) return false;
    if (p[0] < vertices.front()[0] - tol) return false;
    return p[1] >= boundary_risk(std::max(p[0], vertices.front()[0])) - tol;
}

double UpperImage::boundary_distance(const std::array<double, 2>& p) const {
    if (vertices.empty() || p[0] < vertices.front()[0] - 1e-12)
        return std::numeric_limits<double>::infinity();
    return std::abs(p[1] - boundary_risk(std::max(p[0], vertices.front()[0])));
}

UpperImage terminal_upper_image() { return {{{-1.0, -1.0}}}; }

UpperImage scale_upper_image(const UpperImage& image, double wealth) {
    if (wealth <= 0.0) throw config_error("scale_upper_image: wealth must be positive");
    UpperImage out = image;
    for (auto& v : out.vertices) {
        v[0] *= wealth;
        v[1] *= wealth;
    }
    return out;
}

OneStepNode one_step_from_model(const ReturnModel& model) {
    return {model.scenarios, model.probs};
}

OneStepNode one_step_from_tree(const ScenarioTree& tree, int node_id) {
    const TreeNode& n = tree.node(node_id);
    OneStepNode out;
    out.child_returns.reserve(n.children.size());
    out.child_probs.reserve(n.children.size());
    for (std::size_t c = 0; c < n.children.size(); ++c) {
        out.child_returns.push_back(tree.child_returns(node_id, static_cast<int>(c)));
        out.child_probs.push_back(tree.node(n.children[c]).cond_prob);
    }
    return out;
}

namespace {

// Column layout of the one-step VLP: phi (d), then per child a block of
// [nu (k_c), s (2), x (2), u (1)], then z.
struct VlpLayout {
    int d = 0;
    std::vector<std::size_t> block_base;
    std::vector<std::size_t> block_k;
    std::size_t z = 0;
    std::size_t total = 0;

    std::size_t nu(std::size_t c, std::size_t j) const { return block_base[c] + j; }
    std::size_t s(std::size_t c, int comp) const { return block_base[c] + block_k[c] + static_cast<std::size_t>(comp); }
    std::size_t x(std::size_t c, int comp) const { return block_base[c] + block_k[c] + 2 + static_cast<std::size_t>(comp); }
    std::size_t u(std::size_t c) const { return block_base[c] + block_k[c] + 4; }
};

VlpLayout make_layout(const OneStepNode& node, const std::vector<UpperImage>& next_images) {
    VlpLayout lay;
    lay.d = static_cast<int>(node.child_returns.empty() ? 0 : node.child_returns.front().size());
    std::size_t at = static_cast<std::size_t>(lay.d);
    for (const UpperImage& im : next_images) {
        lay.block_base.push_back(at);
        lay.block_k.push_back(im.size());
        at += im.size() + 5;
    }
    lay.z = at;
    lay.total = at + 1;
    return lay;
}

}  // namespace

BiObjectiveLp assemble_one_step_vlp(const OneStepNode& node,
                                    const std::vector<UpperImage>& next_images,
                                    const RiskSpec& spec) {
    spec.validate();
    const std::size_t k = node.child_returns.size();
    if (k == 0) throw config_error("assemble_one_step_vlp: terminal node");
    if (next_images.size() != k) throw config_error("assemble_one_step_vlp: next image per child required");
    for (const UpperImage& im : next_images)
        if (im.empty()) throw solver_error("assemble_one_step_vlp: empty next upper image");

    const VlpLayout lay = make_layout(node, next_images);
    BiObjectiveLp bp;
    LinearProgram& lp = bp.constraints;
    lp.objective.assign(lay.total, 0.0);
    lp.lower.assign(lay.total, 0.0);
    lp.upper.assign(lay.total, lp_inf);
    lp.lower[lay.z] = -lp_inf;
    for (std::size_t c = 0; c < k; ++c) {
        lp.lower[lay.x(c, 0)] = -lp_inf;
        lp.lower[lay.x(c, 1)] = -lp_inf;
    }

    auto add_row = [&lp, &lay](RowSense sense, double rhs) -> std::vector<double>& {
        lp.rows.emplace_back(lay.total, 0.0);
        lp.senses.push_back(sense);
        lp.rhs.push_back(rhs);
        return lp.rows.back();
    };

    {  // budget: value weights sum to 1
        auto& row = add_row(RowSense::eq, 1.0);
        for (int i = 0; i < lay.d; ++i) row[static_cast<std::size_t>(i)] = 1.0;
    }
    for (std::size_t c = 0; c < k; ++c) {
        const auto& g = node.child_returns[c];
        const auto& verts = next_images[c].vertices;
        {  // sum of expansion weights equals realized wealth: sum nu - g.phi = 0
            auto& row = add_row(RowSense::eq, 0.0);
            for (std::size_t j = 0; j < lay.block_k[c]; ++j) row[lay.nu(c, j)] = 1.0;
            for (int i = 0; i < lay.d; ++i) row[static_cast<std::size_t>(i)] = -g[static_cast<std::size_t>(i)];
        }
        for (int comp = 0; comp < 2; ++comp) {  // x = A nu + s
            auto& row = add_row(RowSense::eq, 0.0);
            row[lay.x(c, comp)] = 1.0;
            for (std::size_t j = 0; j < lay.block_k[c]; ++j)
                row[lay.nu(c, j)] = -verts[j][static_cast<std::size_t>(comp)];
            row[lay.s(c, comp)] = -1.0;
        }
        {  // CVaR auxiliary: u >= x2 - z
            auto& row = add_row(RowSense::ge, 0.0);
            row[lay.u(c)] = 1.0;
            row[lay.x(c, 1)] = -1.0;
            row[lay.z] = 1.0;
        }
    }

    bp.obj1.assign(lay.total, 0.0);
    bp.obj2.assign(lay.total, 0.0);
    bp.obj2[lay.z] = 1.0;
    for (std::size_t c = 0; c < k; ++c) {
        bp.obj1[lay.x(c, 0)] = node.child_probs[c];
        bp.obj2[lay.u(c)] = node.child_probs[c] / spec.alpha;
    }
    return bp;
}

void split_one_step_solution(const OneStepNode& node, const std::vector<UpperImage>& next_images,
                             const std::vector<double>& x, std::vector<double>& phi_out,
                             std::vector<double>& child_profiles_out) {
    const VlpLayout lay = make_layout(node, next_images);
    if (x.size() != lay.total) throw config_error("split_one_step_solution: size mismatch");
    phi_out.assign(x.begin(), x.begin() + lay.d);
    child_profiles_out.clear();
    for (std::size_t c = 0; c < node.child_returns.size(); ++c) {
        child_profiles_out.push_back(x[lay.x(c, 0)]);
        child_profiles_out.push_back(x[lay.x(c, 1)]);
    }
}

NodeSolution solve_node(const OneStepNode& node, const std::vector<UpperImage>& next_images,
                        const RiskSpec& spec, const BellmanOptions& opts) {
    BiObjectiveLp bp = assemble_one_step_vlp(node, next_images, spec);
    FrontierVertexList frontier = dichotomic_frontier(bp, opts.frontier);
    if (frontier.vertices.empty()) throw solver_error("solve_node: one-step problem infeasible");

    if (opts.prune_tol > 0.0) frontier = prune_frontier(frontier, opts.prune_tol);
    if (opts.vertex_budget > 0 && frontier.size() > opts.vertex_budget) {
        double tol = std::max(opts.prune_tol, 1e-12);
        while (frontier.size() > opts.vertex_budget) {
            tol *= 4.0;
            frontier = prune_frontier(frontier, tol);
        }
    }

    const VlpLayout lay = make_layout(node, next_images);
    const std::size_t k = node.child_returns.size();
    NodeSolution out;
    out.assets = lay.d;
    out.children = static_cast<int>(k);
    out.vertices = frontier.vertices;
    out.phi.reserve(frontier.size() * static_cast<std::size_t>(lay.d));
    out.child_profiles.reserve(frontier.size() * 2 * k);
    for (std::size_t col = 0; col < frontier.size(); ++col) {
        const std::vector<double>& x = frontier.solutions[col];
        if (x.empty()) throw solver_error("solve_node: pruned frontier lost its solutions");
        for (int i = 0; i < lay.d; ++i) out.phi.push_back(x[static_cast<std::size_t>(i)]);
        for (std::size_t c = 0; c < k; ++c) {
            // Children outside the worst-alpha tail leave x_{c,2} unpinned in
            // the LP (their u_c is zero either way); project the stored
            // successor profile onto the child frontier so every B column
            // carries efficient continuations. Tail children are already
            // tight, so the vertex's objective values are unchanged.
            double wealth_c = 0.0;
            for (int i = 0; i < lay.d; ++i)
                wealth_c += node.child_returns[c][static_cast<std::size_t>(i)] *
                            x[static_cast<std::size_t>(i)];
            const double x1 = x[lay.x(c, 0)];
            const double unit_mean = std::max(x1 / wealth_c, next_images[c].vertices.front()[0]);
            out.child_profiles.push_back(wealth_c * unit_mean);
            out.child_profiles.push_back(wealth_c * next_images[c].boundary_risk(unit_mean));
        }
    }
    return out;
}

StageSolution solve_stage(const ScenarioTree& tree, int t,
                          const std::vector<UpperImage>& next_images_by_node_index,
                          const RiskSpec& spec, const BellmanOptions& opts) {
    StageSolution stage;
    stage.time = t;
    if (t < 0 || t >= tree.horizon()) throw config_error("solve_stage: time out of range");

    if (tree.iid()) {
        if (!tree.model()) throw config_error("solve_stage: iid tree without return model");
        stage.shared = true;
        const OneStepNode node = one_step_from_model(*tree.model());
        // All next images coincide under the i.i.d. shortcut.
        std::vector<UpperImage> next(node.child_returns.size(), next_images_by_node_index.front());
        stage.nodes.push_back(solve_node(node, next, spec, opts));
        return stage;
    }

    if (!tree.materialized()) throw config_error("solve_stage: non-iid tree must be explicit");
    const auto& ids = tree.level(t);
    stage.node_ids.assign(ids.begin(), ids.end());
    stage.nodes.resize(ids.size());
    const std::int64_t n = static_cast<std::int64_t>(ids.size());
    std::vector<std::string> failures(ids.size());
#pragma omp parallel for schedule(dynamic) if (opts.parallel && n > 1)
    for (std::int64_t i = 0; i < n; ++i) {
        const TreeNode& nd = tree.node(ids[static_cast<std::size_t>(i)]);
        try {
            const OneStepNode node = one_step_from_tree(tree, nd.id);
            std::vector<UpperImage> next;
            next.reserve(nd.children.size());
            for (int c : nd.children) {
                // Children are contiguous by construction order within a level;
                // locate by index in the next level.
                const auto& next_ids = tree.level(t + 1);
                const auto it = std::lower_bound(next_ids.begin(), next_ids.end(), c);
                next.push_back(next_images_by_node_index[static_cast<std::size_t>(it - next_ids.begin())]);
            }
            stage.nodes[static_cast<std::size_t>(i)] = solve_node(node, next, spec, opts);
        } catch (const std::exception& e) {
            failures[static_cast<std::size_t>(i)] = e.what();
        }
    }
    for (std::size_t i = 0; i < failures.size(); ++i)
        if (!failures[i].empty())
            throw solver_error("solve_stage: node " + std::to_string(ids[i]) + ": " + failures[i]);
    return stage;
}

std::vector<StageSolution> backward_recursion(const ScenarioTree& tree, const RiskSpec& spec,
                                              const BellmanOptions& opts) {
    spec.validate();
    const int T = tree.horizon();
    std::vector<StageSolution> stages(static_cast<std::size_t>(T));

    if (tree.iid()) {
        std::vector<UpperImage> next{terminal_upper_image()};
        for (int t = T - 1; t >= 0; --t) {
            stages[static_cast<std::size_t>(t)] = solve_stage(tree, t, next, spec, opts);
            next.front() = stages[static_cast<std::size_t>(t)].nodes.front().upper_image();
        }
        return stages;
    }

    if (!tree.materialized()) throw config_error("backward_recursion: non-iid tree must be explicit");
    std::vector<UpperImage> next(tree.level(T).size(), terminal_upper_image());
    for (int t = T - 1; t >= 0; --t) {
        stages[static_cast<std::size_t>(t)] = solve_stage(tree, t, next, spec, opts);
        const StageSolution& st = stages[static_cast<std::size_t>(t)];
        next.clear();
        next.reserve(st.nodes.size());
        for (const NodeSolution& ns : st.nodes) next.push_back(ns.upper_image());
    }
    return stages;
}

std::vector<StageSolution> backward_recursion_serial(const ScenarioTree& tree, const RiskSpec& spec,
                                                     BellmanOptions opts) {
    opts.parallel = false;
    return backward_recursion(tree, spec, opts);
}

UpperImage root_upper_image(const std::vector<StageSolution>& stages) {
    if (stages.empty()) throw config_error("root_upper_image: no stages");
    return stages.front().at(0).upper_image();
}

}  // namespace meanrisk
