#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "meanrisk/errors.hpp"
#include "meanrisk/strategy.hpp"
#include "support/oracles.hpp"

using namespace meanrisk;

namespace {

ReturnModel micro_model() { return {{{1.0, 1.3}, {1.0, 0.9}}, {0.5, 0.5}}; }

UpperImage micro_p0_scaled() {
    // Micro-fixture frontier scaled to wealth 100.
    return {{{-110.0, -90.0}, {-100.0, -100.0}}};
}

}  // namespace

TEST_CASE("select_initial_profile target_mean interpolates") {
    const MeanRiskProfile p =
        select_initial_profile(micro_p0_scaled(), {ProfileTarget::Mode::target_mean, 105.0});
    CHECK(p.neg_mean == doctest::Approx(-105.0));
    CHECK(p.risk == doctest::Approx(-95.0));
}

TEST_CASE("select_initial_profile risk modes") {
    const MeanRiskProfile budget =
        select_initial_profile(micro_p0_scaled(), {ProfileTarget::Mode::risk_budget, -95.0});
    CHECK(budget.neg_mean == doctest::Approx(-105.0));

    const MeanRiskProfile averse =
        select_initial_profile(micro_p0_scaled(), {ProfileTarget::Mode::risk_aversion, 1.0});
    CHECK(averse.neg_mean == doctest::Approx(-100.0));
    CHECK(averse.risk == doctest::Approx(-100.0));

    const MeanRiskProfile greedy =
        select_initial_profile(micro_p0_scaled(), {ProfileTarget::Mode::risk_aversion, 0.0});
    CHECK(greedy.neg_mean == doctest::Approx(-110.0));
}

TEST_CASE("select_initial_profile range errors") {
    CHECK_THROWS_AS(
        select_initial_profile(micro_p0_scaled(), {ProfileTarget::Mode::target_mean, 120.0}),
        config_error);
    CHECK_THROWS_AS(
        select_initial_profile(micro_p0_scaled(), {ProfileTarget::Mode::risk_budget, -120.0}),
        config_error);
    CHECK_THROWS_AS(
        select_initial_profile(micro_p0_scaled(), {ProfileTarget::Mode::risk_aversion, 1.5}),
        config_error);
}

TEST_CASE("forward_step_polyhedral vertex hit and midpoint blend") {
    const OneStepNode node = one_step_from_model(micro_model());
    const std::vector<UpperImage> next(2, terminal_upper_image());
    const NodeSolution sol = solve_node(node, next, {0.5}, {});
    REQUIRE(sol.num_vertices() == 2);

    // Exact vertex hit returns the vertex column.
    const ForwardStep hit = forward_step_polyhedral(sol, 1.0, sol.vertices[0][0], node, next);
    CHECK(hit.value_position[1] == doctest::Approx(1.0));
    CHECK(hit.overshoot == 0.0);

    // Midway target: 50/50 blend of the stock and bond columns, scaled by 100.
    const ForwardStep mid = forward_step_polyhedral(sol, 100.0, -105.0, node, next);
    CHECK(mid.value_position[0] == doctest::Approx(50.0));
    CHECK(mid.value_position[1] == doctest::Approx(50.0));

    // Clamping beyond the frontier range is flagged.
    const ForwardStep clamped = forward_step_polyhedral(sol, 1.0, -2.0, node, next);
    CHECK(clamped.overshoot > 0.0);
    CHECK(clamped.value_position[1] == doctest::Approx(1.0));
}

TEST_CASE("solve_induction_lp endpoints and riskless market") {
    const OneStepNode node = one_step_from_model(micro_model());
    const std::vector<UpperImage> next(2, terminal_upper_image());
    const RiskSpec spec{0.5};
    const ForwardStep ep = solve_induction_lp(node, 1.0, -1.1, next, spec);
    CHECK(ep.value_position[1] == doctest::Approx(1.0));  // all-in max-mean column

    const OneStepNode flat = one_step_from_model({{{1.05, 1.05}}, {1.0}});
    const ForwardStep a = solve_induction_lp(flat, 1.0, -1.05, {terminal_upper_image()}, spec);
    const ForwardStep b = solve_induction_lp(flat, 1.0, -1.049, {terminal_upper_image()}, spec);
    CHECK(a.child_profiles[0][1] == doctest::Approx(b.child_profiles[0][1]).epsilon(1e-9));

    CHECK_THROWS_AS(solve_induction_lp(node, 1.0, -5.0, next, spec), config_error);
}

TEST_CASE("cross-method equivalence on random instances") {
    std::mt19937_64 gen(17);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 25; ++trial) {
        const int k = 2 + static_cast<int>(gen() % 3);
        const int d = 2 + static_cast<int>(gen() % 2);
        const ReturnModel m = oracles::random_model(gen, k, d);
        const RiskSpec spec{0.2 + 0.6 * u(gen)};
        const ScenarioTree tree = build_iid_tree(m, 2);
        const auto stages = backward_recursion(tree, spec, {});
        const NodeSolution& sol = stages[0].nodes.front();
        const OneStepNode node = one_step_from_model(m);
        std::vector<UpperImage> next(static_cast<std::size_t>(k),
                                     stages[1].nodes.front().upper_image());

        const double lo = sol.vertices.front()[0], hi = sol.vertices.back()[0];
        const double target = lo + u(gen) * (hi - lo);
        const ForwardStep poly = forward_step_polyhedral(sol, 1.0, target, node, next);
        const ForwardStep lp = solve_induction_lp(node, 1.0, target, next, spec);
        // Both must hit the same frontier point; compare realized profiles.
        for (std::size_t c = 0; c < poly.child_profiles.size(); ++c) {
            CHECK(poly.child_profiles[c][1] == doctest::Approx(lp.child_profiles[c][1]).epsilon(5e-6));
        }
        double mean_poly = 0.0, mean_lp = 0.0;
        for (std::size_t c = 0; c < poly.child_profiles.size(); ++c) {
            mean_poly += node.child_probs[c] * poly.child_profiles[c][0];
            mean_lp += node.child_probs[c] * lp.child_profiles[c][0];
        }
        CHECK(mean_poly == doctest::Approx(mean_lp).epsilon(5e-6));
        CHECK(mean_poly == doctest::Approx(target).epsilon(1e-8));
    }
}

TEST_CASE("moving_scalarization edges and vertices") {
    // Edge with slope -1 gives lambda = 0.5.
    const UpperImage sym{{{-1.1, -0.9}, {-1.0, -1.0}}};
    const auto mid = moving_scalarization(sym, {-1.05, -0.95});
    CHECK(mid[0] == doctest::Approx(0.5));
    CHECK(mid[1] == doctest::Approx(0.5));

    // Max-mean vertex: interval starting at 0.
    const auto ext = moving_scalarization(sym, {-1.1, -0.9});
    CHECK(ext[0] == doctest::Approx(0.0));
    CHECK(ext[1] == doctest::Approx(0.5));

    // Min-risk vertex: interval ending at 1.
    const auto last = moving_scalarization(sym, {-1.0, -1.0});
    CHECK(last[0] == doctest::Approx(0.5));
    CHECK(last[1] == doctest::Approx(1.0));

    // Interior vertex spans its two incident edge weights.
    const UpperImage tri{{{-2.0, 0.0}, {-1.0, -0.8}, {0.0, -1.0}}};
    const auto v = moving_scalarization(tri, {-1.0, -0.8});
    CHECK(v[0] == doctest::Approx(1.0 / 1.8));
    CHECK(v[1] == doctest::Approx(1.0 / 1.2));
    CHECK(v[0] < v[1]);

    CHECK_THROWS_AS(moving_scalarization(sym, {-1.05, -0.5}), config_error);
}

TEST_CASE("forward path on a deterministic market") {
    const ReturnModel det{{{1.05, 1.05}}, {1.0}};
    const ScenarioTree tree = build_iid_tree(det, 3);
    const auto stages = backward_recursion(tree, {0.5}, {});
    const UpperImage p0 = scale_upper_image(root_upper_image(stages), 100.0);
    const MeanRiskProfile x0{p0.vertices[0][0], p0.vertices[0][1]};

    std::vector<int> path{0};
    int id = 0;
    for (int t = 0; t < 3; ++t) {
        id = tree.node(id).children[0];
        path.push_back(id);
    }
    const auto records = forward_strategy_path(tree, stages, 100.0, x0, path);
    REQUIRE(records.size() == 4);
    CHECK(records.back().wealth == doctest::Approx(100.0 * std::pow(1.05, 3)).epsilon(1e-9));
    for (const auto& r : records) {
        if (r.time == 3) continue;
        double total = 0.0;
        for (double v : r.value_position) total += v;
        CHECK(total == doctest::Approx(r.wealth).epsilon(1e-9));
    }
}

TEST_CASE("max-mean start propagates all-stock on the micro-fixture") {
    const ScenarioTree tree = build_iid_tree(micro_model(), 2);
    const auto stages = backward_recursion(tree, {0.5}, {});
    const UpperImage p0 = root_upper_image(stages);
    const MeanRiskProfile x0{p0.vertices.front()[0], p0.vertices.front()[1]};

    // Down-branch path: ids 0 -> 2 -> its second child.
    const std::vector<int> path{0, tree.node(0).children[1],
                                tree.node(tree.node(0).children[1]).children[1]};
    const auto records = forward_strategy_path(tree, stages, 1.0, x0, path);
    for (const auto& r : records) {
        if (static_cast<std::size_t>(r.time) >= 2) continue;
        CHECK(r.value_position[1] == doctest::Approx(r.wealth).epsilon(1e-7));
    }
}

TEST_CASE("path efficiency on a moment-matched tree") {
    const ReturnModel m = moment_matched_scenarios(
        {1.002, 1.02, 1.04}, {{0.0, 0.0, 0.0}, {0.0, 4e-4, 1e-4}, {0.0, 1e-4, 2.5e-3}});
    const ScenarioTree tree = build_iid_tree(m, 3);
    const RiskSpec spec{0.1};
    const auto stages = backward_recursion(tree, spec, {});
    const UpperImage p0 = root_upper_image(stages);

    for (int pick = 0; pick < 4; ++pick) {
        const double lo = p0.vertices.front()[0], hi = p0.vertices.back()[0];
        const double q = lo + (hi - lo) * static_cast<double>(pick) / 3.0;
        const MeanRiskProfile x0{q, p0.boundary_risk(q)};
        std::mt19937_64 gen(static_cast<std::uint64_t>(pick));
        std::vector<int> path{0};
        int id = 0;
        for (int t = 0; t < 3; ++t) {
            id = tree.node(id).children[gen() % 4];
            path.push_back(id);
        }
        const auto records = forward_strategy_path(tree, stages, 1.0, x0, path);
        for (const auto& r : records) {
            if (r.time == 3) {
                CHECK(r.profile.neg_mean == doctest::Approx(-r.wealth).epsilon(1e-8));
                continue;
            }
            const auto& sol = stages[static_cast<std::size_t>(r.time)].nodes.front();
            const UpperImage unit = sol.upper_image();
            CHECK(unit.boundary_distance({r.profile.neg_mean / r.wealth, r.profile.risk / r.wealth}) <
                  1e-6);
            CHECK(r.lambda_lo >= 0.0);
            CHECK(r.lambda_hi <= 1.0);
            CHECK(r.lambda_lo <= r.lambda_hi + 1e-12);
        }
    }
}

TEST_CASE("myopic corner solutions") {
    const OneStepNode node = one_step_from_model(micro_model());
    const RiskSpec spec{0.5};
    const auto greedy = strategy_weights(myopic_strategy(0.0), node, spec);
    CHECK(greedy[1] == doctest::Approx(1.0));  // positive premium, all stock
    const auto averse = strategy_weights(myopic_strategy(1.0), node, spec);
    CHECK(averse[0] == doctest::Approx(1.0));  // riskless bond present, all bond
    CHECK_THROWS_AS(myopic_strategy(1.5), config_error);
}

TEST_CASE("naive strategy splits evenly") {
    const auto w = strategy_weights(naive_strategy(), one_step_from_model(micro_model()), {0.5});
    CHECK(w[0] == doctest::Approx(0.5));
    CHECK(w[1] == doctest::Approx(0.5));
}

TEST_CASE("evaluate_strategy baselines at desk-scale rates") {
    const auto [u, d] = binomial_up_down(1.05, 0.2, 250);
    const ScenarioTree tree = build_binomial(1.05, 1.01, u, d, 0.5, 250, 10.0);
    const RiskSpec spec{0.01};

    const auto bond = evaluate_strategy(tree, fixed_weight_strategy({1.0, 0.0}), spec, 100.0);
    CHECK(bond.neg_mean == doctest::Approx(-110.46).epsilon(1e-4));
    CHECK(bond.risk == doctest::Approx(-110.46).epsilon(1e-4));

    const auto stock = evaluate_strategy(tree, fixed_weight_strategy({0.0, 1.0}), spec, 100.0);
    CHECK(stock.neg_mean == doctest::Approx(-162.89).epsilon(1e-4));

    const auto naive = evaluate_strategy(tree, naive_strategy(), spec, 100.0);
    CHECK(naive.neg_mean == doctest::Approx(-134.14).epsilon(1e-4));

    const auto zero = evaluate_strategy(tree, naive_strategy(), spec, 0.0);
    CHECK(zero.neg_mean == doctest::Approx(0.0));
    CHECK(zero.risk == doctest::Approx(0.0));
}

TEST_CASE("baseline profiles lie inside the dynamic upper image") {
    const ReturnModel m = moment_matched_scenarios(
        {1.002, 1.02, 1.04}, {{0.0, 0.0, 0.0}, {0.0, 4e-4, 1e-4}, {0.0, 1e-4, 2.5e-3}});
    const ScenarioTree tree = build_iid_tree(m, 3);
    const RiskSpec spec{0.1};
    const UpperImage p0 = root_upper_image(backward_recursion(tree, spec, {}));

    const auto myo = evaluate_strategy(tree, myopic_strategy(0.5), spec, 1.0);
    const auto nai = evaluate_strategy(tree, naive_strategy(), spec, 1.0);
    CHECK(p0.contains({myo.neg_mean, myo.risk}, 1e-9));
    CHECK(p0.contains({nai.neg_mean, nai.risk}, 1e-9));
}
