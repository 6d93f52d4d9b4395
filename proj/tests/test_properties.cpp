#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "meanrisk/bellman.hpp"
#include "meanrisk/risk.hpp"

using namespace meanrisk;

namespace {

ConditionalDistribution random_dist(std::mt19937_64& gen, int max_k = 8) {
    std::uniform_real_distribution<double> val(-5.0, 5.0);
    std::uniform_real_distribution<double> pr(0.05, 1.0);
    const int k = 2 + static_cast<int>(gen() % static_cast<std::uint64_t>(max_k - 1));
    ConditionalDistribution d;
    d.values.resize(static_cast<std::size_t>(k));
    d.probs.resize(static_cast<std::size_t>(k));
    double sum = 0.0;
    for (int i = 0; i < k; ++i) {
        d.values[static_cast<std::size_t>(i)] = val(gen);
        d.probs[static_cast<std::size_t>(i)] = pr(gen);
        sum += d.probs[static_cast<std::size_t>(i)];
    }
    double acc = 0.0;
    for (int i = 0; i < k - 1; ++i) {
        d.probs[static_cast<std::size_t>(i)] /= sum;
        acc += d.probs[static_cast<std::size_t>(i)];
    }
    d.probs.back() = 1.0 - acc;
    return d;
}

double random_alpha(std::mt19937_64& gen) {
    std::uniform_real_distribution<double> u(0.02, 1.0);
    return u(gen);
}

}  // namespace

TEST_CASE("CVaR coherence axioms on 1000 random distributions") {
    std::mt19937_64 gen(2024);
    std::uniform_real_distribution<double> u(0.1, 3.0);
    for (int trial = 0; trial < 1000; ++trial) {
        const RiskSpec spec{random_alpha(gen)};
        const ConditionalDistribution d = random_dist(gen);
        const double rho = one_step_cvar(spec, d);

        // Cash invariance.
        const double c = u(gen) - 1.5;
        ConditionalDistribution shifted = d;
        for (auto& v : shifted.values) v += c;
        CHECK(one_step_cvar(spec, shifted) == doctest::Approx(rho - c).epsilon(1e-9));

        // Positive homogeneity.
        const double lam = u(gen);
        ConditionalDistribution scaled = d;
        for (auto& v : scaled.values) v *= lam;
        CHECK(one_step_cvar(spec, scaled) == doctest::Approx(lam * rho).epsilon(1e-9));

        // Monotonicity: Y >= X pointwise implies cvar(Y) <= cvar(X).
        ConditionalDistribution larger = d;
        for (auto& v : larger.values) v += u(gen);
        CHECK(one_step_cvar(spec, larger) <= rho + 1e-9);

        // Convexity on mixtures against a second payoff on the same atoms.
        ConditionalDistribution other = d;
        for (auto& v : other.values) v = u(gen) - 1.5;
        const double theta = 0.5 * u(gen) / 1.5;
        ConditionalDistribution mix = d;
        for (std::size_t i = 0; i < mix.values.size(); ++i)
            mix.values[i] = theta * d.values[i] + (1.0 - theta) * other.values[i];
        CHECK(one_step_cvar(spec, mix) <=
              theta * rho + (1.0 - theta) * one_step_cvar(spec, other) + 1e-9);

        // CVaR dominates the negative expectation; equality at alpha = 1.
        CHECK(rho >= -one_step_mean(d) - 1e-9);
        CHECK(one_step_cvar({1.0}, d) == doctest::Approx(-one_step_mean(d)).epsilon(1e-9));
    }
}

TEST_CASE("two-level recursiveness on random trees") {
    std::mt19937_64 gen(99);
    std::uniform_real_distribution<double> val(0.1, 3.0);
    for (int trial = 0; trial < 200; ++trial) {
        const RiskSpec spec{random_alpha(gen)};
        const int k = 2 + static_cast<int>(gen() % 3);
        ReturnModel m;
        m.scenarios.assign(static_cast<std::size_t>(k), {1.0});
        m.probs.assign(static_cast<std::size_t>(k), 1.0 / static_cast<double>(k));
        const ScenarioTree tree = build_iid_tree(m, 2);

        std::vector<double> terminal(tree.level(2).size());
        for (auto& v : terminal) v = val(gen);
        const double direct = composed_profile(tree, spec, terminal)[0].risk;

        // Collapse the last level by hand, then apply one more step.
        ConditionalDistribution outer;
        for (int mid = 0; mid < k; ++mid) {
            ConditionalDistribution inner;
            for (int c = 0; c < k; ++c) {
                inner.values.push_back(terminal[static_cast<std::size_t>(mid * k + c)]);
                inner.probs.push_back(m.probs[static_cast<std::size_t>(c)]);
            }
            outer.values.push_back(-one_step_cvar(spec, inner));
            outer.probs.push_back(m.probs[static_cast<std::size_t>(mid)]);
        }
        CHECK(direct == doctest::Approx(one_step_cvar(spec, outer)).epsilon(1e-10));
    }
}

TEST_CASE("scaling law on 100 random frontiers") {
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        // Random convex frontier built directly.
        const int n = 2 + static_cast<int>(gen() % 6);
        UpperImage p;
        double x = -2.0 - u(gen), y = -0.1 * u(gen), slope = -4.0 - u(gen);
        for (int i = 0; i < n; ++i) {
            p.vertices.push_back({x, y});
            const double dx = 0.1 + u(gen);
            x += dx;
            slope += (1.0 + u(gen));  // strictly increasing, stays negative early
            y += slope < 0 ? slope * dx : -0.01 * dx;
        }
        for (double v : {0.5, 1.0, 100.0}) {
            const UpperImage s = scale_upper_image(p, v);
            for (std::size_t i = 0; i < p.size(); ++i) {
                CHECK(std::abs(s.vertices[i][0] - v * p.vertices[i][0]) <=
                      1e-12 * std::abs(v * p.vertices[i][0]));
                CHECK(std::abs(s.vertices[i][1] - v * p.vertices[i][1]) <=
                      1e-12 * std::abs(v * p.vertices[i][1]));
            }
        }
    }
}

TEST_CASE("stage frontiers satisfy ordering, convexity and dominance") {
    std::mt19937_64 gen(31);
    std::uniform_real_distribution<double> ret(0.8, 1.3);
    for (int trial = 0; trial < 10; ++trial) {
        const int k = 2 + static_cast<int>(gen() % 2);
        const int d = 2 + static_cast<int>(gen() % 2);
        ReturnModel m;
        m.scenarios.assign(static_cast<std::size_t>(k), std::vector<double>(static_cast<std::size_t>(d)));
        for (auto& scen : m.scenarios) {
            scen[0] = 1.01;
            for (int i = 1; i < d; ++i) scen[static_cast<std::size_t>(i)] = ret(gen);
        }
        m.probs.assign(static_cast<std::size_t>(k), 1.0 / static_cast<double>(k));
        const ScenarioTree tree = build_iid_tree(m, 3);
        const RiskSpec spec{random_alpha(gen)};
        const auto stages = backward_recursion(tree, spec, {});
        for (const auto& st : stages) {
            const auto& v = st.nodes.front().vertices;
            for (std::size_t i = 0; i < v.size(); ++i) {
                CHECK(v[i][1] >= v[i][0] - 1e-9);
                if (i > 0) {
                    CHECK(v[i][0] > v[i - 1][0]);
                    CHECK(v[i][1] < v[i - 1][1]);
                }
                if (i + 1 < v.size() && i > 0) {
                    const double s1 = (v[i][1] - v[i - 1][1]) / (v[i][0] - v[i - 1][0]);
                    const double s2 = (v[i + 1][1] - v[i][1]) / (v[i + 1][0] - v[i][0]);
                    CHECK(s1 < s2 + 1e-7);
                }
            }
        }
    }
}

TEST_CASE("parallel and serial recursions agree bitwise") {
    const ReturnModel m{{{1.01, 1.18, 0.93}, {1.01, 0.97, 1.08}}, {0.5, 0.5}};
    const ScenarioTree iid = build_iid_tree(m, 6);
    const ScenarioTree general = ScenarioTree::from_explicit(6, 3, iid.nodes(), false);
    const auto par = backward_recursion(general, {0.3}, {});
    const auto ser = backward_recursion_serial(general, {0.3}, {});
    for (std::size_t t = 0; t < par.size(); ++t)
        for (std::size_t n = 0; n < par[t].nodes.size(); ++n)
            CHECK(par[t].nodes[n].vertices == ser[t].nodes[n].vertices);
}
