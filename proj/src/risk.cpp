#include "meanrisk/risk.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>

#include "meanrisk/errors.hpp"

namespace meanrisk {

void RiskSpec::validate() const {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw config_error("RiskSpec: alpha must be in (0,1]");
}

void ConditionalDistribution::validate() const {
    if (values.empty()) throw config_error("ConditionalDistribution: empty");
    if (values.size() != probs.size()) throw config_error("ConditionalDistribution: size mismatch");
    double sum = 0.0;
    for (double p : probs) {
        if (p <= 0.0) throw config_error("ConditionalDistribution: nonpositive probability");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-12) throw config_error("ConditionalDistribution: probabilities do not sum to 1");
}

double one_step_cvar(const RiskSpec& spec, const ConditionalDistribution& dist) {
    spec.validate();
    dist.validate();
    const std::size_t k = dist.values.size();
    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return dist.values[a] < dist.values[b]; });

    // Average of the worst-alpha tail, fractional at the boundary atom.
    double remaining = spec.alpha;
    double acc = 0.0;
    for (std::size_t idx : order) {
        if (remaining <= 0.0) break;
        const double w = std::min(remaining, dist.probs[idx]);
        acc += w * dist.values[idx];
        remaining -= w;
    }
    return -acc / spec.alpha;
}

double one_step_mean(const ConditionalDistribution& dist) {
    dist.validate();
    double m = 0.0;
    for (std::size_t i = 0; i < dist.values.size(); ++i) m += dist.probs[i] * dist.values[i];
    return m;
}

namespace {

template <bool Parallel>
std::vector<MeanRiskProfile> composed_profile_impl(const ScenarioTree& tree, const RiskSpec& spec,
                                                   const std::vector<double>& terminal) {
    spec.validate();
    if (!tree.materialized()) throw config_error("composed_profile: explicit tree required");
    const int T = tree.horizon();
    const auto& leaves = tree.level(T);
    if (terminal.size() != leaves.size())
        throw config_error("composed_profile: terminal vector must cover all leaves");

    std::vector<MeanRiskProfile> out(tree.nodes().size());
    for (std::size_t i = 0; i < leaves.size(); ++i) {
        const double v = terminal[i];
        out[static_cast<std::size_t>(leaves[i])] = {-v, -v};
    }

    for (int t = T - 1; t >= 0; --t) {
        const auto& ids = tree.level(t);
        const std::int64_t n = static_cast<std::int64_t>(ids.size());
#pragma omp parallel for schedule(static) if (Parallel && n > 64)
        for (std::int64_t i = 0; i < n; ++i) {
            const TreeNode& node = tree.node(ids[static_cast<std::size_t>(i)]);
            ConditionalDistribution mean_dist, risk_dist;
            mean_dist.values.reserve(node.children.size());
            mean_dist.probs.reserve(node.children.size());
            for (int c : node.children) {
                const MeanRiskProfile& child = out[static_cast<std::size_t>(c)];
                mean_dist.values.push_back(-child.neg_mean);
                mean_dist.probs.push_back(tree.node(c).cond_prob);
                risk_dist.values.push_back(-child.risk);
                risk_dist.probs.push_back(tree.node(c).cond_prob);
            }
            out[static_cast<std::size_t>(node.id)] = {-one_step_mean(mean_dist),
                                                      one_step_cvar(spec, risk_dist)};
        }
    }
    return out;
}

}  // namespace

std::vector<MeanRiskProfile> composed_profile(const ScenarioTree& tree, const RiskSpec& spec,
                                              const std::vector<double>& terminal) {
    return composed_profile_impl<true>(tree, spec, terminal);
}

std::vector<MeanRiskProfile> composed_profile_serial(const ScenarioTree& tree, const RiskSpec& spec,
                                                     const std::vector<double>& terminal) {
    return composed_profile_impl<false>(tree, spec, terminal);
}

MeanRiskProfile fixed_mix_profile(const ReturnModel& model, int horizon, const RiskSpec& spec,
                                  const std::vector<double>& weights, double v0) {
    spec.validate();
    model.validate();
    if (weights.size() != static_cast<std::size_t>(model.assets()))
        throw config_error("fixed_mix_profile: weight dimension mismatch");

    ConditionalDistribution growth;
    growth.probs = model.probs;
    for (const auto& scen : model.scenarios) {
        double g = 0.0;
        for (std::size_t i = 0; i < weights.size(); ++i) g += weights[i] * scen[i];
        if (g <= 0.0) throw config_error("fixed_mix_profile: nonpositive portfolio growth");
        growth.values.push_back(g);
    }
    const double mu = one_step_mean(growth);
    const double c1 = one_step_cvar(spec, growth);  // risk of one unit over one step

    // rho over s steps per unit wealth: rho_(s) = (-rho_(s-1)) * c1, rho_(0) = -1.
    double rho = -1.0, mean = 1.0;
    for (int s = 0; s < horizon; ++s) {
        rho = -rho * c1;
        mean *= mu;
    }
    return {-v0 * mean, v0 * rho};
}

}  // namespace meanrisk
