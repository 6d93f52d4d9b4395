#include "meanrisk/report.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "meanrisk/errors.hpp"

namespace meanrisk {

using nlohmann::json;

namespace {

std::string fmt_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string hex64(std::uint64_t h) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

double uniform01(std::mt19937_64& gen) {
    // Fixed mapping, independent of the library's distribution internals.
    return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

ProfileTarget::Mode parse_mode(const std::string& s) {
    if (s == "risk_budget") return ProfileTarget::Mode::risk_budget;
    if (s == "target_mean") return ProfileTarget::Mode::target_mean;
    if (s == "risk_aversion") return ProfileTarget::Mode::risk_aversion;
    throw config_error("unknown target mode: " + s);
}

std::string mode_name(ProfileTarget::Mode m) {
    switch (m) {
        case ProfileTarget::Mode::risk_budget: return "risk_budget";
        case ProfileTarget::Mode::target_mean: return "target_mean";
        case ProfileTarget::Mode::risk_aversion: return "risk_aversion";
    }
    return "?";
}

}  // namespace

void RunConfig::validate() const {
    if (market_json.empty()) throw config_error("config: market section required");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw config_error("config: alpha must be in (0,1]");
    if (!(v0 > 0.0)) throw config_error("config: initial_wealth must be positive");
    if (path_count < 0) throw config_error("config: paths count must be nonnegative");
    if (prune_tol < 0.0) throw config_error("config: prune_tol must be nonnegative");
    if (myopic_lambda < 0.0 || myopic_lambda > 1.0)
        throw config_error("config: myopic_lambda must be in [0,1]");
}

RunConfig parse_run_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw config_error(std::string("config: invalid JSON: ") + e.what());
    }
    RunConfig c;
    try {
        if (!j.contains("market")) throw config_error("config: market section required");
        const std::string type = j["market"].value("type", "");
        if (type != "binomial" && type != "iid" && type != "moment_matched")
            throw config_error("config: market type must be binomial, iid, or moment_matched");
        c.market_json = j.at("market").dump();
        c.alpha = j.value("alpha", c.alpha);
        c.v0 = j.value("initial_wealth", c.v0);
        if (j.contains("target")) {
            c.target.mode = parse_mode(j["target"].value("mode", "risk_aversion"));
            c.target.value = j["target"].value("value", 0.5);
        }
        if (j.contains("paths")) {
            const json& p = j["paths"];
            c.path_count = p.value("count", 0);
            c.seed = p.value("seed", std::uint64_t{0});
            if (p.contains("list"))
                c.explicit_paths = p["list"].get<std::vector<std::vector<int>>>();
        }
        c.output_dir = j.value("output_dir", std::string{});
        c.prune_tol = j.value("prune_tol", 0.0);
        c.vertex_budget = j.value("vertex_budget", std::size_t{0});
        c.node_cap = j.value("node_cap", ScenarioTree::default_node_cap);
        c.myopic_lambda = j.value("myopic_lambda", 0.5);
    } catch (const json::exception& e) {
        throw config_error(std::string("config: ") + e.what());
    }
    c.validate();
    return c;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("config: cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_run_config(ss.str());
}

ScenarioTree build_tree_from_config(const RunConfig& config) {
    json m = json::parse(config.market_json);
    const std::string type = m.value("type", "");
    try {
        if (type == "binomial") {
            const double mean = m.at("stock_annual_mean").get<double>();
            const double rate = m.at("bond_annual_rate").get<double>();
            const int ppy = m.at("periods_per_year").get<int>();
            const double years = m.at("years").get<double>();
            double up, down, p;
            if (m.contains("annual_volatility")) {
                std::tie(up, down) = binomial_up_down(mean, m["annual_volatility"].get<double>(), ppy);
                p = 0.5;
            } else {
                up = m.at("stock_up").get<double>();
                down = m.at("stock_down").get<double>();
                p = m.at("up_prob").get<double>();
            }
            return build_binomial(mean, rate, up, down, p, ppy, years, config.node_cap);
        }
        if (type == "iid" || type == "moment_matched") {
            ReturnModel model;
            int horizon;
            if (type == "iid") {
                model.scenarios = m.at("scenarios").get<std::vector<std::vector<double>>>();
                model.probs = m.at("probs").get<std::vector<double>>();
                horizon = m.at("horizon").get<int>();
            } else {
                model = moment_matched_scenarios(
                    m.at("mean").get<std::vector<double>>(),
                    m.at("covariance").get<std::vector<std::vector<double>>>());
                horizon = m.at("horizon").get<int>();
            }
            model.validate();
            // Materialize when the full tree fits the node cap.
            std::size_t count = 1, level = 1;
            bool fits = true;
            for (int t = 0; t < horizon; ++t) {
                if (level > config.node_cap / static_cast<std::size_t>(model.branches())) {
                    fits = false;
                    break;
                }
                level *= static_cast<std::size_t>(model.branches());
                count += level;
                if (count > config.node_cap) {
                    fits = false;
                    break;
                }
            }
            return fits ? build_iid_tree(model, horizon, config.node_cap)
                        : build_iid_market(model, horizon);
        }
    } catch (const json::exception& e) {
        throw config_error(std::string("config: market: ") + e.what());
    }
    throw config_error("config: market type must be binomial, iid, or moment_matched");
}

std::uint64_t config_hash(const RunConfig& c) {
    json j{{"market", json::parse(c.market_json)},
           {"alpha", c.alpha},
           {"initial_wealth", c.v0},
           {"target", {{"mode", mode_name(c.target.mode)}, {"value", c.target.value}}},
           {"path_count", c.path_count},
           {"seed", c.seed},
           {"explicit_paths", c.explicit_paths},
           {"prune_tol", c.prune_tol},
           {"vertex_budget", c.vertex_budget},
           {"node_cap", c.node_cap},
           {"myopic_lambda", c.myopic_lambda}};
    return fnv1a(j.dump());
}

std::vector<std::vector<int>> sample_paths(const ScenarioTree& tree, int count, std::uint64_t seed) {
    if (count < 1) throw config_error("sample_paths: count must be at least 1");
    std::mt19937_64 gen(seed);
    const int T = tree.horizon();
    std::vector<std::vector<int>> out;
    out.reserve(static_cast<std::size_t>(count));

    for (int p = 0; p < count; ++p) {
        std::vector<int> path;
        path.reserve(static_cast<std::size_t>(T) + 1);
        if (tree.materialized()) {
            int id = tree.root();
            path.push_back(id);
            for (int t = 0; t < T; ++t) {
                const auto& ch = tree.node(id).children;
                const double u = uniform01(gen);
                double acc = 0.0;
                int next = ch.back();
                for (int c : ch) {
                    acc += tree.node(c).cond_prob;
                    if (u < acc) {
                        next = c;
                        break;
                    }
                }
                id = next;
                path.push_back(id);
            }
        } else {
            const ReturnModel& model = *tree.model();
            path.push_back(0);
            for (int t = 0; t < T; ++t) {
                const double u = uniform01(gen);
                double acc = 0.0;
                int pick = model.branches() - 1;
                for (int c = 0; c < model.branches(); ++c) {
                    acc += model.probs[static_cast<std::size_t>(c)];
                    if (u < acc) {
                        pick = c;
                        break;
                    }
                }
                path.push_back(pick);
            }
        }
        out.push_back(std::move(path));
    }
    return out;
}

RunReport run_pipeline(const RunConfig& config) {
    config.validate();
    using clock = std::chrono::steady_clock;
    const auto ms = [](clock::time_point a, clock::time_point b) {
        return std::chrono::duration<double, std::milli>(b - a).count();
    };

    RunReport report;
    report.config_hash_hex = hex64(config_hash(config));
    report.v0 = config.v0;
    report.alpha = config.alpha;

    ScenarioTree tree = build_tree_from_config(config);
    report.horizon = tree.horizon();
    RiskSpec spec{config.alpha};
    BellmanOptions opts;
    opts.prune_tol = config.prune_tol;
    opts.vertex_budget = config.vertex_budget;

    const auto t0 = clock::now();
    std::vector<StageSolution> stages;
    if (config.output_dir.empty() ||
        !load_stage_solutions(config.output_dir, config_hash(config), stages)) {
        try {
            stages = backward_recursion(tree, spec, opts);
        } catch (const std::exception& e) {
            throw solver_error(std::string("backward stage: ") + e.what());
        }
        if (!config.output_dir.empty())
            save_stage_solutions(config.output_dir, config_hash(config), stages);
    }
    const auto t1 = clock::now();
    report.timings_ms["backward"] = ms(t0, t1);

    for (const StageSolution& st : stages) {
        LevelFrontier lf;
        lf.time = st.time;
        if (st.shared) {
            lf.node_ids.push_back(-1);
            lf.vertices.push_back(st.nodes.front().vertices);
        } else {
            lf.node_ids = st.node_ids;
            for (const NodeSolution& ns : st.nodes) lf.vertices.push_back(ns.vertices);
        }
        report.frontiers.push_back(std::move(lf));
    }

    const UpperImage p0v = scale_upper_image(root_upper_image(stages), config.v0);
    try {
        report.selected = select_initial_profile(p0v, config.target);
    } catch (const std::exception& e) {
        throw config_error(std::string("selection stage: ") + e.what());
    }

    const auto t2 = clock::now();
    std::vector<std::vector<int>> paths = config.explicit_paths;
    if (paths.empty() && config.path_count > 0)
        paths = sample_paths(tree, config.path_count, config.seed);
    for (const auto& path : paths) {
        try {
            report.paths.push_back(
                forward_strategy_path(tree, stages, config.v0, report.selected, path, &report.warnings));
        } catch (const std::exception& e) {
            throw solver_error(std::string("forward stage: ") + e.what());
        }
    }
    const auto t3 = clock::now();
    report.timings_ms["forward"] = ms(t2, t3);

    const auto add_baseline = [&](const std::string& name, const MeanRiskProfile& prof) {
        BaselineRow row;
        row.name = name;
        row.profile = prof;
        row.in_upper_image = p0v.contains({prof.neg_mean, prof.risk}, 1e-7 * std::max(1.0, config.v0));
        if (prof.neg_mean >= p0v.vertices.front()[0] - 1e-12) {
            const double q = std::max(prof.neg_mean, p0v.vertices.front()[0]);
            row.dominating = {q, p0v.boundary_risk(q)};
            row.has_dominating = true;
        }
        report.baselines.push_back(std::move(row));
    };
    try {
        add_baseline("dynamic", report.selected);
        add_baseline("myopic", evaluate_strategy(tree, myopic_strategy(config.myopic_lambda), spec, config.v0));
        add_baseline("naive", evaluate_strategy(tree, naive_strategy(), spec, config.v0));
    } catch (const std::exception& e) {
        throw solver_error(std::string("baseline stage: ") + e.what());
    }
    report.timings_ms["baselines"] = ms(t3, clock::now());
    return report;
}

std::string export_frontier_csv(const RunReport& report, int level) {
    std::string out = "t,node,neg_mean,risk\n";
    for (const LevelFrontier& lf : report.frontiers) {
        if (lf.time != level) continue;
        for (std::size_t n = 0; n < lf.vertices.size(); ++n)
            for (const auto& v : lf.vertices[n])
                out += std::to_string(lf.time) + "," + std::to_string(lf.node_ids[n]) + "," +
                       fmt_double(v[0]) + "," + fmt_double(v[1]) + "\n";
    }
    return out;
}

std::string export_trades_csv(const std::vector<TradeRecord>& records) {
    std::size_t d = 0;
    for (const TradeRecord& r : records) d = std::max(d, r.position.size());
    std::string out = "t,node,wealth";
    for (std::size_t a = 0; a < d; ++a) out += ",position_" + std::to_string(a);
    out += ",neg_mean,risk,lambda_lo,lambda_hi\n";
    for (const TradeRecord& r : records) {
        out += std::to_string(r.time) + "," + std::to_string(r.node) + "," + fmt_double(r.wealth);
        for (std::size_t a = 0; a < d; ++a)
            out += "," + (a < r.position.size() ? fmt_double(r.position[a]) : std::string{});
        out += "," + fmt_double(r.profile.neg_mean) + "," + fmt_double(r.profile.risk) + "," +
               fmt_double(r.lambda_lo) + "," + fmt_double(r.lambda_hi) + "\n";
    }
    return out;
}

namespace {

json report_to_json(const RunReport& r, bool with_timings) {
    json j;
    j["schema_version"] = r.schema_version;
    j["config_hash"] = r.config_hash_hex;
    j["horizon"] = r.horizon;
    j["initial_wealth"] = r.v0;
    j["alpha"] = r.alpha;
    json fronts = json::array();
    for (const LevelFrontier& lf : r.frontiers) {
        json nodes = json::array();
        for (std::size_t n = 0; n < lf.vertices.size(); ++n) {
            json verts = json::array();
            for (const auto& v : lf.vertices[n]) verts.push_back({v[0], v[1]});
            nodes.push_back({{"node", lf.node_ids[n]}, {"vertices", verts}});
        }
        fronts.push_back({{"t", lf.time}, {"nodes", nodes}});
    }
    j["frontiers"] = fronts;
    j["selected"] = {r.selected.neg_mean, r.selected.risk};
    json paths = json::array();
    for (const auto& path : r.paths) {
        json recs = json::array();
        for (const TradeRecord& t : path)
            recs.push_back({{"t", t.time},
                            {"node", t.node},
                            {"wealth", t.wealth},
                            {"position", t.position},
                            {"value_position", t.value_position},
                            {"profile", {t.profile.neg_mean, t.profile.risk}},
                            {"lambda", {t.lambda_lo, t.lambda_hi}}});
        paths.push_back(recs);
    }
    j["paths"] = paths;
    json baselines = json::array();
    for (const BaselineRow& b : r.baselines) {
        json row{{"name", b.name},
                 {"profile", {b.profile.neg_mean, b.profile.risk}},
                 {"in_upper_image", b.in_upper_image},
                 {"has_dominating", b.has_dominating}};
        if (b.has_dominating) row["dominating"] = {b.dominating.neg_mean, b.dominating.risk};
        baselines.push_back(row);
    }
    j["baselines"] = baselines;
    j["warnings"] = r.warnings;
    if (with_timings) j["timings_ms"] = r.timings_ms;
    return j;
}

}  // namespace

std::string export_report_json(const RunReport& report) {
    return report_to_json(report, true).dump(2);
}

RunReport import_report_json(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw config_error(std::string("report: invalid JSON: ") + e.what());
    }
    RunReport r;
    try {
        r.schema_version = j.at("schema_version").get<int>();
        r.config_hash_hex = j.at("config_hash").get<std::string>();
        r.horizon = j.at("horizon").get<int>();
        r.v0 = j.at("initial_wealth").get<double>();
        r.alpha = j.at("alpha").get<double>();
        for (const json& f : j.at("frontiers")) {
            LevelFrontier lf;
            lf.time = f.at("t").get<int>();
            for (const json& n : f.at("nodes")) {
                lf.node_ids.push_back(n.at("node").get<int>());
                std::vector<std::array<double, 2>> verts;
                for (const json& v : n.at("vertices")) verts.push_back({v[0].get<double>(), v[1].get<double>()});
                lf.vertices.push_back(std::move(verts));
            }
            r.frontiers.push_back(std::move(lf));
        }
        r.selected = {j.at("selected")[0].get<double>(), j.at("selected")[1].get<double>()};
        for (const json& path : j.at("paths")) {
            std::vector<TradeRecord> recs;
            for (const json& t : path) {
                TradeRecord rec;
                rec.time = t.at("t").get<int>();
                rec.node = t.at("node").get<int>();
                rec.wealth = t.at("wealth").get<double>();
                rec.position = t.at("position").get<std::vector<double>>();
                rec.value_position = t.at("value_position").get<std::vector<double>>();
                rec.profile = {t.at("profile")[0].get<double>(), t.at("profile")[1].get<double>()};
                rec.lambda_lo = t.at("lambda")[0].get<double>();
                rec.lambda_hi = t.at("lambda")[1].get<double>();
                recs.push_back(std::move(rec));
            }
            r.paths.push_back(std::move(recs));
        }
        for (const json& b : j.at("baselines")) {
            BaselineRow row;
            row.name = b.at("name").get<std::string>();
            row.profile = {b.at("profile")[0].get<double>(), b.at("profile")[1].get<double>()};
            row.in_upper_image = b.at("in_upper_image").get<bool>();
            row.has_dominating = b.at("has_dominating").get<bool>();
            if (row.has_dominating)
                row.dominating = {b.at("dominating")[0].get<double>(), b.at("dominating")[1].get<double>()};
            r.baselines.push_back(std::move(row));
        }
        r.warnings = j.at("warnings").get<std::vector<std::string>>();
        if (j.contains("timings_ms")) r.timings_ms = j["timings_ms"].get<std::map<std::string, double>>();
    } catch (const json::exception& e) {
        throw config_error(std::string("report: ") + e.what());
    }
    return r;
}

std::uint64_t report_hash(const RunReport& report) {
    return fnv1a(report_to_json(report, false).dump());
}

void save_stage_solutions(const std::string& dir, std::uint64_t key,
                          const std::vector<StageSolution>& stages) {
    json j = json::array();
    for (const StageSolution& st : stages) {
        json nodes = json::array();
        for (const NodeSolution& ns : st.nodes) {
            json verts = json::array();
            for (const auto& v : ns.vertices) verts.push_back({v[0], v[1]});
            nodes.push_back({{"vertices", verts},
                             {"phi", ns.phi},
                             {"child_profiles", ns.child_profiles},
                             {"assets", ns.assets},
                             {"children", ns.children}});
        }
        j.push_back({{"t", st.time}, {"shared", st.shared}, {"node_ids", st.node_ids}, {"nodes", nodes}});
    }
    std::ofstream out(dir + "/stages_" + hex64(key) + ".json");
    if (!out) throw config_error("cache: cannot write to " + dir);
    out << j.dump();
}

bool load_stage_solutions(const std::string& dir, std::uint64_t key,
                          std::vector<StageSolution>& stages) {
    std::ifstream in(dir + "/stages_" + hex64(key) + ".json");
    if (!in) return false;
    json j;
    try {
        in >> j;
        stages.clear();
        for (const json& s : j) {
            StageSolution st;
            st.time = s.at("t").get<int>();
            st.shared = s.at("shared").get<bool>();
            st.node_ids = s.at("node_ids").get<std::vector<int>>();
            for (const json& n : s.at("nodes")) {
                NodeSolution ns;
                for (const json& v : n.at("vertices")) ns.vertices.push_back({v[0].get<double>(), v[1].get<double>()});
                ns.phi = n.at("phi").get<std::vector<double>>();
                ns.child_profiles = n.at("child_profiles").get<std::vector<double>>();
                ns.assets = n.at("assets").get<int>();
                ns.children = n.at("children").get<int>();
                st.nodes.push_back(std::move(ns));
            }
            stages.push_back(std::move(st));
        }
    } catch (const json::exception&) {
        return false;
    }
    return true;
}

}  // namespace meanrisk
