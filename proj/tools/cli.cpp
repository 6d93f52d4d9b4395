#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "meanrisk/errors.hpp"
#include "meanrisk/report.hpp"

namespace {

struct Overrides {
    std::string config_path;
    std::string out_dir;
    std::string cache_dir;
    std::string target;
    double alpha = -1.0;
    double prune_tol = -1.0;
    long long seed = -1;
    int paths = -1;
};

meanrisk::RunConfig make_config(const Overrides& o) {
    meanrisk::RunConfig c = meanrisk::load_run_config(o.config_path);
    if (o.alpha >= 0.0) c.alpha = o.alpha;
    if (o.prune_tol >= 0.0) c.prune_tol = o.prune_tol;
    if (o.seed >= 0) c.seed = static_cast<std::uint64_t>(o.seed);
    if (o.paths >= 0) c.path_count = o.paths;
    if (!o.cache_dir.empty()) c.output_dir = o.cache_dir;
    if (!o.target.empty()) {
        const auto eq = o.target.find('=');
        if (eq == std::string::npos)
            throw meanrisk::config_error("--target expects mode=value");
        const std::string mode = o.target.substr(0, eq);
        meanrisk::ProfileTarget t;
        if (mode == "risk_budget") t.mode = meanrisk::ProfileTarget::Mode::risk_budget;
        else if (mode == "target_mean") t.mode = meanrisk::ProfileTarget::Mode::target_mean;
        else if (mode == "risk_aversion") t.mode = meanrisk::ProfileTarget::Mode::risk_aversion;
        else throw meanrisk::config_error("--target mode must be risk_budget, target_mean, or risk_aversion");
        t.value = std::stod(o.target.substr(eq + 1));
        c.target = t;
    }
    c.validate();
    return c;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw meanrisk::config_error("cannot write " + path);
    out << content;
}

void print_frontier(const meanrisk::RunReport& report) {
    std::printf("P0(%g) frontier (%d stage%s solved):\n", report.v0, report.horizon,
                report.horizon == 1 ? "" : "s");
    for (const auto& lf : report.frontiers) {
        if (lf.time != 0) continue;
        for (const auto& verts : lf.vertices)
            for (const auto& v : verts)
                std::printf("  neg_mean %.10g  risk %.10g\n", report.v0 * v[0], report.v0 * v[1]);
    }
    std::printf("selected profile: neg_mean %.10g  risk %.10g\n", report.selected.neg_mean,
                report.selected.risk);
}

void print_trades(const meanrisk::RunReport& report) {
    for (std::size_t p = 0; p < report.paths.size(); ++p) {
        std::printf("path %zu:\n", p);
        for (const auto& r : report.paths[p])
            std::printf("  t=%d node=%d wealth=%.10g neg_mean=%.10g risk=%.10g lambda=[%.6g, %.6g]\n",
                        r.time, r.node, r.wealth, r.profile.neg_mean, r.profile.risk, r.lambda_lo,
                        r.lambda_hi);
    }
}

void print_baselines(const meanrisk::RunReport& report) {
    std::printf("%-10s %14s %14s  %s\n", "strategy", "neg_mean", "risk", "in upper image");
    for (const auto& b : report.baselines)
        std::printf("%-10s %14.6f %14.6f  %s\n", b.name.c_str(), b.profile.neg_mean, b.profile.risk,
                    b.in_upper_image ? "yes" : "no");
}

void write_outputs(const meanrisk::RunReport& report, const std::string& out_dir, bool trades) {
    if (out_dir.empty()) return;
    std::filesystem::create_directories(out_dir);
    write_file(out_dir + "/frontier_t0.csv", meanrisk::export_frontier_csv(report, 0));
    if (trades)
        for (std::size_t p = 0; p < report.paths.size(); ++p)
            write_file(out_dir + "/trades_" + std::to_string(p) + ".csv",
                       meanrisk::export_trades_csv(report.paths[p]));
    write_file(out_dir + "/report.json", meanrisk::export_report_json(report));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-period mean-risk portfolio engine"};
    app.require_subcommand(1);

    Overrides o;
    app.add_option("--config", o.config_path, "Run configuration JSON")->required();
    app.add_option("--out", o.out_dir, "Output directory for CSV/JSON");
    app.add_option("--cache-dir", o.cache_dir, "Stage-solution cache directory");
    app.add_option("--alpha", o.alpha, "Override CVaR level");
    app.add_option("--seed", o.seed, "Override path sampling seed");
    app.add_option("--paths", o.paths, "Override sampled path count");
    app.add_option("--target", o.target, "Override profile target, mode=value");
    app.add_option("--prune-tol", o.prune_tol, "Override frontier pruning tolerance");

    auto* cmd_frontier = app.add_subcommand("frontier", "Backward recursion only");
    auto* cmd_trade = app.add_subcommand("trade", "Forward strategies along paths");
    auto* cmd_compare = app.add_subcommand("compare", "Baseline comparison table");
    auto* cmd_full = app.add_subcommand("full", "Full pipeline");

    CLI11_PARSE(app, argc, argv);

    try {
        meanrisk::RunConfig config = make_config(o);
        if (cmd_frontier->parsed()) config.path_count = 0;
        meanrisk::RunReport report = meanrisk::run_pipeline(config);

        if (cmd_frontier->parsed() || cmd_full->parsed()) print_frontier(report);
        if (cmd_trade->parsed() || cmd_full->parsed()) print_trades(report);
        if (cmd_compare->parsed() || cmd_full->parsed()) print_baselines(report);
        for (const auto& w : report.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
        write_outputs(report, o.out_dir, !cmd_frontier->parsed());
    } catch (const meanrisk::config_error& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const meanrisk::solver_error& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
    return 0;
}
