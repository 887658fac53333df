// netcontrol: command-line front end for the ownership-control library.

#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "netcontrol/runner.hpp"

namespace {

void print_error(const std::string& code, const std::string& message, const std::string& context) {
    nlohmann::ordered_json rec;
    rec["error"] = code;
    rec["message"] = message;
    rec["context"] = context;
    std::cerr << rec.dump() << '\n';
}

} // namespace

int main(int argc, char** argv) {
    using namespace netcontrol;
    RunConfig cfg;
    std::uint64_t burn_in = 0;
    std::uint32_t steps = 0;
    std::string branch_mode = "replicate";

    CLI::App app{"Network power index and flow analysis for ownership networks"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);
    app.set_config("--config", "", "Read options from a key=value file (flags override it)");

    app.add_option("--nodes", cfg.nodes_path, "Node table CSV (node_id,name,kind,country,value)");
    app.add_option("--edges", cfg.edges_path, "Ownership edge CSV (owner_id,owned_id,share)");
    app.add_option("--thresholds", cfg.thresholds_path, "Per-firm thresholds CSV (firm_id,q)");
    app.add_option("--fixture", cfg.fixture_path, "JSON fixture (oracle)");
    app.add_option("--threshold-default", cfg.threshold_default, "Default control threshold q");
    app.add_flag("--shares-as-percent", cfg.shares_as_percent, "Shares are given in percent");
    app.add_option("--scenario", cfg.scenario, "Missing-share scenario 1..4");
    app.add_option("--target", cfg.targets, "Target node id (repeatable)");
    app.add_option("--iterations", cfg.iterations, "Iterations per chain");
    auto* burn = app.add_option("--burn-in", burn_in, "Discarded iterations per chain");
    app.add_option("--chains", cfg.chains, "Independent chains");
    app.add_option("--seed", cfg.seed, "Random seed");
    app.add_option("--damping", cfg.damping, "Flow damping factor d");
    auto* step_opt = app.add_option("--steps", steps, "Propagation steps S");
    app.add_option("--branch-mode", branch_mode, "replicate or split")
        ->check(CLI::IsMember({"replicate", "split"}));
    app.add_flag("--edge-weighted", cfg.edge_weighted, "Weight flow by the controlling share");
    app.add_option("--firm", cfg.firm, "Firm for the controlling-investor count");
    app.add_option("--coverage", cfg.coverage, "Coverage for the controlling-investor count");
    app.add_option("--measure", cfg.measure, "pagerank or eigenvector");
    app.add_option("--alpha", cfg.alpha, "PageRank damping");
    app.add_flag("--no-reverse", cfg.no_reverse, "Run PageRank along ownership edges");
    app.add_option("--format", cfg.format, "graphml, dot or json");
    app.add_option("--annotate", cfg.annotate, "auto, none, tnpf, tnpi, pagerank, eigenvector");
    app.add_option("--out", cfg.out_dir, "Output directory");
    app.add_option("--workers", cfg.workers, "Worker threads (0 = auto)");

    const std::pair<const char*, const char*> commands[] = {
        {"impute", "Apply a missing-share scenario and write the completed edge list"},
        {"npi", "Network power index for every firm"},
        {"tnpi", "Network power index restricted to targets"},
        {"npf", "Network power flow for every firm"},
        {"tnpf", "Network power flow into targets"},
        {"nci", "Number of largest investors covering a share of a firm"},
        {"centrality", "PageRank or eigenvector centrality"},
        {"oracle", "Exact tables for a small JSON fixture"},
        {"export", "Export the imputed graph with a score annotation"},
    };
    for (const auto& [name, help] : commands) app.add_subcommand(name, help)->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        print_error("InvalidConfig", e.what(), "command line");
        return 2;
    }

    const std::string sub = app.get_subcommands().front()->get_name();
    for (auto c : {Command::Impute, Command::Npi, Command::Tnpi, Command::Npf, Command::Tnpf,
                   Command::Nci, Command::Centrality, Command::Oracle, Command::Export}) {
        if (to_string(c) == sub) cfg.command = c;
    }
    if (burn->count() > 0) cfg.burn_in = burn_in;
    if (step_opt->count() > 0) cfg.steps = steps;
    cfg.branch_mode = branch_mode == "split" ? BranchMode::Split : BranchMode::Replicate;

    try {
        const auto manifest = run(cfg);
        for (const auto& w : manifest.warnings) std::cerr << "warning: " << w << '\n';
        if (cfg.command != Command::Oracle) {
            for (const auto& p : manifest.outputs) std::cout << p.string() << '\n';
        }
        return 0;
    } catch (const Error& e) {
        print_error(std::string(to_string(e.code())), e.detail(), e.context());
    } catch (const std::exception& e) {
        print_error("Io", e.what(), "");
    }
    return 1;
}
