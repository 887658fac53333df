#pragma once

// Batch runner behind the CLI: load -> impute -> engine -> write, with a
// manifest recording the resolved configuration, input and output digests,
// and warnings. Needs OpenSSL (libcrypto) for SHA-256 digests.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>
#include <openssl/evp.h>

#include "netcontrol/baselines.hpp"
#include "netcontrol/export.hpp"
#include "netcontrol/fixture.hpp"
#include "netcontrol/npf.hpp"
#include "netcontrol/npi.hpp"
#include "netcontrol/oracle.hpp"
#include "netcontrol/report.hpp"

namespace netcontrol {

inline constexpr std::string_view kVersion = "1.0.0";

enum class Command { Impute, Npi, Tnpi, Npf, Tnpf, Nci, Centrality, Oracle, Export };

constexpr std::string_view to_string(Command c) noexcept {
    switch (c) {
    case Command::Impute: return "impute";
    case Command::Npi: return "npi";
    case Command::Tnpi: return "tnpi";
    case Command::Npf: return "npf";
    case Command::Tnpf: return "tnpf";
    case Command::Nci: return "nci";
    case Command::Centrality: return "centrality";
    case Command::Oracle: return "oracle";
    case Command::Export: return "export";
    }
    return "unknown";
}

struct RunConfig {
    Command command = Command::Tnpi;

    std::string nodes_path;
    std::string edges_path;
    std::string thresholds_path;
    std::string fixture_path;
    double threshold_default = 0.5;
    bool shares_as_percent = false;
    int scenario = 1;
    std::vector<std::string> targets;

    std::uint64_t iterations = 10'000;
    std::optional<std::uint64_t> burn_in; // default iterations / 10
    std::uint32_t chains = 4;
    std::uint64_t seed = 1;

    double damping = 0.85;
    std::optional<std::uint32_t> steps; // default diameter + 2, capped at 50
    BranchMode branch_mode = BranchMode::Replicate;
    bool edge_weighted = false;

    std::string firm;
    double coverage = 0.8;
    std::string measure = "pagerank";
    double alpha = 0.85;
    bool no_reverse = false;
    double tol = 1e-12;
    std::size_t max_iter = 10'000;

    std::string format = "graphml";
    std::string annotate = "auto";

    std::string out_dir = "netcontrol-out";
    unsigned workers = 0; // 0 = NETCONTROL_THREADS or hardware concurrency
    bool print_oracle = true;
};

struct RunManifest {
    nlohmann::ordered_json document;
    std::vector<std::string> warnings;
    std::vector<std::filesystem::path> outputs;
};

namespace detail {

inline std::string hex(const unsigned char* data, std::size_t len) {
    std::ostringstream os;
    os << std::hex << std::setfill('0');
    for (std::size_t i = 0; i < len; ++i) os << std::setw(2) << static_cast<int>(data[i]);
    return os.str();
}

inline std::string sha256(std::string_view bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
        throw Error(ErrorCode::Io, "SHA-256 digest failed");
    }
    return hex(md, len);
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open input file", path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write output file", path.string());
    out << bytes;
    if (!out) throw Error(ErrorCode::Io, "write failed", path.string());
}

inline bool samples_control_maps(Command c) {
    return c == Command::Npi || c == Command::Tnpi || c == Command::Npf || c == Command::Tnpf ||
           c == Command::Export;
}

inline bool needs_graph_files(Command c) { return c != Command::Oracle; }

inline bool needs_targets(Command c) { return c == Command::Tnpi || c == Command::Tnpf; }

} // namespace detail

/// Checks every field before any file is touched.
inline void validate(const RunConfig& cfg) {
    auto bad = [](const std::string& msg) { throw Error(ErrorCode::InvalidConfig, msg); };
    if (detail::needs_graph_files(cfg.command)) {
        if (cfg.edges_path.empty()) bad("--edges is required");
        if (cfg.nodes_path.empty()) bad("--nodes is required");
    } else if (cfg.fixture_path.empty()) {
        bad("--fixture is required");
    }
    if (!(cfg.threshold_default > 0.0 && cfg.threshold_default <= 1.0)) {
        bad("--threshold-default must lie in (0,1]");
    }
    if (cfg.scenario < 1 || cfg.scenario > 4) bad("--scenario must be 1..4");
    if (detail::needs_targets(cfg.command) && cfg.targets.empty()) bad("--target is required");
    if (cfg.iterations == 0) bad("--iterations must be positive");
    if (cfg.burn_in && *cfg.burn_in >= cfg.iterations) bad("--burn-in must be below --iterations");
    if (cfg.chains == 0) bad("--chains must be positive");
    if (!(cfg.damping > 0.0 && cfg.damping <= 1.0)) bad("--damping must lie in (0,1]");
    if (cfg.steps && *cfg.steps == 0) bad("--steps must be at least 1");
    if (cfg.command == Command::Nci) {
        if (cfg.firm.empty()) bad("--firm is required");
        if (!(cfg.coverage > 0.0 && cfg.coverage <= 1.0)) bad("--coverage must lie in (0,1]");
    }
    if (cfg.command == Command::Centrality) {
        if (cfg.measure != "pagerank" && cfg.measure != "eigenvector") {
            bad("--measure must be pagerank or eigenvector");
        }
        if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) bad("--alpha must lie in (0,1)");
    }
    if (cfg.command == Command::Export) {
        parse_export_format(cfg.format);
        static const std::vector<std::string> kinds = {"auto", "none", "tnpf", "tnpi",
                                                       "pagerank", "eigenvector"};
        if (std::find(kinds.begin(), kinds.end(), cfg.annotate) == kinds.end()) {
            bad("--annotate must be one of auto, none, tnpf, tnpi, pagerank, eigenvector");
        }
        if ((cfg.annotate == "tnpf" || cfg.annotate == "tnpi") && cfg.targets.empty()) {
            bad("--annotate " + cfg.annotate + " needs --target");
        }
    }
    if (cfg.out_dir.empty()) bad("--out must not be empty");
}

class Runner {
public:
    explicit Runner(RunConfig cfg, std::ostream& console = std::cout)
        : cfg_(std::move(cfg)), console_(console) {}

    RunManifest run() {
        validate(cfg_);
        const auto start = std::chrono::steady_clock::now();
        out_dir_ = cfg_.out_dir;
        std::filesystem::create_directories(out_dir_);
        // Marks the directory as incomplete until the final manifest lands.
        write_manifest("running", nullptr);
        try {
            execute();
        } catch (const Error& e) {
            write_manifest("failed", &e);
            throw;
        } catch (const std::exception& e) {
            const Error wrapped(ErrorCode::Io, e.what());
            write_manifest("failed", &wrapped);
            throw wrapped;
        }
        const auto seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        manifest_.document["timing"] = {{"wall_seconds", seconds}};
        write_manifest("complete", nullptr);
        return manifest_;
    }

    const RunConfig& config() const noexcept { return cfg_; }

private:
    void execute() {
        if (cfg_.command == Command::Oracle) {
            run_oracle();
            return;
        }
        load_inputs();
        ImputedGraph ig = impute(graph_, scenario_from_number(cfg_.scenario));
        for (const auto f : ig.unowned_firms) {
            warn("firm '" + ig.graph.node(f).id + "' has no observed owner and stays self-controlled");
        }
        resolve(ig.graph);

        switch (cfg_.command) {
        case Command::Impute: {
            std::ostringstream os;
            write_imputed_edges_csv(ig, os);
            emit("imputed_edges.csv", os.str());
            break;
        }
        case Command::Npi: {
            const auto r = run_npi(ig.graph, npi_config(), workers());
            for (const auto& w : r.warnings) warn(w);
            std::ostringstream os;
            write_npi_csv(ig.graph, r, os);
            emit("npi.csv", os.str());
            break;
        }
        case Command::Tnpi: {
            const auto r = run_tnpi(ig.graph, npi_config(), targets(ig.graph), workers());
            for (const auto& w : r.warnings) warn(w);
            std::ostringstream os;
            write_tnpi_csv(ig.graph, r, os);
            emit("tnpi.csv", os.str());
            break;
        }
        case Command::Npf:
        case Command::Tnpf: {
            const bool global = cfg_.command == Command::Npf;
            const auto r = global ? run_npf_global(ig.graph, npf_config(), workers())
                                  : run_tnpf(ig.graph, npf_config(), targets(ig.graph), workers());
            for (const auto& w : r.warnings) warn(w);
            const std::string stem = global ? "npf" : "tnpf";
            std::ostringstream sources, transit, normalized;
            write_source_csv(ig.graph, r, sources);
            write_transit_csv(ig.graph, r, transit);
            write_normalized_source_csv(ig.graph, r, normalized);
            emit(stem + "_sources.csv", sources.str());
            emit(stem + "_transit.csv", transit.str());
            emit(stem + "_sources_normalized.csv", normalized.str());
            break;
        }
        case Command::Nci: {
            const auto firm = ig.graph.at(cfg_.firm);
            const auto r = nci(ig.graph, firm, cfg_.coverage);
            std::ostringstream os;
            write_nci_csv(ig.graph, firm, cfg_.coverage, r, os);
            emit("nci.csv", os.str());
            break;
        }
        case Command::Centrality: {
            const auto c = centrality(ig.graph, cfg_.measure);
            std::ostringstream os;
            write_centrality_csv(ig.graph, c, os);
            emit("centrality.csv", os.str());
            break;
        }
        case Command::Export: {
            const auto format = parse_export_format(cfg_.format);
            const auto scores = annotation(ig.graph);
            std::ostringstream os;
            export_graph(ig, scores, format, os);
            emit("graph." + std::string(extension(format)), os.str());
            break;
        }
        case Command::Oracle: break;
        }
    }

    void load_inputs() {
        LoadOptions opts;
        opts.default_threshold = cfg_.threshold_default;
        opts.shares_as_percent = cfg_.shares_as_percent;
        opts.nodes_name = cfg_.nodes_path;
        opts.edges_name = cfg_.edges_path;
        opts.thresholds_name = cfg_.thresholds_path;

        const auto nodes = detail::read_file(cfg_.nodes_path);
        const auto edges = detail::read_file(cfg_.edges_path);
        record_input(cfg_.nodes_path, nodes);
        record_input(cfg_.edges_path, edges);
        std::istringstream nodes_in(nodes), edges_in(edges);
        if (!cfg_.thresholds_path.empty()) {
            const auto q = detail::read_file(cfg_.thresholds_path);
            record_input(cfg_.thresholds_path, q);
            std::istringstream q_in(q);
            graph_ = load_graph(nodes_in, edges_in, opts, &q_in);
        } else {
            graph_ = load_graph(nodes_in, edges_in, opts);
        }
    }

    void resolve(const OwnershipGraph& g) {
        if (!cfg_.burn_in) cfg_.burn_in = cfg_.iterations / 10;
        if (!cfg_.steps) cfg_.steps = default_propagation_steps(g);
    }

    NpiConfig npi_config() const {
        return NpiConfig{cfg_.iterations, *cfg_.burn_in, cfg_.chains, cfg_.seed};
    }

    NpfConfig npf_config() const {
        NpfConfig c;
        c.schedule = npi_config();
        c.damping = cfg_.damping;
        c.steps = *cfg_.steps;
        c.mode = cfg_.branch_mode;
        c.edge_weighted = cfg_.edge_weighted;
        return c;
    }

    std::vector<NodeId> targets(const OwnershipGraph& g) const {
        std::vector<NodeId> out;
        for (const auto& t : cfg_.targets) {
            const auto id = g.find(t);
            if (!id) throw Error(ErrorCode::UnknownTarget, "target '" + t + "' is not a node");
            out.push_back(*id);
        }
        return out;
    }

    unsigned workers() const { return cfg_.workers ? cfg_.workers : worker_count_from_env(); }

    CentralityVector centrality(const OwnershipGraph& g, const std::string& measure) {
        CentralityVector c;
        if (measure == "eigenvector") {
            c = eigenvector_centrality(g, cfg_.tol, cfg_.max_iter);
        } else {
            PageRankOptions o;
            o.alpha = cfg_.alpha;
            o.tol = cfg_.tol;
            o.reverse = !cfg_.no_reverse;
            c = pagerank(g, o);
        }
        for (const auto& w : c.warnings) warn(w);
        return c;
    }

    std::vector<double> annotation(const OwnershipGraph& g) {
        auto kind = cfg_.annotate;
        if (kind == "auto") kind = cfg_.targets.empty() ? "none" : "tnpf";
        std::vector<double> scores(g.size(), 0.0);
        if (kind == "none") return scores;
        if (kind == "pagerank" || kind == "eigenvector") return centrality(g, kind).scores;
        const auto ts = targets(g);
        if (kind == "tnpi") {
            const auto r = run_tnpi(g, npi_config(), ts, workers());
            for (std::size_t c = 0; c < r.columns.size(); ++c) {
                const auto col = r.column(c);
                for (std::size_t i = 0; i < g.size(); ++i) scores[i] += col[i];
            }
            return scores;
        }
        const auto r = run_tnpf(g, npf_config(), ts, workers());
        for (std::size_t c = 0; c < r.columns.size(); ++c) {
            for (std::size_t i = 0; i < g.size(); ++i) {
                scores[i] += r.transit_share[c * g.size() + i];
            }
        }
        return scores;
    }

    void run_oracle() {
        const auto text = detail::read_file(cfg_.fixture_path);
        record_input(cfg_.fixture_path, text);
        const auto fx = fixture_from_json(nlohmann::json::parse(text), cfg_.fixture_path);
        // A scenario pinned by the fixture wins and is what the manifest records.
        if (fx.scenario) cfg_.scenario = static_cast<int>(*fx.scenario);
        const auto ig = impute(fx.graph, scenario_from_number(cfg_.scenario));
        const auto& g = ig.graph;
        resolve(g);

        std::ostringstream pivots;
        {
            csv::Writer w(pivots);
            w.row({"firm_id", "owner_id", "probability"});
            for (std::uint32_t j = 0; j < g.size(); ++j) {
                const auto owners = g.incoming(NodeId{j});
                if (owners.empty()) continue;
                if (owners.size() > oracle::kMaxEnumeratedOwners) {
                    warn("firm '" + g.node(NodeId{j}).id + "' has too many owners to enumerate");
                    continue;
                }
                const auto table = oracle::exact_pivots(owners, g.threshold(NodeId{j}));
                for (const auto& p : table.owners) {
                    w.field(g.node(NodeId{j}).id).field(g.node(p.owner).id).field(p.probability);
                    w.end_row();
                }
                if (table.self_control > 0.0) {
                    w.field(g.node(NodeId{j}).id).field(g.node(NodeId{j}).id).field(table.self_control);
                    w.end_row();
                }
            }
        }
        emit("oracle_pivots.csv", pivots.str());

        if (g.size() > oracle::kMaxChainNodes) {
            warn("graph exceeds the chain oracle bound; chain and flow tables skipped");
            return;
        }
        const auto chain = oracle::exact_chain_distribution(g);
        if (chain.closed_classes > 1) {
            warn("control chain has " + std::to_string(chain.closed_classes) +
                 " closed classes; long-run frequencies depend on the run");
        }
        std::ostringstream marginals;
        {
            csv::Writer w(marginals);
            w.row({"controller_id", "firm_id", "npi"});
            for (std::uint32_t j = 0; j < g.size(); ++j) {
                for (std::uint32_t i = 0; i < g.size(); ++i) {
                    const double p = chain.marginal(NodeId{i}, NodeId{j});
                    if (p <= 0.0) continue;
                    w.field(g.node(NodeId{i}).id).field(g.node(NodeId{j}).id).field(p);
                    w.end_row();
                }
            }
        }
        emit("oracle_npi.csv", marginals.str());

        std::vector<NodeId> ts(g.targets().begin(), g.targets().end());
        for (const auto& t : targets(g)) {
            if (std::find(ts.begin(), ts.end(), t) == ts.end()) ts.push_back(t);
        }
        if (ts.empty()) return;
        const auto flow = oracle::exact_tnpf(g, npf_config(), ts);
        std::ostringstream sources, transit;
        detail::write_columns(g, flow.columns, flow.node_count, flow.source_share, {},
                              {"source_id", "target_id", "source_share"}, sources);
        detail::write_columns(g, flow.columns, flow.node_count, flow.transit_share, {},
                              {"node_id", "target_id", "transit_share"}, transit);
        emit("oracle_tnpf_sources.csv", sources.str());
        emit("oracle_tnpf_transit.csv", transit.str());
    }

    void record_input(const std::string& path, const std::string& bytes) {
        inputs_.push_back({{"path", path}, {"sha256", detail::sha256(bytes)}});
    }

    void emit(const std::string& name, const std::string& bytes) {
        const auto path = out_dir_ / name;
        detail::write_file(path, bytes);
        outputs_.push_back({{"file", name}, {"sha256", detail::sha256(bytes)}});
        manifest_.outputs.push_back(path);
        if (cfg_.command == Command::Oracle && cfg_.print_oracle) {
            console_ << "# " << name << '\n' << bytes;
        }
    }

    void warn(const std::string& message) { manifest_.warnings.push_back(message); }

    nlohmann::ordered_json resolved_config() const {
        nlohmann::ordered_json c;
        c["command"] = std::string(to_string(cfg_.command));
        c["nodes"] = cfg_.nodes_path;
        c["edges"] = cfg_.edges_path;
        c["thresholds"] = cfg_.thresholds_path;
        c["fixture"] = cfg_.fixture_path;
        c["threshold_default"] = cfg_.threshold_default;
        c["shares_as_percent"] = cfg_.shares_as_percent;
        c["scenario"] = cfg_.scenario;
        c["targets"] = cfg_.targets;
        c["iterations"] = cfg_.iterations;
        c["burn_in"] = cfg_.burn_in ? nlohmann::ordered_json(*cfg_.burn_in) : nullptr;
        c["chains"] = cfg_.chains;
        c["seed"] = cfg_.seed;
        c["damping"] = cfg_.damping;
        c["steps"] = cfg_.steps ? nlohmann::ordered_json(*cfg_.steps) : nullptr;
        c["branch_mode"] = std::string(to_string(cfg_.branch_mode));
        c["edge_weighted"] = cfg_.edge_weighted;
        c["firm"] = cfg_.firm;
        c["coverage"] = cfg_.coverage;
        c["measure"] = cfg_.measure;
        c["alpha"] = cfg_.alpha;
        c["reverse"] = !cfg_.no_reverse;
        c["tol"] = cfg_.tol;
        c["max_iter"] = cfg_.max_iter;
        c["format"] = cfg_.format;
        c["annotate"] = cfg_.annotate;
        c["out"] = cfg_.out_dir;
        return c;
    }

    void write_manifest(const std::string& status, const Error* error) {
        auto& doc = manifest_.document;
        const auto timing = doc.contains("timing") ? doc["timing"] : nlohmann::ordered_json();
        doc = nlohmann::ordered_json::object();
        doc["tool"] = "netcontrol";
        doc["version"] = std::string(kVersion);
        doc["status"] = status;
        const auto config = resolved_config();
        doc["config"] = config;
        doc["inputs"] = inputs_;
        doc["run_id"] = detail::sha256(config.dump() + nlohmann::ordered_json(inputs_).dump());
        doc["outputs"] = outputs_;
        doc["warnings"] = manifest_.warnings;
        if (detail::samples_control_maps(cfg_.command)) {
            doc["method"] = {
                {"control_map",
                 "each firm reads ultimate controllers from the previous iteration's map; cyclic "
                 "holdings converge across iterations, not within one"},
                {"burn_in", "per chain; reported frequencies pool the post-burn-in iterations of all chains"}};
        }
        if (error != nullptr) {
            doc["error"] = {{"code", std::string(to_string(error->code()))},
                            {"message", error->detail()},
                            {"context", error->context()}};
        }
        if (!timing.is_null()) doc["timing"] = timing;
        detail::write_file(out_dir_ / "manifest.json", doc.dump(2) + "\n");
    }

    RunConfig cfg_;
    std::ostream& console_;
    std::filesystem::path out_dir_;
    OwnershipGraph graph_;
    RunManifest manifest_;
    std::vector<nlohmann::ordered_json> inputs_;
    std::vector<nlohmann::ordered_json> outputs_;
};

/// Runs one configuration end to end.
inline RunManifest run(const RunConfig& cfg, std::ostream& console = std::cout) {
    return Runner(cfg, console).run();
}

} // namespace netcontrol
