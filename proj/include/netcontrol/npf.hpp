#pragma once

// Network Power Flow. Each Monte Carlo iteration realizes a control map,
// turns it into a downstream "children" map (controller -> controlled firm),
// cuts the outgoing links of every target, and pushes damped control mass
// from every source towards the targets.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "netcontrol/chain.hpp"
#include "netcontrol/imputation.hpp"

namespace netcontrol {

enum class BranchMode {
    Replicate, // every child receives d * m(parent)
    Split,     // children share d * m(parent) equally
};

constexpr std::string_view to_string(BranchMode mode) noexcept {
    return mode == BranchMode::Replicate ? "replicate" : "split";
}

struct NpfConfig {
    ChainSchedule schedule;
    double damping = 0.85;
    std::uint32_t steps = 10;
    BranchMode mode = BranchMode::Replicate;
    /// Scale the mass entering a firm by its direct controller's share in it.
    bool edge_weighted = false;

    void validate() const {
        schedule.validate();
        if (!(damping > 0.0 && damping <= 1.0)) {
            throw Error(ErrorCode::InvalidConfig, "damping must lie in (0,1]");
        }
        if (steps == 0) throw Error(ErrorCode::InvalidConfig, "steps must be at least 1");
    }
};

/// Propagation horizon used when none is configured: diameter + 2, capped at 50.
inline std::uint32_t default_propagation_steps(const OwnershipGraph& g) {
    return static_cast<std::uint32_t>(std::min<std::size_t>(ownership_diameter(g) + 2, 50));
}

/// Downstream control links. `inflow[j]` multiplies the mass entering j from
/// any parent (1 unless edge weighting is on).
struct ChildrenMap {
    std::vector<std::vector<NodeId>> children;
    std::vector<double> inflow;

    std::size_t size() const noexcept { return children.size(); }
    std::span<const NodeId> of(NodeId i) const { return children.at(i.index); }
};

/// children(i) = { j != i : direct(j) = i }, with every target's list emptied.
inline ChildrenMap build_children(const ControlMap& cm, std::span<const NodeId> targets) {
    ChildrenMap out;
    const auto n = cm.size();
    out.children.resize(n);
    out.inflow.assign(n, 1.0);
    for (std::uint32_t j = 0; j < n; ++j) {
        const auto parent = cm.direct[j];
        if (parent.index != j) out.children[parent.index].push_back(NodeId{j});
    }
    for (const auto f : targets) out.children.at(f.index).clear();
    return out;
}

/// As above; with `edge_weighted` the inflow of j is its direct controller's share.
inline ChildrenMap build_children(const ControlMap& cm, std::span<const NodeId> targets,
                                  const OwnershipGraph& g, bool edge_weighted) {
    auto out = build_children(cm, targets);
    if (edge_weighted) {
        for (std::uint32_t j = 0; j < cm.size(); ++j) {
            const auto parent = cm.direct[j];
            if (parent.index != j) out.inflow[j] = g.share(parent, NodeId{j});
        }
    }
    return out;
}

struct Propagation {
    double acc = 0.0;
    /// Mass arriving at each node (other than the source and the target) that
    /// can still be collected at the target within the step budget.
    std::vector<double> transit;
};

/// Step-by-step propagation of `value` injected at `source`. Each of the S
/// steps first collects the mass sitting on `target`, then moves every node's
/// mass one hop to its children.
inline Propagation propagate(const ChildrenMap& children, NodeId source, NodeId target,
                             double value, double damping, std::uint32_t steps, BranchMode mode) {
    const auto n = children.size();
    constexpr auto kFar = std::numeric_limits<std::uint32_t>::max();

    // Hop distance from every node to the target along child links.
    std::vector<std::vector<std::uint32_t>> parents(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        for (const auto j : children.children[i]) parents[j.index].push_back(i);
    }
    std::vector<std::uint32_t> dist(n, kFar);
    std::vector<std::uint32_t> queue{target.index};
    dist[target.index] = 0;
    for (std::size_t head = 0; head < queue.size(); ++head) {
        const auto u = queue[head];
        for (const auto p : parents[u]) {
            if (dist[p] == kFar) {
                dist[p] = dist[u] + 1;
                queue.push_back(p);
            }
        }
    }

    Propagation out;
    out.transit.assign(n, 0.0);
    std::vector<double> mass(n, 0.0);
    std::vector<double> next(n, 0.0);
    mass[source.index] = value;
    for (std::uint32_t step = 1; step <= steps; ++step) {
        out.acc += mass[target.index];
        if (step == steps) break;
        std::fill(next.begin(), next.end(), 0.0);
        for (std::uint32_t i = 0; i < n; ++i) {
            const auto& kids = children.children[i];
            if (kids.empty() || mass[i] == 0.0) continue;
            double outflow = damping * mass[i];
            if (mode == BranchMode::Split) outflow /= static_cast<double>(kids.size());
            for (const auto j : kids) next[j.index] += outflow * children.inflow[j.index];
        }
        mass.swap(next);
        for (std::uint32_t i = 0; i < n; ++i) {
            if (i == source.index || i == target.index || dist[i] == kFar) continue;
            if (step + dist[i] <= steps - 1) out.transit[i] += mass[i];
        }
    }
    return out;
}

/// Averages over counted iterations, one column per target.
struct FlowReport {
    std::size_t node_count = 0;
    std::vector<NodeId> columns;
    std::vector<double> source_share; // [column * node_count + source]
    std::vector<double> source_error;
    std::vector<double> transit_share; // [column * node_count + node]
    std::vector<double> transit_error;
    std::uint64_t samples = 0;
    std::vector<std::string> warnings;

    std::optional<std::size_t> column_of(NodeId target) const {
        for (std::size_t c = 0; c < columns.size(); ++c) {
            if (columns[c] == target) return c;
        }
        return std::nullopt;
    }

    double source(NodeId k, NodeId target) const { return source_share[index(k, target)]; }
    double transit(NodeId i, NodeId target) const { return transit_share[index(i, target)]; }

    /// Source shares of one column rescaled to sum to one (all zero if empty).
    std::vector<double> normalized_sources(std::size_t column) const {
        std::vector<double> out(source_share.begin() + column * node_count,
                                source_share.begin() + (column + 1) * node_count);
        double total = 0.0;
        for (double x : out) total += x;
        if (total > 0.0) {
            for (double& x : out) x /= total;
        }
        return out;
    }

private:
    std::size_t index(NodeId i, NodeId target) const {
        const auto c = column_of(target);
        if (!c) throw Error(ErrorCode::UnknownTarget, "target not in report");
        return *c * node_count + i.index;
    }
};

namespace detail {

/// Per-chain flow sums. For a realized control map each node has at most one
/// parent, so the sources able to reach a target are exactly the target's
/// ancestor walk; the flow from a source at walk depth t is its value times
/// the product of per-hop factors. This reproduces propagate() without
/// simulating every source separately.
class FlowAccumulator {
public:
    FlowAccumulator(const OwnershipGraph& g, const NpfConfig& cfg, std::span<const NodeId> columns,
                    bool joint_targets)
        : graph_(g), cfg_(cfg), columns_(columns.begin(), columns.end()), joint_(joint_targets),
          n_(g.size()) {
        const auto cells = columns_.size() * n_;
        source_sum_.assign(cells, 0.0);
        source_sq_.assign(cells, 0.0);
        transit_sum_.assign(cells, 0.0);
        transit_sq_.assign(cells, 0.0);
        is_target_.assign(n_, 0);
        if (joint_) {
            for (const auto f : columns_) is_target_[f.index] = 1;
        }
        degree_.assign(n_, 0);
        source_buf_.assign(n_, 0.0);
        transit_buf_.assign(n_, 0.0);
        seen_.assign(n_, 0);
        walk_.reserve(cfg.steps);
        weight_.reserve(cfg.steps);
    }

    void add(const ControlMap& cm) {
        if (cfg_.mode == BranchMode::Split) {
            std::fill(degree_.begin(), degree_.end(), 0u);
            for (std::uint32_t j = 0; j < n_; ++j) {
                if (cm.direct[j].index != j) ++degree_[cm.direct[j].index];
            }
        }
        for (std::size_t c = 0; c < columns_.size(); ++c) add_column(cm, c);
    }

    const std::vector<double>& source_sum() const { return source_sum_; }
    const std::vector<double>& source_sq() const { return source_sq_; }
    const std::vector<double>& transit_sum() const { return transit_sum_; }
    const std::vector<double>& transit_sq() const { return transit_sq_; }

private:
    bool blocks(std::uint32_t node, std::uint32_t target) const {
        return joint_ ? is_target_[node] != 0 : node == target;
    }

    void add_column(const ControlMap& cm, std::size_t c) {
        const auto f = columns_[c].index;
        const double d = cfg_.damping;

        walk_.clear();
        weight_.clear();
        walk_.push_back(f);
        weight_.push_back(1.0);
        for (std::uint32_t s = 1; s < cfg_.steps; ++s) {
            const auto child = walk_.back();
            const auto parent = cm.direct[child].index;
            if (parent == child || blocks(parent, f)) break;
            double w = d;
            if (cfg_.edge_weighted) w *= graph_.share(NodeId{parent}, NodeId{child});
            if (cfg_.mode == BranchMode::Split) w /= static_cast<double>(degree_[parent]);
            walk_.push_back(parent);
            weight_.push_back(w);
        }

        touched_.clear();
        auto touch = [&](std::uint32_t i) {
            if (!seen_[i]) {
                seen_[i] = 1;
                touched_.push_back(i);
            }
        };

        // Source shares: depth 0 is the target itself, collected at step 1.
        double path = 1.0;
        for (std::size_t t = 0; t < walk_.size(); ++t) {
            path *= weight_[t];
            const auto k = walk_[t];
            const double v = graph_.value(NodeId{k});
            if (v == 0.0) continue;
            touch(k);
            source_buf_[k] += v * path;
        }

        // Transit: mass arriving at each ancestor (first occurrence on the
        // walk) from every source further up, excluding returns to itself.
        for (std::size_t s = 1; s < walk_.size(); ++s) {
            const auto node = walk_[s];
            bool first = true;
            for (std::size_t r = 1; r < s; ++r) {
                if (walk_[r] == node) {
                    first = false;
                    break;
                }
            }
            if (!first) continue;
            double prod = 1.0;
            double arrived = 0.0;
            for (std::size_t r = s + 1; r < walk_.size(); ++r) {
                prod *= weight_[r];
                const auto k = walk_[r];
                if (k == node) continue;
                arrived += graph_.value(NodeId{k}) * prod;
            }
            if (arrived != 0.0) {
                touch(node);
                transit_buf_[node] += arrived;
            }
        }

        const auto base = c * n_;
        for (const auto i : touched_) {
            const double a = source_buf_[i];
            const double b = transit_buf_[i];
            source_sum_[base + i] += a;
            source_sq_[base + i] += a * a;
            transit_sum_[base + i] += b;
            transit_sq_[base + i] += b * b;
            source_buf_[i] = 0.0;
            transit_buf_[i] = 0.0;
            seen_[i] = 0;
        }
    }

    const OwnershipGraph& graph_;
    const NpfConfig& cfg_;
    std::vector<NodeId> columns_;
    bool joint_;
    std::size_t n_;

    std::vector<double> source_sum_, source_sq_, transit_sum_, transit_sq_;
    std::vector<char> is_target_;
    std::vector<std::uint32_t> degree_;
    std::vector<double> source_buf_, transit_buf_;
    std::vector<char> seen_;
    std::vector<std::uint32_t> touched_;
    std::vector<std::uint32_t> walk_;
    std::vector<double> weight_;
};

inline void pool_moments(const std::vector<const std::vector<double>*>& sums,
                         const std::vector<const std::vector<double>*>& squares,
                         double per_chain, double total, std::vector<double>& mean,
                         std::vector<double>& error, double& worst) {
    const auto cells = sums.front()->size();
    mean.assign(cells, 0.0);
    error.assign(cells, 0.0);
    for (std::size_t e = 0; e < cells; ++e) {
        double s = 0.0;
        double q = 0.0;
        for (std::size_t c = 0; c < sums.size(); ++c) {
            s += (*sums[c])[e];
            q += (*squares[c])[e];
        }
        const double m = s / total;
        const double var = std::max(0.0, q / total - m * m);
        mean[e] = m;
        error[e] = std::sqrt(var / total);
        if (sums.size() > 1 && var > 0.0) {
            const double se_chain = std::sqrt(var / per_chain);
            for (const auto* chain : sums) {
                worst = std::max(worst, std::abs((*chain)[e] / per_chain - m) / se_chain);
            }
        }
    }
}

inline FlowReport run_flow(const OwnershipGraph& g, const NpfConfig& cfg,
                           std::vector<NodeId> columns, bool joint_targets, unsigned workers) {
    cfg.validate();
    const auto& sched = cfg.schedule;
    std::vector<std::optional<FlowAccumulator>> chains(sched.chains);
    parallel_for(sched.chains, workers, [&](std::size_t c) {
        chains[c].emplace(g, cfg, columns, joint_targets);
        auto& acc = *chains[c];
        run_control_chain(g, sched, static_cast<std::uint32_t>(c),
                          [&](const ControlMap& map) { acc.add(map); });
    });

    FlowReport report;
    report.node_count = g.size();
    report.columns = std::move(columns);
    report.samples = sched.counted_per_chain() * sched.chains;
    const auto per_chain = static_cast<double>(sched.counted_per_chain());
    const auto total = static_cast<double>(report.samples);

    std::vector<const std::vector<double>*> s1, q1, s2, q2;
    for (const auto& c : chains) {
        s1.push_back(&c->source_sum());
        q1.push_back(&c->source_sq());
        s2.push_back(&c->transit_sum());
        q2.push_back(&c->transit_sq());
    }
    double worst = 0.0;
    pool_moments(s1, q1, per_chain, total, report.source_share, report.source_error, worst);
    pool_moments(s2, q2, per_chain, total, report.transit_share, report.transit_error, worst);
    if (worst > 5.0) {
        report.warnings.push_back("chains disagree by up to " + csv::format_double(worst) +
                                  " standard errors; increase iterations or burn-in");
    }
    return report;
}

} // namespace detail

/// Target flow: all targets absorb simultaneously.
inline FlowReport run_tnpf(const OwnershipGraph& g, const NpfConfig& cfg,
                           std::span<const NodeId> targets, unsigned workers = 1) {
    if (targets.empty()) throw Error(ErrorCode::UnknownTarget, "no target given");
    std::vector<NodeId> columns;
    for (const auto t : targets) {
        if (!g.contains(t)) {
            throw Error(ErrorCode::UnknownTarget,
                        "target index " + std::to_string(t.index) + " is not a node");
        }
        if (std::find(columns.begin(), columns.end(), t) == columns.end()) columns.push_back(t);
    }
    return detail::run_flow(g, cfg, std::move(columns), true, workers);
}

inline FlowReport run_tnpf(const ImputedGraph& g, const NpfConfig& cfg,
                           std::span<const NodeId> targets, unsigned workers = 1) {
    return run_tnpf(g.graph, cfg, targets, workers);
}

/// All-pairs flow matrix: column f treats f as the only absorbing node.
inline FlowReport run_npf_global(const OwnershipGraph& g, const NpfConfig& cfg,
                                 unsigned workers = 1) {
    std::vector<NodeId> columns(g.size());
    for (std::uint32_t j = 0; j < g.size(); ++j) columns[j] = NodeId{j};
    return detail::run_flow(g, cfg, std::move(columns), false, workers);
}

inline FlowReport run_npf_global(const ImputedGraph& g, const NpfConfig& cfg,
                                 unsigned workers = 1) {
    return run_npf_global(g.graph, cfg, workers);
}

} // namespace netcontrol
