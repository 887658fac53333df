#pragma once

// Network Power Index: frequency with which each node is the ultimate
// controller of each firm over a chained Monte Carlo of control maps.

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "netcontrol/chain.hpp"
#include "netcontrol/imputation.hpp"

namespace netcontrol {

using NpiConfig = ChainSchedule;

/// Controller frequencies, one column per reported firm.
struct NpiReport {
    std::size_t node_count = 0;
    std::vector<NodeId> columns;
    std::vector<double> frequency;  // [column * node_count + controller]
    std::vector<double> std_error;  // binomial, pooled over all counted iterations
    std::uint64_t samples = 0;      // counted iterations, all chains
    std::vector<std::string> warnings;

    std::optional<std::size_t> column_of(NodeId firm) const {
        for (std::size_t c = 0; c < columns.size(); ++c) {
            if (columns[c] == firm) return c;
        }
        return std::nullopt;
    }

    double at(NodeId controller, NodeId firm) const {
        const auto c = column_of(firm);
        if (!c) throw Error(ErrorCode::UnknownTarget, "firm not in report");
        return frequency[*c * node_count + controller.index];
    }

    double error_at(NodeId controller, NodeId firm) const {
        const auto c = column_of(firm);
        if (!c) throw Error(ErrorCode::UnknownTarget, "firm not in report");
        return std_error[*c * node_count + controller.index];
    }

    std::span<const double> column(std::size_t c) const {
        return {frequency.data() + c * node_count, node_count};
    }
};

namespace detail {

inline NpiReport run_npi_columns(const OwnershipGraph& g, const NpiConfig& cfg,
                                 std::vector<NodeId> columns, unsigned workers) {
    cfg.validate();
    const auto n = g.size();
    const auto width = columns.size();

    std::vector<std::vector<std::uint64_t>> counts(cfg.chains);
    parallel_for(cfg.chains, workers, [&](std::size_t c) {
        auto& local = counts[c];
        local.assign(width * n, 0);
        run_control_chain(g, cfg, static_cast<std::uint32_t>(c), [&](const ControlMap& map) {
            for (std::size_t k = 0; k < width; ++k) {
                ++local[k * n + map.ultimate[columns[k].index].index];
            }
        });
    });

    NpiReport report;
    report.node_count = n;
    report.columns = std::move(columns);
    report.samples = cfg.counted_per_chain() * cfg.chains;
    report.frequency.assign(width * n, 0.0);
    report.std_error.assign(width * n, 0.0);

    std::vector<std::uint64_t> pooled(width * n, 0);
    for (const auto& local : counts) {
        for (std::size_t e = 0; e < pooled.size(); ++e) pooled[e] += local[e];
    }
    const auto total = static_cast<double>(report.samples);
    for (std::size_t e = 0; e < pooled.size(); ++e) {
        const double p = static_cast<double>(pooled[e]) / total;
        report.frequency[e] = p;
        report.std_error[e] = std::sqrt(p * (1.0 - p) / total);
    }

    if (cfg.chains > 1) {
        const auto per_chain = static_cast<double>(cfg.counted_per_chain());
        double worst = 0.0;
        for (std::size_t e = 0; e < pooled.size(); ++e) {
            const double p = report.frequency[e];
            const double se = std::sqrt(p * (1.0 - p) / per_chain);
            if (se == 0.0) continue;
            for (const auto& local : counts) {
                const double pc = static_cast<double>(local[e]) / per_chain;
                worst = std::max(worst, std::abs(pc - p) / se);
            }
        }
        if (worst > 5.0) {
            report.warnings.push_back("chains disagree by up to " + csv::format_double(worst) +
                                      " standard errors; increase iterations or burn-in");
        }
    }
    return report;
}

} // namespace detail

/// Global index: one column per node.
inline NpiReport run_npi(const OwnershipGraph& g, const NpiConfig& cfg, unsigned workers = 1) {
    std::vector<NodeId> columns(g.size());
    for (std::uint32_t j = 0; j < g.size(); ++j) columns[j] = NodeId{j};
    return detail::run_npi_columns(g, cfg, std::move(columns), workers);
}

inline NpiReport run_npi(const ImputedGraph& g, const NpiConfig& cfg, unsigned workers = 1) {
    return run_npi(g.graph, cfg, workers);
}

/// Target index: same chain dynamics as run_npi, reported for `targets` only.
inline NpiReport run_tnpi(const OwnershipGraph& g, const NpiConfig& cfg,
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
    return detail::run_npi_columns(g, cfg, std::move(columns), workers);
}

inline NpiReport run_tnpi(const ImputedGraph& g, const NpiConfig& cfg,
                          std::span<const NodeId> targets, unsigned workers = 1) {
    return run_tnpi(g.graph, cfg, targets, workers);
}

} // namespace netcontrol
