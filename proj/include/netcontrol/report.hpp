#pragma once

// CSV report writers. Rows with a zero estimate are omitted; within each
// target, rows are ordered by descending estimate, then by node index.

#include <algorithm>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "netcontrol/baselines.hpp"
#include "netcontrol/npf.hpp"
#include "netcontrol/npi.hpp"

namespace netcontrol {

namespace detail {

inline void write_columns(const OwnershipGraph& g, std::span<const NodeId> columns,
                          std::size_t n, std::span<const double> value,
                          std::span<const double> error,
                          std::initializer_list<std::string_view> header, std::ostream& out) {
    csv::Writer w(out);
    w.row(header);
    std::vector<std::uint32_t> order(n);
    for (std::size_t c = 0; c < columns.size(); ++c) {
        const auto base = c * n;
        std::iota(order.begin(), order.end(), 0u);
        std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
            return value[base + a] > value[base + b];
        });
        for (const auto i : order) {
            const double v = value[base + i];
            if (v <= 0.0) break;
            w.field(g.node(NodeId{i}).id).field(g.node(columns[c]).id).field(v);
            if (!error.empty()) w.field(error[base + i]);
            w.end_row();
        }
    }
}

} // namespace detail

inline void write_npi_csv(const OwnershipGraph& g, const NpiReport& r, std::ostream& out) {
    detail::write_columns(g, r.columns, r.node_count, r.frequency, r.std_error,
                          {"controller_id", "firm_id", "npi", "stderr"}, out);
}

inline void write_tnpi_csv(const OwnershipGraph& g, const NpiReport& r, std::ostream& out) {
    detail::write_columns(g, r.columns, r.node_count, r.frequency, r.std_error,
                          {"controller_id", "target_id", "tnpi", "stderr"}, out);
}

inline void write_source_csv(const OwnershipGraph& g, const FlowReport& r, std::ostream& out) {
    detail::write_columns(g, r.columns, r.node_count, r.source_share, r.source_error,
                          {"source_id", "target_id", "source_share", "stderr"}, out);
}

inline void write_transit_csv(const OwnershipGraph& g, const FlowReport& r, std::ostream& out) {
    detail::write_columns(g, r.columns, r.node_count, r.transit_share, r.transit_error,
                          {"node_id", "target_id", "transit_share", "stderr"}, out);
}

/// Column-normalized view of the source shares.
inline void write_normalized_source_csv(const OwnershipGraph& g, const FlowReport& r,
                                        std::ostream& out) {
    std::vector<double> normalized;
    normalized.reserve(r.source_share.size());
    for (std::size_t c = 0; c < r.columns.size(); ++c) {
        const auto col = r.normalized_sources(c);
        normalized.insert(normalized.end(), col.begin(), col.end());
    }
    detail::write_columns(g, r.columns, r.node_count, normalized, {},
                          {"source_id", "target_id", "normalized_share"}, out);
}

inline void write_centrality_csv(const OwnershipGraph& g, const CentralityVector& c,
                                 std::ostream& out) {
    csv::Writer w(out);
    w.row({"node_id", "score"});
    for (std::uint32_t i = 0; i < g.size(); ++i) {
        w.field(g.node(NodeId{i}).id).field(c.scores[i]);
        w.end_row();
    }
}

inline void write_nci_csv(const OwnershipGraph& g, NodeId firm, double coverage,
                          const NciResult& r, std::ostream& out) {
    csv::Writer w(out);
    w.row({"firm_id", "coverage", "count", "members"});
    std::string members;
    for (const auto m : r.members) {
        if (!members.empty()) members += ';';
        members += g.node(m).id;
    }
    w.field(g.node(firm).id).field(coverage).field(static_cast<std::uint64_t>(r.count)).field(members);
    w.end_row();
}

} // namespace netcontrol
