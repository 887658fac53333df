#pragma once

// Allocation of unobserved ("missing") ownership mass before control
// analysis. Every scenario only rescales or tops up observed holdings; no
// owner is ever invented.

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "netcontrol/graph.hpp"

namespace netcontrol {

enum class Scenario {
    EqualAll = 1,            // missing mass split equally over all observed owners
    ExcludeMissing = 2,      // observed shares renormalized to sum to one
    ProportionalPrivate = 3, // split over private investors in proportion to their stakes
    EqualPrivate = 4,        // split equally over private investors
};

inline constexpr std::array<Scenario, 4> kAllScenarios = {
    Scenario::EqualAll, Scenario::ExcludeMissing, Scenario::ProportionalPrivate,
    Scenario::EqualPrivate};

constexpr std::string_view to_string(Scenario s) noexcept {
    switch (s) {
    case Scenario::EqualAll: return "equal_all";
    case Scenario::ExcludeMissing: return "exclude_missing";
    case Scenario::ProportionalPrivate: return "proportional_private";
    case Scenario::EqualPrivate: return "equal_private";
    }
    return "unknown";
}

inline Scenario scenario_from_number(int number) {
    if (number < 1 || number > 4) {
        throw Error(ErrorCode::InvalidConfig,
                    "scenario must be 1..4, got " + std::to_string(number));
    }
    return static_cast<Scenario>(number);
}

enum class Provenance { Observed, Imputed };

constexpr std::string_view to_string(Provenance p) noexcept {
    return p == Provenance::Observed ? "observed" : "imputed";
}

struct ImputedGraph {
    OwnershipGraph graph;
    Scenario scenario = Scenario::EqualAll;
    /// Per edge (parallel to graph.edges()): imputed share minus observed share.
    std::vector<double> delta;
    /// Firms with no observed owner; left self-controlled.
    std::vector<NodeId> unowned_firms;

    Provenance provenance(std::size_t edge) const {
        return delta.at(edge) == 0.0 ? Provenance::Observed : Provenance::Imputed;
    }

    /// A graph that needs no imputation, e.g. one that is complete already.
    static ImputedGraph observed(OwnershipGraph g, Scenario s = Scenario::EqualAll) {
        ImputedGraph out;
        out.delta.assign(g.edge_count(), 0.0);
        out.graph = std::move(g);
        out.scenario = s;
        return out;
    }
};

namespace detail {

inline bool is_private(NodeKind kind) { return kind == NodeKind::PrivateInvestor; }

} // namespace detail

/// Applies one allocation scenario to every firm. Throws NoPrivateShareholder
/// (scenarios 3-4) when a firm with missing mass has no private owner.
inline ImputedGraph impute(const OwnershipGraph& g, Scenario scenario) {
    std::vector<double> shares(g.edge_count());
    for (std::size_t e = 0; e < shares.size(); ++e) shares[e] = g.edges()[e].share;

    ImputedGraph out;
    out.scenario = scenario;

    for (std::uint32_t j = 0; j < g.size(); ++j) {
        const NodeId firm{j};
        const auto owners = g.incoming(firm);
        const auto edge_ids = g.incoming_edges(firm);
        if (owners.empty()) {
            if (g.node(firm).kind == NodeKind::Firm) out.unowned_firms.push_back(firm);
            continue;
        }
        const double total = g.incoming_total(firm);
        const double missing = 1.0 - total;
        if (missing <= kShareEpsilon) continue;

        switch (scenario) {
        case Scenario::EqualAll: {
            const double add = missing / static_cast<double>(owners.size());
            for (auto e : edge_ids) shares[e] += add;
            break;
        }
        case Scenario::ExcludeMissing:
            for (auto e : edge_ids) shares[e] /= total;
            break;
        case Scenario::ProportionalPrivate:
        case Scenario::EqualPrivate: {
            double private_total = 0.0;
            std::size_t private_count = 0;
            for (const auto& o : owners) {
                if (detail::is_private(g.node(o.owner).kind)) {
                    private_total += o.share;
                    ++private_count;
                }
            }
            if (private_count == 0) {
                throw Error(ErrorCode::NoPrivateShareholder,
                            "missing mass " + csv::format_double(missing) +
                                " but no private_investor owner",
                            g.node(firm).id);
            }
            for (std::size_t k = 0; k < owners.size(); ++k) {
                if (!detail::is_private(g.node(owners[k].owner).kind)) continue;
                const double add = scenario == Scenario::EqualPrivate
                                       ? missing / static_cast<double>(private_count)
                                       : missing * owners[k].share / private_total;
                shares[edge_ids[k]] += add;
            }
            break;
        }
        }
        for (auto e : edge_ids) shares[e] = std::min(shares[e], 1.0);
    }

    out.delta.resize(shares.size());
    for (std::size_t e = 0; e < shares.size(); ++e) out.delta[e] = shares[e] - g.edges()[e].share;
    out.graph = g.with_shares(shares);
    return out;
}

struct ScenarioOutcome {
    Scenario scenario;
    std::optional<ImputedGraph> result;
    std::optional<Error> error;
};

/// All four scenarios in order; failures are recorded, never thrown.
inline std::vector<ScenarioOutcome> scenario_sweep(const OwnershipGraph& g) {
    std::vector<ScenarioOutcome> out;
    out.reserve(kAllScenarios.size());
    for (const auto s : kAllScenarios) {
        try {
            out.push_back({s, impute(g, s), std::nullopt});
        } catch (const Error& e) {
            out.push_back({s, std::nullopt, e});
        }
    }
    return out;
}

inline void write_imputed_edges_csv(const ImputedGraph& ig, std::ostream& out) {
    csv::Writer w(out);
    w.row({"owner_id", "owned_id", "share", "provenance"});
    const auto& g = ig.graph;
    for (std::size_t e = 0; e < g.edge_count(); ++e) {
        const auto& edge = g.edges()[e];
        w.field(g.node(edge.owner).id)
            .field(g.node(edge.owned).id)
            .field(edge.share)
            .field(to_string(ig.provenance(e)));
        w.end_row();
    }
}

} // namespace netcontrol
