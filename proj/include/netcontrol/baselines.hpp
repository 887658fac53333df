#pragma once

// Structural comparison measures: Net Control Index, eigenvector centrality
// and PageRank over the share-weighted ownership graph.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "netcontrol/imputation.hpp"

namespace netcontrol {

struct NciResult {
    std::size_t count = 0;
    std::vector<NodeId> members;
    double covered = 0.0;
};

/// Smallest set of owners (largest first, ties by index) covering `coverage`.
inline NciResult nci(const OwnershipGraph& g, NodeId firm, double coverage) {
    if (!(coverage > 0.0 && coverage <= 1.0)) {
        throw Error(ErrorCode::InvalidConfig, "coverage must lie in (0,1]");
    }
    auto owners = incoming_shares(g, firm);
    std::stable_sort(owners.begin(), owners.end(),
                     [](const OwnerShare& a, const OwnerShare& b) { return a.share > b.share; });
    NciResult out;
    for (const auto& o : owners) {
        out.members.push_back(o.owner);
        out.covered += o.share;
        if (out.covered >= coverage - 1e-12) {
            out.count = out.members.size();
            return out;
        }
    }
    throw Error(ErrorCode::Unreachable,
                "owners cover only " + csv::format_double(out.covered) + " < " +
                    csv::format_double(coverage),
                g.node(firm).id);
}

enum class Normalization { L1, L2 };

struct CentralityVector {
    std::vector<double> scores;
    Normalization normalization = Normalization::L1;
    std::size_t iterations = 0;
    std::vector<std::string> warnings;
};

/// Dominant eigenvector of the ownership adjacency: score(j) is proportional
/// to the share-weighted scores of j's owners. Iterates with A^T + I, which
/// has the same Perron vector as A^T and damps periodic oscillation.
inline CentralityVector eigenvector_centrality(const OwnershipGraph& g, double tol = 1e-12,
                                               std::size_t max_iter = 10'000) {
    const auto n = g.size();
    if (n == 0) throw Error(ErrorCode::InvalidConfig, "graph has no nodes");
    if (!(tol > 0.0)) throw Error(ErrorCode::InvalidConfig, "tolerance must be positive");

    CentralityVector out;
    out.normalization = Normalization::L2;
    const double uniform = 1.0 / std::sqrt(static_cast<double>(n));
    if (g.edge_count() == 0) {
        out.scores.assign(n, uniform);
        out.warnings.push_back("graph has no edges; returning the uniform vector");
        return out;
    }

    std::vector<double> x(n, uniform);
    std::vector<double> next(n);
    double residual = 0.0;
    for (std::size_t it = 1; it <= max_iter; ++it) {
        for (std::uint32_t j = 0; j < n; ++j) {
            double s = x[j];
            for (const auto& o : g.incoming(NodeId{j})) s += o.share * x[o.owner.index];
            next[j] = s;
        }
        double norm = 0.0;
        for (double v : next) norm += v * v;
        norm = std::sqrt(norm);
        residual = 0.0;
        for (std::uint32_t j = 0; j < n; ++j) {
            next[j] /= norm;
            residual += (next[j] - x[j]) * (next[j] - x[j]);
        }
        residual = std::sqrt(residual);
        x.swap(next);
        if (residual < tol) {
            out.scores = std::move(x);
            out.iterations = it;
            return out;
        }
    }
    throw Error(ErrorCode::NoConvergence,
                "eigenvector centrality did not converge in " + std::to_string(max_iter) +
                    " iterations (last residual " + csv::format_double(residual) + ")");
}

struct PageRankOptions {
    double alpha = 0.85;
    double tol = 1e-12;
    std::size_t max_iter = 100'000;
    /// Walk owned -> owner so that score accrues to owners.
    bool reverse = true;
};

/// Teleporting random walk on the share-weighted graph; rows normalized,
/// dangling mass teleported uniformly. Sums to one.
inline CentralityVector pagerank(const OwnershipGraph& g, const PageRankOptions& options = {}) {
    const auto n = g.size();
    if (n == 0) throw Error(ErrorCode::InvalidConfig, "graph has no nodes");
    if (!(options.alpha > 0.0 && options.alpha < 1.0)) {
        throw Error(ErrorCode::InvalidConfig, "alpha must lie in (0,1)");
    }
    if (!(options.tol > 0.0)) throw Error(ErrorCode::InvalidConfig, "tolerance must be positive");

    // Walk edges as (from, to, weight).
    struct Arc {
        std::uint32_t from, to;
        double w;
    };
    std::vector<Arc> arcs;
    arcs.reserve(g.edge_count());
    std::vector<double> out_weight(n, 0.0);
    for (const auto& e : g.edges()) {
        const auto from = options.reverse ? e.owned.index : e.owner.index;
        const auto to = options.reverse ? e.owner.index : e.owned.index;
        arcs.push_back({from, to, e.share});
        out_weight[from] += e.share;
    }

    const double inv_n = 1.0 / static_cast<double>(n);
    std::vector<double> rank(n, inv_n);
    std::vector<double> next(n);
    CentralityVector out;
    out.normalization = Normalization::L1;
    for (std::size_t it = 1; it <= options.max_iter; ++it) {
        double dangling = 0.0;
        for (std::uint32_t i = 0; i < n; ++i) {
            if (out_weight[i] == 0.0) dangling += rank[i];
        }
        const double base = (options.alpha * dangling + (1.0 - options.alpha)) * inv_n;
        std::fill(next.begin(), next.end(), base);
        for (const auto& a : arcs) {
            next[a.to] += options.alpha * rank[a.from] * a.w / out_weight[a.from];
        }
        double total = 0.0;
        for (double v : next) total += v;
        double delta = 0.0;
        for (std::uint32_t i = 0; i < n; ++i) {
            next[i] /= total;
            delta += std::abs(next[i] - rank[i]);
        }
        rank.swap(next);
        if (delta < options.tol) {
            out.iterations = it;
            break;
        }
        out.iterations = it;
    }
    out.scores = std::move(rank);
    return out;
}

} // namespace netcontrol
