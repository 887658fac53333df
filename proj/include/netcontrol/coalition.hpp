#pragma once

// Randomized coalition formation shared by the index and flow engines.
//
// For a firm j, shareholders join in uniformly random order; the one whose
// addition first lifts the running total to q_j is pivotal. When a prior
// control map is given, shareholders are grouped by their prior ultimate
// controller: groups join in random order, members within the crossing group
// in random order. The crossing shareholder becomes the direct controller and
// its group's controller the ultimate controller.

#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "netcontrol/graph.hpp"
#include "netcontrol/rng.hpp"

namespace netcontrol {

/// Absolute slack on the "running share reaches q" comparison. Absorbs
/// summation-order rounding so that, e.g., 0.5 + 0.3 reaches 0.8 in any order.
inline constexpr double kThresholdSlack = 1e-12;

constexpr bool reaches_threshold(double running, double q) noexcept {
    return running >= q - kThresholdSlack;
}

/// One realization of direct (L_D) and ultimate (L_I) controllers.
/// Self-controlled nodes map to themselves in both.
struct ControlMap {
    std::vector<NodeId> direct;
    std::vector<NodeId> ultimate;

    static ControlMap identity(std::size_t n) {
        ControlMap m;
        m.direct.resize(n);
        for (std::uint32_t i = 0; i < n; ++i) m.direct[i] = NodeId{i};
        m.ultimate = m.direct;
        return m;
    }

    std::size_t size() const noexcept { return direct.size(); }
    bool self_controlled(NodeId j) const { return direct.at(j.index) == j; }

    bool operator==(const ControlMap&) const = default;
};

/// x~_ij: shares of every firm re-aggregated by the prior ultimate controller
/// of each shareholder. Columns are ordered by controller index.
struct ConsolidatedShares {
    std::vector<std::vector<OwnerShare>> columns;

    std::span<const OwnerShare> column(NodeId firm) const { return columns.at(firm.index); }

    double at(NodeId controller, NodeId firm) const {
        for (const auto& s : columns.at(firm.index)) {
            if (s.owner == controller) return s.share;
        }
        return 0.0;
    }
};

inline ConsolidatedShares consolidate(const OwnershipGraph& g, const ControlMap& prior) {
    ConsolidatedShares out;
    out.columns.resize(g.size());
    for (std::uint32_t j = 0; j < g.size(); ++j) {
        auto& col = out.columns[j];
        for (const auto& s : g.incoming(NodeId{j})) {
            const NodeId controller = prior.ultimate.at(s.owner.index);
            auto it = std::find_if(col.begin(), col.end(),
                                   [&](const OwnerShare& c) { return c.owner == controller; });
            if (it == col.end()) col.push_back({controller, s.share});
            else it->share += s.share;
        }
        std::sort(col.begin(), col.end(),
                  [](const OwnerShare& a, const OwnerShare& b) { return a.owner < b.owner; });
    }
    return out;
}

/// Pivotal owner of a uniformly random ordering, or nullopt when the full
/// coalition stays below q. Owners must have positive shares.
inline std::optional<NodeId> draw_pivot(std::span<const OwnerShare> shares, double q,
                                        RngStream& rng, std::vector<std::uint32_t>& scratch) {
    double total = 0.0;
    for (const auto& s : shares) total += s.share;
    if (!reaches_threshold(total, q)) return std::nullopt;

    const auto m = shares.size();
    scratch.resize(m);
    std::iota(scratch.begin(), scratch.end(), 0u);
    double running = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const auto pick = i + rng.below(m - i);
        std::swap(scratch[i], scratch[pick]);
        running += shares[scratch[i]].share;
        if (reaches_threshold(running, q)) return shares[scratch[i]].owner;
    }
    return shares[scratch[m - 1]].owner;
}

inline std::optional<NodeId> draw_pivot(std::span<const OwnerShare> shares, double q,
                                        RngStream& rng) {
    std::vector<std::uint32_t> scratch;
    return draw_pivot(shares, q, rng, scratch);
}

/// Draws control maps for one graph, reusing scratch space between calls.
/// Firms are visited in index order; every read of the prior map goes to the
/// map passed in, so visit order does not influence the outcome distribution.
class ControlSampler {
public:
    explicit ControlSampler(const OwnershipGraph& g)
        : graph_(&g), group_of_(g.size(), 0), stamp_(g.size(), 0) {}

    void draw(const ControlMap& prior, RngStream& rng, ControlMap& out) {
        const auto& g = *graph_;
        const auto n = g.size();
        out.direct.resize(n);
        out.ultimate.resize(n);
        for (std::uint32_t j = 0; j < n; ++j) {
            const NodeId firm{j};
            const auto owners = g.incoming(firm);
            out.direct[j] = firm;
            out.ultimate[j] = firm;
            if (owners.empty()) continue;
            const double q = g.threshold(firm);
            double total = 0.0;
            for (const auto& s : owners) total += s.share;
            if (!reaches_threshold(total, q)) continue;

            const auto pivot = draw_grouped(owners, prior, q, rng);
            out.direct[j] = pivot;
            out.ultimate[j] = prior.ultimate[pivot.index];
        }
    }

    ControlMap draw(const ControlMap& prior, RngStream& rng) {
        ControlMap out;
        draw(prior, rng, out);
        return out;
    }

private:
    NodeId draw_grouped(std::span<const OwnerShare> owners, const ControlMap& prior, double q,
                        RngStream& rng) {
        ++epoch_;
        group_key_.clear();
        group_total_.clear();
        owner_group_.resize(owners.size());
        for (std::size_t k = 0; k < owners.size(); ++k) {
            const auto key = prior.ultimate[owners[k].owner.index].index;
            if (stamp_[key] != epoch_) {
                stamp_[key] = epoch_;
                group_of_[key] = static_cast<std::uint32_t>(group_key_.size());
                group_key_.push_back(key);
                group_total_.push_back(0.0);
            }
            const auto gid = group_of_[key];
            owner_group_[k] = gid;
            group_total_[gid] += owners[k].share;
        }

        // Members bucketed contiguously per group.
        const auto groups = group_key_.size();
        group_start_.assign(groups + 1, 0);
        for (auto gid : owner_group_) ++group_start_[gid + 1];
        std::partial_sum(group_start_.begin(), group_start_.end(), group_start_.begin());
        members_.resize(owners.size());
        cursor_.assign(group_start_.begin(), group_start_.end() - 1);
        for (std::uint32_t k = 0; k < owners.size(); ++k) {
            members_[cursor_[owner_group_[k]]++] = k;
        }

        order_.resize(groups);
        std::iota(order_.begin(), order_.end(), 0u);
        double running = 0.0;
        for (std::size_t i = 0; i < groups; ++i) {
            std::swap(order_[i], order_[i + rng.below(groups - i)]);
            const auto gid = order_[i];
            if (!reaches_threshold(running + group_total_[gid], q)) {
                running += group_total_[gid];
                continue;
            }
            const auto begin = group_start_[gid];
            const auto size = group_start_[gid + 1] - begin;
            for (std::uint32_t r = 0; r < size; ++r) {
                std::swap(members_[begin + r], members_[begin + r + rng.below(size - r)]);
                running += owners[members_[begin + r]].share;
                if (reaches_threshold(running, q)) return owners[members_[begin + r]].owner;
            }
            return owners[members_[begin + size - 1]].owner;
        }
        // Unreachable when the caller checked the column total.
        return owners.back().owner;
    }

    const OwnershipGraph* graph_;
    std::vector<std::uint32_t> group_of_;
    std::vector<std::uint64_t> stamp_;
    std::uint64_t epoch_ = 0;
    std::vector<std::uint32_t> group_key_;
    std::vector<double> group_total_;
    std::vector<std::uint32_t> owner_group_;
    std::vector<std::uint32_t> group_start_;
    std::vector<std::uint32_t> cursor_;
    std::vector<std::uint32_t> members_;
    std::vector<std::uint32_t> order_;
};

inline ControlMap draw_control_map(const OwnershipGraph& g, const ControlMap& prior,
                                   RngStream& rng) {
    ControlSampler sampler(g);
    return sampler.draw(prior, rng);
}

} // namespace netcontrol
