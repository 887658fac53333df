#pragma once

// Exact references for small instances, computed by exhaustive enumeration.
// None of this code calls the samplers it is used to check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <span>
#include <vector>

#include "netcontrol/coalition.hpp"
#include "netcontrol/npf.hpp"

namespace netcontrol::oracle {

inline constexpr std::size_t kMaxEnumeratedOwners = 10;

struct PivotProbability {
    NodeId owner;
    double probability = 0.0;
};

/// Exact Shapley-Shubik pivot probabilities. Orderings in which the full
/// coalition stays below q count towards `self_control`.
struct PivotTable {
    std::vector<PivotProbability> owners; // ordered as given
    double self_control = 0.0;

    double of(NodeId owner) const {
        for (const auto& p : owners) {
            if (p.owner == owner) return p.probability;
        }
        return 0.0;
    }
};

inline PivotTable exact_pivots(std::span<const OwnerShare> shares, double q) {
    const auto m = shares.size();
    if (m > kMaxEnumeratedOwners) {
        throw Error(ErrorCode::TooManyOwners,
                    std::to_string(m) + " owners exceed the enumeration bound of " +
                        std::to_string(kMaxEnumeratedOwners));
    }
    PivotTable table;
    for (const auto& s : shares) table.owners.push_back({s.owner, 0.0});
    if (m == 0) {
        table.self_control = 1.0;
        return table;
    }

    std::vector<std::uint64_t> hits(m, 0);
    std::uint64_t none = 0;
    std::uint64_t total = 0;
    std::vector<std::size_t> perm(m);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    do {
        ++total;
        double running = 0.0;
        bool found = false;
        for (const auto idx : perm) {
            running += shares[idx].share;
            if (reaches_threshold(running, q)) {
                ++hits[idx];
                found = true;
                break;
            }
        }
        if (!found) ++none;
    } while (std::next_permutation(perm.begin(), perm.end()));

    for (std::size_t i = 0; i < m; ++i) {
        table.owners[i].probability = static_cast<double>(hits[i]) / static_cast<double>(total);
    }
    table.self_control = static_cast<double>(none) / static_cast<double>(total);
    return table;
}

/// Exact distribution of the direct controller of `firm` given the prior
/// ultimate controllers: all orders of the prior-controller groups, crossed
/// with all member orders inside every group, are equally likely. The firm
/// itself stands for "no coalition reaches q".
inline std::vector<PivotProbability> exact_direct_distribution(const OwnershipGraph& g,
                                                               NodeId firm,
                                                               std::span<const NodeId> prior) {
    const auto owners = g.incoming(firm);
    if (owners.size() > kMaxEnumeratedOwners) {
        throw Error(ErrorCode::TooManyOwners, "too many owners to enumerate", g.node(firm).id);
    }
    const double q = g.threshold(firm);

    std::vector<std::uint32_t> keys;
    std::vector<std::vector<std::size_t>> groups;
    for (std::size_t k = 0; k < owners.size(); ++k) {
        const auto key = prior[owners[k].owner.index].index;
        auto it = std::find(keys.begin(), keys.end(), key);
        if (it == keys.end()) {
            keys.push_back(key);
            groups.emplace_back();
            it = keys.end() - 1;
        }
        groups[static_cast<std::size_t>(it - keys.begin())].push_back(k);
    }

    std::vector<std::size_t> group_order(groups.size());
    std::iota(group_order.begin(), group_order.end(), std::size_t{0});
    std::uint64_t orders = 0;
    std::map<std::uint32_t, std::uint64_t> hits;
    // Odometer over (group order) x (member order of every group).
    auto members = groups;
    for (auto& grp : members) std::sort(grp.begin(), grp.end());
    do {
        std::function<void(std::size_t)> visit_members = [&](std::size_t gi) {
            if (gi == members.size()) {
                ++orders;
                double running = 0.0;
                for (const auto go : group_order) {
                    for (const auto k : members[go]) {
                        running += owners[k].share;
                        if (reaches_threshold(running, q)) {
                            ++hits[owners[k].owner.index];
                            return;
                        }
                    }
                }
                ++hits[firm.index];
                return;
            }
            auto& grp = members[gi];
            std::sort(grp.begin(), grp.end());
            do {
                visit_members(gi + 1);
            } while (std::next_permutation(grp.begin(), grp.end()));
        };
        visit_members(0);
    } while (std::next_permutation(group_order.begin(), group_order.end()));

    std::vector<PivotProbability> out;
    for (const auto& [node, count] : hits) {
        out.push_back({NodeId{node}, static_cast<double>(count) / static_cast<double>(orders)});
    }
    return out;
}

/// Stationary behaviour of the chained control process over ultimate-
/// controller maps, started from the identity map.
struct ChainDistribution {
    std::vector<std::vector<NodeId>> states; // ultimate maps; states[0] is the identity
    std::vector<double> probability;
    /// Closed communicating classes reachable from the identity. With more
    /// than one, the long-run average depends on which class a run enters.
    std::size_t closed_classes = 0;
    /// Per state and firm: exact direct-controller distribution.
    std::vector<std::vector<std::vector<PivotProbability>>> direct;

    /// Long-run frequency with which `controller` is the ultimate controller of `firm`.
    double marginal(NodeId controller, NodeId firm) const {
        double p = 0.0;
        for (std::size_t s = 0; s < states.size(); ++s) {
            if (states[s][firm.index] == controller) p += probability[s];
        }
        return p;
    }
};

inline constexpr std::size_t kMaxChainNodes = 6;
inline constexpr std::size_t kMaxChainStates = 200'000;

namespace detail {

inline std::size_t count_closed_classes(const std::vector<std::vector<std::uint32_t>>& succ) {
    // Tarjan SCC, iterative.
    const auto n = succ.size();
    std::vector<std::int64_t> index(n, -1), low(n, 0), comp(n, -1);
    std::vector<char> on_stack(n, 0);
    std::vector<std::uint32_t> stack;
    std::int64_t counter = 0;
    std::int64_t components = 0;
    struct Frame {
        std::uint32_t v;
        std::size_t next;
    };
    for (std::uint32_t root = 0; root < n; ++root) {
        if (index[root] >= 0) continue;
        std::vector<Frame> call{{root, 0}};
        index[root] = low[root] = counter++;
        stack.push_back(root);
        on_stack[root] = 1;
        while (!call.empty()) {
            auto& fr = call.back();
            if (fr.next < succ[fr.v].size()) {
                const auto w = succ[fr.v][fr.next++];
                if (index[w] < 0) {
                    index[w] = low[w] = counter++;
                    stack.push_back(w);
                    on_stack[w] = 1;
                    call.push_back({w, 0});
                } else if (on_stack[w]) {
                    low[fr.v] = std::min(low[fr.v], index[w]);
                }
            } else {
                const auto v = fr.v;
                if (low[v] == index[v]) {
                    std::uint32_t w;
                    do {
                        w = stack.back();
                        stack.pop_back();
                        on_stack[w] = 0;
                        comp[w] = components;
                    } while (w != v);
                    ++components;
                }
                call.pop_back();
                if (!call.empty()) low[call.back().v] = std::min(low[call.back().v], low[v]);
            }
        }
    }
    std::vector<char> leaves(static_cast<std::size_t>(components), 1);
    for (std::uint32_t v = 0; v < n; ++v) {
        for (const auto w : succ[v]) {
            if (comp[w] != comp[v]) leaves[static_cast<std::size_t>(comp[v])] = 0;
        }
    }
    return static_cast<std::size_t>(std::count(leaves.begin(), leaves.end(), 1));
}

} // namespace detail

inline ChainDistribution exact_chain_distribution(const OwnershipGraph& g,
                                                  std::size_t max_nodes = kMaxChainNodes) {
    const auto n = g.size();
    if (n > max_nodes) {
        throw Error(ErrorCode::StateSpaceTooLarge,
                    std::to_string(n) + " nodes exceed the chain oracle bound of " +
                        std::to_string(max_nodes));
    }
    ChainDistribution out;
    std::map<std::vector<NodeId>, std::uint32_t> index;
    std::vector<std::vector<std::pair<std::uint32_t, double>>> kernel;

    std::vector<NodeId> identity(n);
    for (std::uint32_t i = 0; i < n; ++i) identity[i] = NodeId{i};
    index.emplace(identity, 0);
    out.states.push_back(identity);

    for (std::size_t s = 0; s < out.states.size(); ++s) {
        const auto prior = out.states[s];
        std::vector<std::vector<PivotProbability>> per_firm(n);
        // Distribution of the next ultimate map, firm by firm.
        std::vector<std::map<std::uint32_t, double>> ultimate(n);
        for (std::uint32_t j = 0; j < n; ++j) {
            per_firm[j] = exact_direct_distribution(g, NodeId{j}, prior);
            for (const auto& p : per_firm[j]) {
                const auto u = p.owner.index == j ? j : prior[p.owner.index].index;
                ultimate[j][u] += p.probability;
            }
        }
        out.direct.push_back(per_firm);

        std::vector<std::pair<std::uint32_t, double>> row;
        std::vector<NodeId> next(n);
        std::function<void(std::uint32_t, double)> expand = [&](std::uint32_t j, double p) {
            if (j == n) {
                auto [it, inserted] =
                    index.emplace(next, static_cast<std::uint32_t>(out.states.size()));
                if (inserted) {
                    if (out.states.size() >= kMaxChainStates) {
                        throw Error(ErrorCode::StateSpaceTooLarge, "too many reachable control maps");
                    }
                    out.states.push_back(next);
                }
                row.emplace_back(it->second, p);
                return;
            }
            for (const auto& [u, pu] : ultimate[j]) {
                if (pu == 0.0) continue;
                next[j] = NodeId{u};
                expand(j + 1, p * pu);
            }
        };
        expand(0, 1.0);
        kernel.push_back(std::move(row));
    }

    const auto states = out.states.size();
    std::vector<std::vector<std::uint32_t>> succ(states);
    for (std::size_t s = 0; s < states; ++s) {
        for (const auto& [t, p] : kernel[s]) succ[s].push_back(t);
    }
    out.closed_classes = detail::count_closed_classes(succ);

    // Lazy chain (I + P) / 2 from the identity: aperiodic, same stationary
    // distributions, and its limit equals the Cesaro limit of P.
    std::vector<double> pi(states, 0.0);
    std::vector<double> next(states);
    pi[0] = 1.0;
    for (std::size_t it = 0; it < 10'000'000; ++it) {
        for (std::size_t s = 0; s < states; ++s) next[s] = 0.5 * pi[s];
        for (std::size_t s = 0; s < states; ++s) {
            if (pi[s] == 0.0) continue;
            for (const auto& [t, p] : kernel[s]) next[t] += 0.5 * pi[s] * p;
        }
        double delta = 0.0;
        for (std::size_t s = 0; s < states; ++s) delta += std::abs(next[s] - pi[s]);
        pi.swap(next);
        if (delta < 1e-14) break;
    }
    out.probability = std::move(pi);
    return out;
}

/// Flow from each source to `target` as a sum of damped child-matrix powers:
/// acc_k = v_k * sum_{t < S} [M^t]_{k,target}. Independent of propagate().
inline std::vector<double> exact_flow(const ChildrenMap& children,
                                      std::span<const std::pair<NodeId, double>> sources,
                                      NodeId target, double damping, std::uint32_t steps,
                                      BranchMode mode) {
    const auto n = children.size();
    std::vector<double> matrix(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& kids = children.children[i];
        for (const auto j : kids) {
            double w = damping * children.inflow[j.index];
            if (mode == BranchMode::Split) w /= static_cast<double>(kids.size());
            matrix[i * n + j.index] += w;
        }
    }
    // column_t = M^t e_target
    std::vector<double> column(n, 0.0);
    std::vector<double> next(n);
    std::vector<double> reach(n, 0.0);
    column[target.index] = 1.0;
    for (std::uint32_t t = 0; t < steps; ++t) {
        for (std::size_t k = 0; k < n; ++k) reach[k] += column[k];
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) s += matrix[i * n + j] * column[j];
            next[i] = s;
        }
        column.swap(next);
    }
    std::vector<double> out;
    out.reserve(sources.size());
    for (const auto& [k, v] : sources) out.push_back(v * reach[k.index]);
    return out;
}

/// Exact expected flows under the chain's long-run distribution, for graphs
/// small enough for exact_chain_distribution. Same layout as FlowReport
/// (errors are zero, samples is zero).
inline FlowReport exact_tnpf(const OwnershipGraph& g, const NpfConfig& cfg,
                             std::span<const NodeId> targets) {
    const auto chain = exact_chain_distribution(g);
    const auto n = g.size();
    FlowReport out;
    out.node_count = n;
    out.columns.assign(targets.begin(), targets.end());
    out.source_share.assign(targets.size() * n, 0.0);
    out.transit_share.assign(targets.size() * n, 0.0);
    out.source_error.assign(targets.size() * n, 0.0);
    out.transit_error.assign(targets.size() * n, 0.0);

    for (std::size_t s = 0; s < chain.states.size(); ++s) {
        const double ps = chain.probability[s];
        if (ps < 1e-15) continue;
        const auto& per_firm = chain.direct[s];
        ControlMap cm = ControlMap::identity(n);
        std::function<void(std::uint32_t, double)> expand = [&](std::uint32_t j, double p) {
            if (j == n) {
                const auto children = build_children(cm, targets, g, cfg.edge_weighted);
                for (std::size_t c = 0; c < targets.size(); ++c) {
                    for (std::uint32_t k = 0; k < n; ++k) {
                        const double v = g.value(NodeId{k});
                        if (v == 0.0) continue;
                        const auto r = propagate(children, NodeId{k}, targets[c], v, cfg.damping,
                                                 cfg.steps, cfg.mode);
                        out.source_share[c * n + k] += ps * p * r.acc;
                        for (std::uint32_t i = 0; i < n; ++i) {
                            out.transit_share[c * n + i] += ps * p * r.transit[i];
                        }
                    }
                }
                return;
            }
            for (const auto& d : per_firm[j]) {
                if (d.probability == 0.0) continue;
                cm.direct[j] = d.owner;
                expand(j + 1, p * d.probability);
            }
            cm.direct[j] = NodeId{j};
        };
        expand(0, 1.0);
    }
    return out;
}

} // namespace netcontrol::oracle
