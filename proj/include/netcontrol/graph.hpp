#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <functional>
#include <istream>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "netcontrol/csv.hpp"
#include "netcontrol/error.hpp"

namespace netcontrol {

/// Dense index of a node within one OwnershipGraph.
struct NodeId {
    std::uint32_t index = 0;

    constexpr auto operator<=>(const NodeId&) const = default;
};

/// Tolerance on the per-firm "shares sum to at most one" check.
inline constexpr double kShareEpsilon = 1e-9;

enum class NodeKind { State, PrivateInvestor, Firm, Individual, Unknown };

constexpr std::string_view to_string(NodeKind kind) noexcept {
    switch (kind) {
    case NodeKind::State: return "state";
    case NodeKind::PrivateInvestor: return "private_investor";
    case NodeKind::Firm: return "firm";
    case NodeKind::Individual: return "individual";
    case NodeKind::Unknown: return "unknown";
    }
    return "unknown";
}

inline std::optional<NodeKind> parse_node_kind(std::string_view text) {
    const auto name = csv::lower(csv::trim(text));
    if (name.empty() || name == "unknown") return NodeKind::Unknown;
    if (name == "state") return NodeKind::State;
    if (name == "private_investor") return NodeKind::PrivateInvestor;
    if (name == "firm") return NodeKind::Firm;
    if (name == "individual") return NodeKind::Individual;
    return std::nullopt;
}

struct NodeRecord {
    std::string id;
    std::string name;
    NodeKind kind = NodeKind::Unknown;
    std::string country;
    double value = 1.0;

    bool operator==(const NodeRecord&) const = default;
};

struct OwnershipEdge {
    NodeId owner;
    NodeId owned;
    double share = 0.0;

    bool operator==(const OwnershipEdge&) const = default;
};

/// One positive holding as seen from the owned firm.
struct OwnerShare {
    NodeId owner;
    double share = 0.0;

    bool operator==(const OwnerShare&) const = default;
};

/// One positive holding as seen from the owner.
struct Holding {
    NodeId owned;
    double share = 0.0;
    std::uint32_t edge = 0;
};

/// Immutable, validated ownership network. Nodes are dense (0..n-1); shares
/// are fractions in (0,1]; every node carries a control threshold.
class OwnershipGraph {
public:
    OwnershipGraph() = default;

    /// Validates and indexes. Throws Error on any invariant violation.
    OwnershipGraph(std::vector<NodeRecord> nodes, std::vector<OwnershipEdge> edges,
                   std::vector<double> thresholds, std::vector<NodeId> targets = {})
        : nodes_(std::move(nodes)), edges_(std::move(edges)),
          thresholds_(std::move(thresholds)), targets_(std::move(targets)) {
        validate_and_index();
    }

    std::size_t size() const noexcept { return nodes_.size(); }
    std::size_t edge_count() const noexcept { return edges_.size(); }

    const NodeRecord& node(NodeId id) const { return nodes_.at(id.index); }
    std::span<const NodeRecord> nodes() const noexcept { return nodes_; }
    std::span<const OwnershipEdge> edges() const noexcept { return edges_; }
    std::span<const NodeId> targets() const noexcept { return targets_; }
    std::span<const double> thresholds() const noexcept { return thresholds_; }

    double threshold(NodeId firm) const { return thresholds_.at(firm.index); }
    double value(NodeId id) const { return nodes_.at(id.index).value; }

    std::optional<NodeId> find(std::string_view id) const {
        const auto it = by_id_.find(std::string(id));
        if (it == by_id_.end()) return std::nullopt;
        return it->second;
    }

    NodeId at(std::string_view id) const {
        if (auto found = find(id)) return *found;
        throw Error(ErrorCode::UnknownNode, "no node with id '" + std::string(id) + "'");
    }

    /// Owners of `firm`, ordered by dense index.
    std::span<const OwnerShare> incoming(NodeId firm) const {
        check(firm);
        return {in_shares_.data() + in_offset_[firm.index],
                in_shares_.data() + in_offset_[firm.index + 1]};
    }

    /// Edge indices parallel to incoming(firm).
    std::span<const std::uint32_t> incoming_edges(NodeId firm) const {
        check(firm);
        return {in_edges_.data() + in_offset_[firm.index],
                in_edges_.data() + in_offset_[firm.index + 1]};
    }

    std::span<const Holding> outgoing(NodeId owner) const {
        check(owner);
        return {out_.data() + out_offset_[owner.index],
                out_.data() + out_offset_[owner.index + 1]};
    }

    double incoming_total(NodeId firm) const {
        double total = 0.0;
        for (const auto& h : incoming(firm)) total += h.share;
        return total;
    }

    /// Share of `firm` held by `owner`, zero when there is no edge.
    double share(NodeId owner, NodeId firm) const {
        const auto in = incoming(firm);
        const auto it = std::lower_bound(in.begin(), in.end(), owner,
                                         [](const OwnerShare& s, NodeId o) { return s.owner < o; });
        return (it != in.end() && it->owner == owner) ? it->share : 0.0;
    }

    bool contains(NodeId id) const noexcept { return id.index < nodes_.size(); }

    /// Same nodes, thresholds and targets with replaced per-edge shares
    /// (parallel to edges()).
    OwnershipGraph with_shares(std::span<const double> shares) const {
        if (shares.size() != edges_.size()) {
            throw Error(ErrorCode::InvalidConfig, "share vector does not match edge count");
        }
        auto edges = edges_;
        for (std::size_t e = 0; e < edges.size(); ++e) edges[e].share = shares[e];
        return OwnershipGraph(nodes_, std::move(edges), thresholds_, targets_);
    }

    OwnershipGraph with_targets(std::vector<NodeId> targets) const {
        return OwnershipGraph(nodes_, edges_, thresholds_, std::move(targets));
    }

    bool operator==(const OwnershipGraph& other) const {
        return nodes_ == other.nodes_ && edges_ == other.edges_ &&
               thresholds_ == other.thresholds_ && targets_ == other.targets_;
    }

private:
    void check(NodeId id) const {
        if (!contains(id)) {
            throw Error(ErrorCode::UnknownNode, "node index " + std::to_string(id.index) +
                                                    " out of range");
        }
    }

    void validate_and_index() {
        const auto n = nodes_.size();
        if (thresholds_.size() != n) {
            throw Error(ErrorCode::InvalidThreshold, "threshold vector does not match node count");
        }
        by_id_.clear();
        by_id_.reserve(n);
        for (std::uint32_t i = 0; i < n; ++i) {
            const auto& rec = nodes_[i];
            if (!by_id_.emplace(rec.id, NodeId{i}).second) {
                throw Error(ErrorCode::DuplicateNode, "duplicate node id '" + rec.id + "'");
            }
            if (!(rec.value >= 0.0) || !std::isfinite(rec.value)) {
                throw Error(ErrorCode::InvalidValue, "node value must be finite and >= 0",
                            rec.id);
            }
            if (!(thresholds_[i] > 0.0 && thresholds_[i] <= 1.0)) {
                throw Error(ErrorCode::InvalidThreshold, "threshold must lie in (0,1]", rec.id);
            }
        }
        for (const auto t : targets_) {
            if (t.index >= n) {
                throw Error(ErrorCode::UnknownTarget,
                            "target index " + std::to_string(t.index) + " out of range");
            }
        }

        std::vector<std::uint32_t> in_count(n + 1, 0);
        std::vector<std::uint32_t> out_count(n + 1, 0);
        for (const auto& e : edges_) {
            if (e.owner.index >= n || e.owned.index >= n) {
                throw Error(ErrorCode::UnknownNode, "edge endpoint out of range");
            }
            if (e.owner == e.owned) {
                throw Error(ErrorCode::SelfLoop, "self-holding is not allowed",
                            nodes_[e.owner.index].id);
            }
            if (!(e.share > 0.0 && e.share <= 1.0)) {
                throw Error(ErrorCode::ShareOutOfRange,
                            "share " + csv::format_double(e.share) + " outside (0,1]",
                            nodes_[e.owner.index].id + "->" + nodes_[e.owned.index].id);
            }
            ++in_count[e.owned.index + 1];
            ++out_count[e.owner.index + 1];
        }
        std::partial_sum(in_count.begin(), in_count.end(), in_count.begin());
        std::partial_sum(out_count.begin(), out_count.end(), out_count.begin());
        in_offset_ = in_count;
        out_offset_ = out_count;

        std::vector<std::uint32_t> order(edges_.size());
        std::iota(order.begin(), order.end(), 0u);
        std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
            const auto& ea = edges_[a];
            const auto& eb = edges_[b];
            return std::pair(ea.owned, ea.owner) < std::pair(eb.owned, eb.owner);
        });
        in_shares_.resize(edges_.size());
        in_edges_.resize(edges_.size());
        for (std::size_t k = 0; k < order.size(); ++k) {
            const auto& e = edges_[order[k]];
            if (k > 0) {
                const auto& prev = edges_[order[k - 1]];
                if (prev.owner == e.owner && prev.owned == e.owned) {
                    throw Error(ErrorCode::DuplicateEdge, "duplicate ownership edge",
                                nodes_[e.owner.index].id + "->" + nodes_[e.owned.index].id);
                }
            }
            in_shares_[k] = OwnerShare{e.owner, e.share};
            in_edges_[k] = order[k];
        }

        out_.resize(edges_.size());
        auto cursor = out_offset_;
        for (std::uint32_t e = 0; e < edges_.size(); ++e) {
            const auto& edge = edges_[e];
            out_[cursor[edge.owner.index]++] = Holding{edge.owned, edge.share, e};
        }
        for (std::size_t i = 0; i < n; ++i) {
            std::sort(out_.begin() + out_offset_[i], out_.begin() + out_offset_[i + 1],
                      [](const Holding& a, const Holding& b) { return a.owned < b.owned; });
        }

        for (std::uint32_t j = 0; j < n; ++j) {
            const double total = incoming_total(NodeId{j});
            if (total > 1.0 + kShareEpsilon) {
                throw Error(ErrorCode::OversubscribedFirm,
                            "incoming shares sum to " + csv::format_double(total), nodes_[j].id);
            }
        }
    }

    std::vector<NodeRecord> nodes_;
    std::vector<OwnershipEdge> edges_;
    std::vector<double> thresholds_;
    std::vector<NodeId> targets_;

    std::unordered_map<std::string, NodeId> by_id_;
    std::vector<std::uint32_t> in_offset_;
    std::vector<OwnerShare> in_shares_;
    std::vector<std::uint32_t> in_edges_;
    std::vector<std::uint32_t> out_offset_;
    std::vector<Holding> out_;
};

/// Owners of `firm` with positive share, ordered by dense index.
inline std::vector<OwnerShare> incoming_shares(const OwnershipGraph& g, NodeId firm) {
    const auto in = g.incoming(firm);
    return {in.begin(), in.end()};
}

/// 1 - sum of recorded incoming shares, clipped at zero.
inline double missing_mass(const OwnershipGraph& g, NodeId firm) {
    return std::max(0.0, 1.0 - g.incoming_total(firm));
}

/// Accumulates string-keyed rows and assigns dense indices in first-seen
/// order: declared nodes first, then nodes first referenced by an edge.
class GraphBuilder {
public:
    explicit GraphBuilder(double default_threshold = 0.5) : default_threshold_(default_threshold) {
        if (!(default_threshold > 0.0 && default_threshold <= 1.0)) {
            throw Error(ErrorCode::InvalidThreshold, "default threshold must lie in (0,1]");
        }
    }

    NodeId add_node(NodeRecord record, const std::string& context = {}) {
        if (record.id.empty()) {
            throw Error(ErrorCode::MalformedRow, "empty node id", context);
        }
        if (index_.count(record.id)) {
            throw Error(ErrorCode::DuplicateNode, "duplicate node id '" + record.id + "'", context);
        }
        if (!(record.value >= 0.0) || !std::isfinite(record.value)) {
            throw Error(ErrorCode::InvalidValue, "node value must be finite and >= 0", context);
        }
        const NodeId id{static_cast<std::uint32_t>(nodes_.size())};
        index_.emplace(record.id, id);
        nodes_.push_back(std::move(record));
        return id;
    }

    /// Existing node, or a fresh kind=Unknown node with value 1.
    NodeId node(const std::string& id, const std::string& context = {}) {
        if (const auto it = index_.find(id); it != index_.end()) return it->second;
        NodeRecord rec;
        rec.id = id;
        rec.name = id;
        return add_node(std::move(rec), context);
    }

    void add_edge(const std::string& owner, const std::string& owned, double share,
                  const std::string& context = {}) {
        if (owner == owned) {
            throw Error(ErrorCode::SelfLoop, "self-holding of '" + owner + "'", context);
        }
        if (!(share > 0.0 && share <= 1.0)) {
            throw Error(ErrorCode::ShareOutOfRange,
                        "share " + csv::format_double(share) + " outside (0,1]", context);
        }
        const auto a = node(owner, context);
        const auto b = node(owned, context);
        if (!edge_keys_.emplace(key(a, b)).second) {
            throw Error(ErrorCode::DuplicateEdge, "duplicate edge " + owner + "->" + owned,
                        context);
        }
        edges_.push_back(OwnershipEdge{a, b, share});
    }

    void set_threshold(const std::string& firm, double q, const std::string& context = {}) {
        const auto it = index_.find(firm);
        if (it == index_.end()) {
            throw Error(ErrorCode::UnknownNode, "threshold for unknown firm '" + firm + "'",
                        context);
        }
        if (!(q > 0.0 && q <= 1.0)) {
            throw Error(ErrorCode::InvalidThreshold, "threshold must lie in (0,1]", context);
        }
        thresholds_[it->second.index] = q;
    }

    void add_target(const std::string& id) {
        const auto it = index_.find(id);
        if (it == index_.end()) {
            throw Error(ErrorCode::UnknownTarget, "target '" + id + "' is not a node");
        }
        if (std::find(targets_.begin(), targets_.end(), it->second) == targets_.end()) {
            targets_.push_back(it->second);
        }
    }

    OwnershipGraph build() const {
        std::vector<double> q(nodes_.size(), default_threshold_);
        for (const auto& [idx, value] : thresholds_) q[idx] = value;
        return OwnershipGraph(nodes_, edges_, std::move(q), targets_);
    }

private:
    static std::uint64_t key(NodeId a, NodeId b) {
        return (static_cast<std::uint64_t>(a.index) << 32) | b.index;
    }

    double default_threshold_;
    std::vector<NodeRecord> nodes_;
    std::vector<OwnershipEdge> edges_;
    std::unordered_map<std::string, NodeId> index_;
    std::unordered_set<std::uint64_t> edge_keys_;
    std::unordered_map<std::uint32_t, double> thresholds_;
    std::vector<NodeId> targets_;
};

struct LoadOptions {
    double default_threshold = 0.5;
    bool shares_as_percent = false;
    std::string nodes_name = "nodes";
    std::string edges_name = "edges";
    std::string thresholds_name = "thresholds";
};

/// Reads the nodes, edges and (optional) thresholds CSV streams.
inline OwnershipGraph load_graph(std::istream& nodes, std::istream& edges,
                                 const LoadOptions& options = {},
                                 std::istream* thresholds = nullptr) {
    GraphBuilder builder(options.default_threshold);

    csv::Reader node_reader(nodes, options.nodes_name);
    if (node_reader.expect_header({"id", "name", "kind", "country", "value"})) {
        while (auto row = node_reader.next()) {
            const auto where = node_reader.where(row->line);
            if (row->fields.size() != 5) {
                throw Error(ErrorCode::MalformedRow,
                            "expected 5 columns, got " + std::to_string(row->fields.size()), where);
            }
            NodeRecord rec;
            rec.id = row->fields[0];
            rec.name = row->fields[1];
            const auto kind = parse_node_kind(row->fields[2]);
            if (!kind) {
                throw Error(ErrorCode::MalformedRow, "unknown kind '" + row->fields[2] + "'", where);
            }
            rec.kind = *kind;
            rec.country = row->fields[3];
            if (!csv::trim(row->fields[4]).empty()) {
                const auto v = csv::parse_double(row->fields[4]);
                if (!v) {
                    throw Error(ErrorCode::MalformedRow, "unparseable value '" + row->fields[4] + "'",
                                where);
                }
                rec.value = *v;
            }
            builder.add_node(std::move(rec), where);
        }
    }

    csv::Reader edge_reader(edges, options.edges_name);
    if (edge_reader.expect_header({"owner_id", "owned_id", "share"})) {
        while (auto row = edge_reader.next()) {
            const auto where = edge_reader.where(row->line);
            if (row->fields.size() != 3) {
                throw Error(ErrorCode::MalformedRow,
                            "expected 3 columns, got " + std::to_string(row->fields.size()), where);
            }
            if (row->fields[0].empty() || row->fields[1].empty()) {
                throw Error(ErrorCode::MalformedRow, "empty node id", where);
            }
            auto share = csv::parse_double(row->fields[2]);
            if (!share) {
                throw Error(ErrorCode::MalformedRow, "unparseable share '" + row->fields[2] + "'",
                            where);
            }
            if (options.shares_as_percent) *share /= 100.0;
            builder.add_edge(row->fields[0], row->fields[1], *share, where);
        }
    }

    if (thresholds != nullptr) {
        csv::Reader q_reader(*thresholds, options.thresholds_name);
        if (q_reader.expect_header({"firm_id", "q"})) {
            while (auto row = q_reader.next()) {
                const auto where = q_reader.where(row->line);
                if (row->fields.size() != 2) {
                    throw Error(ErrorCode::MalformedRow,
                                "expected 2 columns, got " + std::to_string(row->fields.size()),
                                where);
                }
                const auto q = csv::parse_double(row->fields[1]);
                if (!q) {
                    throw Error(ErrorCode::MalformedRow, "unparseable q '" + row->fields[1] + "'",
                                where);
                }
                builder.set_threshold(row->fields[0], *q, where);
            }
        }
    }

    try {
        return builder.build();
    } catch (const Error& e) {
        throw Error(e.code(), e.detail(), e.context().empty() ? options.edges_name : e.context());
    }
}

inline void write_nodes_csv(const OwnershipGraph& g, std::ostream& out) {
    csv::Writer w(out);
    w.row({"id", "name", "kind", "country", "value"});
    for (const auto& n : g.nodes()) {
        w.field(n.id).field(n.name).field(to_string(n.kind)).field(n.country).field(n.value);
        w.end_row();
    }
}

inline void write_edges_csv(const OwnershipGraph& g, std::ostream& out) {
    csv::Writer w(out);
    w.row({"owner_id", "owned_id", "share"});
    for (const auto& e : g.edges()) {
        w.field(g.node(e.owner).id).field(g.node(e.owned).id).field(e.share);
        w.end_row();
    }
}

/// Writes only thresholds that differ from `default_threshold`.
inline void write_thresholds_csv(const OwnershipGraph& g, double default_threshold,
                                 std::ostream& out) {
    csv::Writer w(out);
    w.row({"firm_id", "q"});
    for (std::uint32_t i = 0; i < g.size(); ++i) {
        const double q = g.threshold(NodeId{i});
        if (q != default_threshold) {
            w.field(g.node(NodeId{i}).id).field(q);
            w.end_row();
        }
    }
}

/// Longest shortest directed path (owner -> owned) over all reachable pairs.
inline std::size_t ownership_diameter(const OwnershipGraph& g) {
    const auto n = g.size();
    std::size_t best = 0;
    std::vector<std::uint32_t> dist(n);
    std::vector<std::uint32_t> queue;
    queue.reserve(n);
    constexpr auto kUnseen = static_cast<std::uint32_t>(-1);
    for (std::uint32_t s = 0; s < n; ++s) {
        if (g.outgoing(NodeId{s}).empty()) continue;
        std::fill(dist.begin(), dist.end(), kUnseen);
        queue.clear();
        dist[s] = 0;
        queue.push_back(s);
        for (std::size_t head = 0; head < queue.size(); ++head) {
            const auto u = queue[head];
            for (const auto& h : g.outgoing(NodeId{u})) {
                if (dist[h.owned.index] == kUnseen) {
                    dist[h.owned.index] = dist[u] + 1;
                    best = std::max<std::size_t>(best, dist[h.owned.index]);
                    queue.push_back(h.owned.index);
                }
            }
        }
    }
    return best;
}

} // namespace netcontrol

template <>
struct std::hash<netcontrol::NodeId> {
    std::size_t operator()(const netcontrol::NodeId& id) const noexcept {
        return std::hash<std::uint32_t>{}(id.index);
    }
};
