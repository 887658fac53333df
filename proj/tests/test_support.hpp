#pragma once

#include <initializer_list>
#include <random>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "netcontrol/fixture.hpp"
#include "netcontrol/graph.hpp"

namespace nctest {

using netcontrol::NodeId;
using netcontrol::NodeKind;

struct E {
    std::string owner;
    std::string owned;
    double share;
};

struct N {
    std::string id;
    NodeKind kind = NodeKind::Unknown;
    double value = 1.0;
};

inline netcontrol::OwnershipGraph graph(std::initializer_list<N> nodes, std::initializer_list<E> edges,
                                        double q = 0.5, std::initializer_list<std::string> targets = {}) {
    netcontrol::GraphBuilder b(q);
    for (const auto& n : nodes) {
        netcontrol::NodeRecord r;
        r.id = n.id;
        r.name = n.id;
        r.kind = n.kind;
        r.value = n.value;
        b.add_node(r);
    }
    for (const auto& e : edges) b.add_edge(e.owner, e.owned, e.share);
    for (const auto& t : targets) b.add_target(t);
    return b.build();
}

inline netcontrol::OwnershipGraph graph(std::initializer_list<E> edges, double q = 0.5) {
    return graph({}, edges, q);
}

inline netcontrol::Fixture fixture(const std::string& name) {
    return netcontrol::load_fixture(std::string(NETCONTROL_FIXTURES) + "/" + name);
}

/// Random ownership graph: every firm gets a random set of owners whose
/// shares sum to at most 1 (sometimes less, leaving missing mass). Kinds are
/// drawn so that most firms keep at least one private owner.
inline netcontrol::OwnershipGraph random_graph(std::mt19937_64& rng, std::size_t n,
                                               std::size_t max_owners, double full_prob = 0.3,
                                               bool allow_cycles = true) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    netcontrol::GraphBuilder b(0.5);
    for (std::size_t i = 0; i < n; ++i) {
        netcontrol::NodeRecord r;
        r.id = "n" + std::to_string(i);
        r.name = r.id;
        const double k = u(rng);
        r.kind = k < 0.15 ? NodeKind::State : k < 0.6 ? NodeKind::PrivateInvestor : NodeKind::Firm;
        b.add_node(r);
    }
    for (std::size_t j = 0; j < n; ++j) {
        std::vector<std::size_t> pool;
        for (std::size_t i = 0; i < n; ++i) {
            if (i == j) continue;
            if (!allow_cycles && i > j) continue;
            pool.push_back(i);
        }
        std::shuffle(pool.begin(), pool.end(), rng);
        const auto m = std::min<std::size_t>(pool.size(), std::uniform_int_distribution<std::size_t>(0, max_owners)(rng));
        if (m == 0) continue;
        std::vector<double> w(m);
        double sum = 0.0;
        for (auto& x : w) {
            x = 0.05 + u(rng);
            sum += x;
        }
        const double total = u(rng) < full_prob ? 1.0 : 0.3 + 0.7 * u(rng);
        for (std::size_t k = 0; k < m; ++k) {
            b.add_edge("n" + std::to_string(pool[k]), "n" + std::to_string(j), w[k] / sum * total);
        }
    }
    return b.build();
}

} // namespace nctest
