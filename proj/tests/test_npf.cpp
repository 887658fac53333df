#include <random>

#include <gtest/gtest.h>

#include "netcontrol/npf.hpp"
#include "netcontrol/oracle.hpp"
#include "test_support.hpp"

using namespace netcontrol;
using nctest::E;

namespace {

ChildrenMap children_of(std::size_t n, std::initializer_list<std::pair<std::uint32_t, std::uint32_t>> links) {
    ChildrenMap c;
    c.children.resize(n);
    c.inflow.assign(n, 1.0);
    for (auto [p, ch] : links) c.children[p].push_back(NodeId{ch});
    return c;
}

double exact_single(const ChildrenMap& c, std::uint32_t k, std::uint32_t f, double d, std::uint32_t s,
                    BranchMode mode, double v = 1.0) {
    const std::vector<std::pair<NodeId, double>> src{{NodeId{k}, v}};
    return oracle::exact_flow(c, src, NodeId{f}, d, s, mode)[0];
}

} // namespace

TEST(Children, DirectTranscription) {
    // A=0, B=1, C=2
    ControlMap cm = ControlMap::identity(3);
    cm.direct[1] = NodeId{0};
    cm.direct[2] = NodeId{1};
    const std::vector<NodeId> t{NodeId{2}};
    const auto c = build_children(cm, t);
    ASSERT_EQ(c.of(NodeId{0}).size(), 1u);
    EXPECT_EQ(c.of(NodeId{0})[0], NodeId{1});
    ASSERT_EQ(c.of(NodeId{1}).size(), 1u);
    EXPECT_EQ(c.of(NodeId{1})[0], NodeId{2});
    EXPECT_TRUE(c.of(NodeId{2}).empty());
}

TEST(Children, SelfControlledMapHasNoLinks) {
    const auto c = build_children(ControlMap::identity(4), std::vector<NodeId>{NodeId{0}});
    for (std::uint32_t i = 0; i < 4; ++i) EXPECT_TRUE(c.of(NodeId{i}).empty());
}

TEST(Children, TargetLinksAreCut) {
    ControlMap cm = ControlMap::identity(3);
    cm.direct[1] = NodeId{0};
    cm.direct[2] = NodeId{1};
    const auto c = build_children(cm, std::vector<NodeId>{NodeId{1}});
    EXPECT_TRUE(c.of(NodeId{1}).empty());
    ASSERT_EQ(c.of(NodeId{0}).size(), 1u);
}

TEST(Children, EdgeWeightedInflowIsControllingShare) {
    const auto g = nctest::graph({{"A", "B", 0.7}, {"B", "C", 0.6}});
    ControlMap cm = ControlMap::identity(3);
    cm.direct[1] = NodeId{0};
    cm.direct[2] = NodeId{1};
    const auto c = build_children(cm, std::vector<NodeId>{NodeId{2}}, g, true);
    EXPECT_EQ(c.inflow[0], 1.0);
    EXPECT_EQ(c.inflow[1], 0.7);
    EXPECT_EQ(c.inflow[2], 0.6);
}

TEST(Propagate, PathWithHalfDamping) {
    const auto c = children_of(3, {{0, 1}, {1, 2}});
    for (std::uint32_t s : {3u, 4u, 10u}) {
        const auto r = propagate(c, NodeId{0}, NodeId{2}, 1.0, 0.5, s, BranchMode::Replicate);
        EXPECT_NEAR(r.acc, 0.25, 1e-12);
        EXPECT_NEAR(r.transit[1], 0.5, 1e-12);
        EXPECT_EQ(r.transit[0], 0.0);
        EXPECT_EQ(r.transit[2], 0.0);
        EXPECT_NEAR(exact_single(c, 0, 2, 0.5, s, BranchMode::Replicate), 0.25, 1e-12);
    }
    EXPECT_EQ(propagate(c, NodeId{0}, NodeId{2}, 1.0, 0.5, 2, BranchMode::Replicate).acc, 0.0);
}

TEST(Propagate, SourceIsTarget) {
    const auto c = children_of(2, {{1, 0}});
    for (double d : {0.1, 0.85, 1.0}) {
        EXPECT_EQ(propagate(c, NodeId{0}, NodeId{0}, 1.0, d, 1, BranchMode::Replicate).acc, 1.0);
        EXPECT_EQ(propagate(c, NodeId{0}, NodeId{0}, 1.0, d, 7, BranchMode::Split).acc, 1.0);
    }
}

TEST(Propagate, BranchingReplicateVersusSplit) {
    // k=0 -> j1=1, j2=2 -> f=3
    const auto c = children_of(4, {{0, 1}, {0, 2}, {1, 3}, {2, 3}});
    const auto rep = propagate(c, NodeId{0}, NodeId{3}, 1.0, 1.0, 3, BranchMode::Replicate);
    const auto split = propagate(c, NodeId{0}, NodeId{3}, 1.0, 1.0, 3, BranchMode::Split);
    EXPECT_NEAR(rep.acc, 2.0, 1e-12);
    EXPECT_NEAR(split.acc, 1.0, 1e-12);
    EXPECT_NEAR(split.transit[1], 0.5, 1e-12);
    EXPECT_NEAR(exact_single(c, 0, 3, 1.0, 3, BranchMode::Replicate), 2.0, 1e-12);
    EXPECT_NEAR(exact_single(c, 0, 3, 1.0, 3, BranchMode::Split), 1.0, 1e-12);
}

TEST(Propagate, NodesOffThePathCarryNothing) {
    const auto c = children_of(5, {{0, 1}, {1, 2}, {0, 3}, {3, 4}});
    const auto r = propagate(c, NodeId{0}, NodeId{2}, 1.0, 0.9, 6, BranchMode::Replicate);
    EXPECT_EQ(r.transit[3], 0.0);
    EXPECT_EQ(r.transit[4], 0.0);
    EXPECT_GT(r.transit[1], 0.0);
}

TEST(Propagate, SingleStepCollectsOnlyAtTarget) {
    const auto c = children_of(3, {{0, 1}, {1, 2}});
    EXPECT_EQ(propagate(c, NodeId{0}, NodeId{2}, 1.0, 0.9, 1, BranchMode::Replicate).acc, 0.0);
    EXPECT_EQ(exact_single(c, 0, 2, 0.9, 1, BranchMode::Replicate), 0.0);
}

TEST(Propagate, LoopAndMatrixFormulationsAgreeOnRandomChildren) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 2 + rng() % 7;
        ChildrenMap c;
        c.children.resize(n);
        c.inflow.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            c.inflow[i] = (rng() % 2) ? 1.0 : 0.1 + 0.9 * static_cast<double>(rng() % 1000) / 1000.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (i != j && rng() % 3 == 0) c.children[i].push_back(NodeId{static_cast<std::uint32_t>(j)});
            }
        }
        const auto f = static_cast<std::uint32_t>(rng() % n);
        c.children[f].clear();
        const double d = 0.2 + 0.8 * static_cast<double>(rng() % 1000) / 1000.0;
        const auto steps = static_cast<std::uint32_t>(1 + rng() % 8);
        for (auto mode : {BranchMode::Replicate, BranchMode::Split}) {
            std::vector<std::pair<NodeId, double>> src;
            for (std::uint32_t k = 0; k < n; ++k) src.push_back({NodeId{k}, 1.0 + k});
            const auto exact = oracle::exact_flow(c, src, NodeId{f}, d, steps, mode);
            for (std::uint32_t k = 0; k < n; ++k) {
                const auto r = propagate(c, NodeId{k}, NodeId{f}, 1.0 + k, d, steps, mode);
                ASSERT_NEAR(r.acc, exact[k], 1e-12 * std::max(1.0, exact[k]));
            }
        }
    }
}

TEST(FlowAccumulator, MatchesLiteralPropagation) {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 400; ++trial) {
        const std::size_t n = 2 + rng() % 9;
        auto g = nctest::random_graph(rng, n, 4, 0.5);
        // Node values vary so sources are distinguishable.
        std::vector<NodeRecord> nodes(g.nodes().begin(), g.nodes().end());
        for (auto& rec : nodes) rec.value = (rng() % 4 == 0) ? 0.0 : 0.5 + static_cast<double>(rng() % 10);
        g = OwnershipGraph(nodes, {g.edges().begin(), g.edges().end()},
                           {g.thresholds().begin(), g.thresholds().end()});

        ControlMap cm = ControlMap::identity(n);
        for (std::uint32_t j = 0; j < n; ++j) {
            const auto owners = g.incoming(NodeId{j});
            if (!owners.empty() && rng() % 5 != 0) cm.direct[j] = owners[rng() % owners.size()].owner;
        }
        NpfConfig cfg;
        cfg.damping = 0.3 + 0.7 * static_cast<double>(rng() % 100) / 100.0;
        cfg.steps = static_cast<std::uint32_t>(1 + rng() % 9);
        cfg.mode = (rng() % 2) ? BranchMode::Split : BranchMode::Replicate;
        cfg.edge_weighted = rng() % 2;

        std::vector<NodeId> targets;
        for (std::uint32_t j = 0; j < n; ++j) {
            if (rng() % 3 == 0) targets.push_back(NodeId{j});
        }
        if (targets.empty()) targets.push_back(NodeId{0});

        detail::FlowAccumulator acc(g, cfg, targets, true);
        acc.add(cm);
        const auto children = build_children(cm, targets, g, cfg.edge_weighted);
        for (std::size_t c = 0; c < targets.size(); ++c) {
            std::vector<double> transit(n, 0.0);
            for (std::uint32_t k = 0; k < n; ++k) {
                const auto r = propagate(children, NodeId{k}, targets[c], g.value(NodeId{k}),
                                         cfg.damping, cfg.steps, cfg.mode);
                ASSERT_NEAR(acc.source_sum()[c * n + k], r.acc, 1e-12 * std::max(1.0, r.acc))
                    << "trial " << trial << " source " << k;
                for (std::uint32_t i = 0; i < n; ++i) transit[i] += r.transit[i];
            }
            for (std::uint32_t i = 0; i < n; ++i) {
                ASSERT_NEAR(acc.transit_sum()[c * n + i], transit[i], 1e-12 * std::max(1.0, transit[i]))
                    << "trial " << trial << " node " << i;
            }
        }
    }
}

TEST(Tnpf, FullOwnershipChainWithUnitDamping) {
    const auto g = nctest::graph({{"A", "B", 1.0}, {"B", "C", 1.0}});
    NpfConfig cfg;
    cfg.schedule = ChainSchedule{200, 20, 2, 1};
    cfg.damping = 1.0;
    cfg.steps = 4;
    const std::vector<NodeId> t{g.at("C")};
    const auto r = run_tnpf(g, cfg, t);
    EXPECT_NEAR(r.source(g.at("A"), g.at("C")), 1.0, 1e-12);
    EXPECT_NEAR(r.source(g.at("B"), g.at("C")), 1.0, 1e-12);
    EXPECT_NEAR(r.source(g.at("C"), g.at("C")), 1.0, 1e-12);
    EXPECT_NEAR(r.transit(g.at("B"), g.at("C")), 1.0, 1e-12);
    EXPECT_EQ(r.transit(g.at("A"), g.at("C")), 0.0);
    const auto norm = r.normalized_sources(0);
    EXPECT_NEAR(norm[g.at("A").index], 1.0 / 3.0, 1e-12);
}

TEST(Tnpf, UnownedTargetKeepsOnlyItsOwnMass) {
    const auto g = nctest::graph({{"N", NodeKind::Firm, 2.5}}, {{"A", "B", 1.0}, {"B", "C", 1.0}});
    NpfConfig cfg;
    cfg.schedule = ChainSchedule{100, 10, 1, 1};
    const std::vector<NodeId> t{g.at("N")};
    const auto r = run_tnpf(g, cfg, t);
    for (std::uint32_t i = 0; i < g.size(); ++i) {
        EXPECT_EQ(r.source(NodeId{i}, g.at("N")), NodeId{i} == g.at("N") ? 2.5 : 0.0);
        EXPECT_EQ(r.transit(NodeId{i}, g.at("N")), 0.0);
    }
}

TEST(NpfGlobal, TwoNodeFullOwnership) {
    const auto g = nctest::graph({{"A", "B", 1.0}});
    NpfConfig cfg;
    cfg.schedule = ChainSchedule{100, 10, 1, 1};
    cfg.damping = 0.5;
    cfg.steps = 3;
    const auto r = run_npf_global(g, cfg);
    EXPECT_EQ(r.source(g.at("A"), g.at("B")), 0.5);
    EXPECT_EQ(r.source(g.at("B"), g.at("A")), 0.0);
    EXPECT_EQ(r.source(g.at("A"), g.at("A")), 1.0);
    EXPECT_EQ(r.source(g.at("B"), g.at("B")), 1.0);
}

TEST(NpfGlobal, EmptyEdgeSetIsDiagonalOfValues) {
    const auto g = nctest::graph({{"A", NodeKind::Firm, 2.0}, {"B", NodeKind::Firm, 3.0}}, {});
    NpfConfig cfg;
    cfg.schedule = ChainSchedule{10, 1, 1, 1};
    const auto r = run_npf_global(g, cfg);
    EXPECT_EQ(r.source(g.at("A"), g.at("A")), 2.0);
    EXPECT_EQ(r.source(g.at("B"), g.at("B")), 3.0);
    EXPECT_EQ(r.source(g.at("A"), g.at("B")), 0.0);
}

TEST(NpfGlobal, ColumnsEqualSingleTargetRuns) {
    const auto fx = nctest::fixture("cyclic_mutual.json");
    NpfConfig cfg;
    cfg.schedule = ChainSchedule{3000, 300, 2, 8};
    cfg.steps = 6;
    const auto global = run_npf_global(fx.graph, cfg, 2);
    for (std::uint32_t f = 0; f < fx.graph.size(); ++f) {
        const std::vector<NodeId> t{NodeId{f}};
        const auto single = run_tnpf(fx.graph, cfg, t, 1);
        for (std::uint32_t k = 0; k < fx.graph.size(); ++k) {
            EXPECT_EQ(global.source(NodeId{k}, NodeId{f}), single.source(NodeId{k}, NodeId{f}));
            EXPECT_EQ(global.transit(NodeId{k}, NodeId{f}), single.transit(NodeId{k}, NodeId{f}));
        }
    }
}

TEST(Tnpf, MonteCarloApproachesExactExpectation) {
    const auto fx = nctest::fixture("cyclic_pyramid.json");
    NpfConfig cfg;
    cfg.schedule = ChainSchedule{200000, 20000, 4, 3};
    cfg.steps = 6;
    const std::vector<NodeId> t{fx.graph.at("S2")};
    const auto mc = run_tnpf(fx.graph, cfg, t, 4);
    const auto exact = oracle::exact_tnpf(fx.graph, cfg, t);
    for (std::uint32_t k = 0; k < fx.graph.size(); ++k) {
        EXPECT_NEAR(mc.source_share[k], exact.source_share[k], 5 * mc.source_error[k] + 0.01);
        EXPECT_NEAR(mc.transit_share[k], exact.transit_share[k], 5 * mc.transit_error[k] + 0.01);
    }
}

TEST(NpfConfig, Validation) {
    NpfConfig cfg;
    cfg.damping = 0.0;
    EXPECT_THROW(cfg.validate(), Error);
    cfg.damping = 1.5;
    EXPECT_THROW(cfg.validate(), Error);
    cfg.damping = 0.5;
    cfg.steps = 0;
    EXPECT_THROW(cfg.validate(), Error);
}

TEST(NpfConfig, DefaultSteps) {
    EXPECT_EQ(default_propagation_steps(nctest::graph({{"A", "B", 1.0}, {"B", "C", 1.0}})), 4u);
}
