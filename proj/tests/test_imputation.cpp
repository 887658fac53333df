#include <sstream>

#include <gtest/gtest.h>

#include "netcontrol/imputation.hpp"
#include "test_support.hpp"

using namespace netcontrol;
using nctest::E;
using nctest::N;

namespace {

OwnershipGraph c_example() {
    return nctest::graph({{"A", NodeKind::State}, {"B", NodeKind::PrivateInvestor}, {"C", NodeKind::Firm}},
                         {{"A", "C", 0.4}, {"B", "C", 0.35}});
}

double share(const ImputedGraph& ig, const std::string& a, const std::string& b) {
    return ig.graph.share(ig.graph.at(a), ig.graph.at(b));
}

} // namespace

TEST(Imputation, EqualAll) {
    const auto ig = impute(c_example(), Scenario::EqualAll);
    EXPECT_NEAR(share(ig, "A", "C"), 0.525, 1e-12);
    EXPECT_NEAR(share(ig, "B", "C"), 0.475, 1e-12);
    const auto in = incoming_shares(ig.graph, ig.graph.at("C"));
    ASSERT_EQ(in.size(), 2u);
    EXPECT_NEAR(in[0].share, 0.525, 1e-12);
}

TEST(Imputation, ExcludeMissingRenormalizes) {
    const auto ig = impute(c_example(), Scenario::ExcludeMissing);
    EXPECT_NEAR(share(ig, "A", "C"), 0.4 / 0.75, 1e-12);
    EXPECT_NEAR(share(ig, "B", "C"), 0.35 / 0.75, 1e-12);
}

TEST(Imputation, PrivateScenariosWithSinglePrivateOwner) {
    for (auto s : {Scenario::EqualPrivate, Scenario::ProportionalPrivate}) {
        const auto ig = impute(c_example(), s);
        EXPECT_NEAR(share(ig, "A", "C"), 0.4, 1e-12);
        EXPECT_NEAR(share(ig, "B", "C"), 0.6, 1e-12);
    }
}

TEST(Imputation, ProportionalVersusEqualPrivate) {
    const auto g = nctest::graph({{"P", NodeKind::PrivateInvestor}, {"Q", NodeKind::PrivateInvestor}, {"S", NodeKind::State}},
                                 {{"P", "F", 0.3}, {"Q", "F", 0.1}, {"S", "F", 0.2}});
    const auto prop = impute(g, Scenario::ProportionalPrivate);
    EXPECT_NEAR(share(prop, "P", "F"), 0.3 + 0.4 * 0.75, 1e-12);
    EXPECT_NEAR(share(prop, "Q", "F"), 0.1 + 0.4 * 0.25, 1e-12);
    EXPECT_EQ(share(prop, "S", "F"), 0.2);
    const auto eq = impute(g, Scenario::EqualPrivate);
    EXPECT_NEAR(share(eq, "P", "F"), 0.5, 1e-12);
    EXPECT_NEAR(share(eq, "Q", "F"), 0.3, 1e-12);
    EXPECT_EQ(share(eq, "S", "F"), 0.2);
}

TEST(Imputation, NoPrivateShareholder) {
    const auto g = nctest::graph({{"S", NodeKind::State}}, {{"S", "F", 0.4}});
    try {
        impute(g, Scenario::EqualPrivate);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NoPrivateShareholder);
        EXPECT_EQ(e.context(), "F");
    }
    EXPECT_THROW(impute(g, Scenario::ProportionalPrivate), Error);
    EXPECT_NO_THROW(impute(g, Scenario::EqualAll));
}

TEST(Imputation, ProvenanceMarksImputedEdges) {
    const auto g = nctest::graph({{"A", NodeKind::State}, {"B", NodeKind::PrivateInvestor}},
                                 {{"A", "C", 0.4}, {"B", "C", 0.35}, {"A", "D", 1.0}});
    const auto ig = impute(g, Scenario::EqualPrivate);
    EXPECT_EQ(ig.provenance(0), Provenance::Observed);
    EXPECT_EQ(ig.provenance(1), Provenance::Imputed);
    EXPECT_EQ(ig.provenance(2), Provenance::Observed);
    std::ostringstream out;
    write_imputed_edges_csv(ig, out);
    EXPECT_EQ(out.str(),
              "owner_id,owned_id,share,provenance\nA,C,0.4,observed\nB,C,0.6,imputed\nA,D,1,observed\n");
}

TEST(Imputation, UnownedFirmsStaySelfControlledAndAreFlagged) {
    const auto g = nctest::graph({{"F", NodeKind::Firm}, {"P", NodeKind::PrivateInvestor}}, {{"P", "G", 0.5}});
    for (auto s : kAllScenarios) {
        const auto ig = impute(g, s);
        ASSERT_EQ(ig.unowned_firms.size(), 1u);
        EXPECT_EQ(ig.unowned_firms[0], g.at("F"));
        EXPECT_TRUE(ig.graph.incoming(g.at("F")).empty());
    }
}

TEST(Imputation, SweepOnCompleteGraphGivesFourIdenticalGraphs) {
    const auto g = nctest::graph({{"A", "B", 1.0}, {"B", "C", 0.5}, {"A", "C", 0.5}});
    const auto sweep = scenario_sweep(g);
    ASSERT_EQ(sweep.size(), 4u);
    for (const auto& o : sweep) {
        ASSERT_TRUE(o.result);
        EXPECT_EQ(o.result->graph, g);
    }
}

TEST(Imputation, SweepOnExampleHasTwoCoincidingResults) {
    const auto sweep = scenario_sweep(c_example());
    ASSERT_EQ(sweep.size(), 4u);
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_EQ(sweep[i].scenario, kAllScenarios[i]);
        ASSERT_TRUE(sweep[i].result);
    }
    EXPECT_EQ(sweep[2].result->graph, sweep[3].result->graph);
    EXPECT_FALSE(sweep[0].result->graph == sweep[1].result->graph);
    EXPECT_FALSE(sweep[0].result->graph == sweep[2].result->graph);
}

TEST(Imputation, SweepRecordsFailures) {
    const auto g = nctest::graph({{"S", NodeKind::State}}, {{"S", "F", 0.4}});
    const auto sweep = scenario_sweep(g);
    EXPECT_TRUE(sweep[0].result);
    EXPECT_TRUE(sweep[1].result);
    ASSERT_TRUE(sweep[2].error);
    EXPECT_EQ(sweep[2].error->code(), ErrorCode::NoPrivateShareholder);
    ASSERT_TRUE(sweep[3].error);
    EXPECT_EQ(sweep[3].error->code(), ErrorCode::NoPrivateShareholder);
}

TEST(Imputation, ScenarioNumbers) {
    EXPECT_EQ(scenario_from_number(2), Scenario::ExcludeMissing);
    EXPECT_THROW(scenario_from_number(0), Error);
    EXPECT_THROW(scenario_from_number(5), Error);
}
