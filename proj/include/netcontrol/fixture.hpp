#pragma once

// Self-contained JSON description of a small network, used for oracle runs
// and test fixtures:
//
//   {
//     "name": "...",
//     "threshold_default": 0.5,
//     "nodes":  [{"id": "A", "kind": "state", "name": "...", "country": "IT", "value": 1}],
//     "edges":  [{"owner": "A", "owned": "C", "share": 0.4}],
//     "thresholds": {"C": 0.5},
//     "targets": ["C"],
//     "scenario": 2
//   }
//
// Only "edges" is required.

#include <fstream>
#include <optional>
#include <string>

#include <json.hpp>

#include "netcontrol/imputation.hpp"

namespace netcontrol {

struct Fixture {
    std::string name;
    double threshold_default = 0.5;
    OwnershipGraph graph;
    std::optional<Scenario> scenario;
};

inline Fixture fixture_from_json(const nlohmann::json& doc, const std::string& source = "fixture") {
    try {
        Fixture fx;
        fx.name = doc.value("name", source);
        fx.threshold_default = doc.value("threshold_default", 0.5);
        GraphBuilder builder(fx.threshold_default);
        if (doc.contains("nodes")) {
            for (const auto& n : doc.at("nodes")) {
                NodeRecord rec;
                rec.id = n.at("id").get<std::string>();
                rec.name = n.value("name", rec.id);
                const auto kind = parse_node_kind(n.value("kind", std::string("unknown")));
                if (!kind) throw Error(ErrorCode::MalformedRow, "unknown kind", source + ":" + rec.id);
                rec.kind = *kind;
                rec.country = n.value("country", std::string());
                rec.value = n.value("value", 1.0);
                builder.add_node(std::move(rec), source);
            }
        }
        for (const auto& e : doc.at("edges")) {
            builder.add_edge(e.at("owner").get<std::string>(), e.at("owned").get<std::string>(),
                             e.at("share").get<double>(), source);
        }
        if (doc.contains("thresholds")) {
            for (const auto& [firm, q] : doc.at("thresholds").items()) {
                builder.set_threshold(firm, q.get<double>(), source);
            }
        }
        if (doc.contains("targets")) {
            for (const auto& t : doc.at("targets")) builder.add_target(t.get<std::string>());
        }
        if (doc.contains("scenario")) fx.scenario = scenario_from_number(doc.at("scenario").get<int>());
        fx.graph = builder.build();
        return fx;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::MalformedRow, e.what(), source);
    }
}

inline Fixture load_fixture(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open fixture", path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::MalformedRow, e.what(), path);
    }
    return fixture_from_json(doc, path);
}

} // namespace netcontrol
