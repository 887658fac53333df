#pragma once

// Graph export for external rendering tools. Every format carries the same
// attributes:
//   node: id, name, kind, country, value, score
//   edge: share, provenance
// `score` is whatever annotation the caller supplies (transit share, T-NPI,
// centrality); nodes without one get 0.

#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "netcontrol/imputation.hpp"

namespace netcontrol {

enum class ExportFormat { GraphML, Dot, Json };

inline ExportFormat parse_export_format(std::string_view text) {
    const auto name = csv::lower(text);
    if (name == "graphml") return ExportFormat::GraphML;
    if (name == "dot") return ExportFormat::Dot;
    if (name == "json") return ExportFormat::Json;
    throw Error(ErrorCode::UnknownFormat, "unknown export format '" + std::string(text) + "'");
}

constexpr std::string_view extension(ExportFormat f) noexcept {
    switch (f) {
    case ExportFormat::GraphML: return "graphml";
    case ExportFormat::Dot: return "dot";
    case ExportFormat::Json: return "json";
    }
    return "txt";
}

namespace detail {

inline std::string xml_escape(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        case '\'': out += "&apos;"; break;
        default: out.push_back(c);
        }
    }
    return out;
}

inline std::string dot_quote(std::string_view s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out.push_back('\\');
        if (c == '\n') {
            out += "\\n";
            continue;
        }
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

} // namespace detail

/// Writes `ig` with per-node `scores` (indexed by node; may be empty).
inline void export_graph(const ImputedGraph& ig, std::span<const double> scores,
                         ExportFormat format, std::ostream& out) {
    const auto& g = ig.graph;
    if (!scores.empty() && scores.size() != g.size()) {
        throw Error(ErrorCode::InvalidConfig, "annotation does not match the graph's node count");
    }
    auto score = [&](std::uint32_t i) { return scores.empty() ? 0.0 : scores[i]; };
    using csv::format_double;

    switch (format) {
    case ExportFormat::GraphML: {
        out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
            << "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n"
            << "  <key id=\"name\" for=\"node\" attr.name=\"name\" attr.type=\"string\"/>\n"
            << "  <key id=\"kind\" for=\"node\" attr.name=\"kind\" attr.type=\"string\"/>\n"
            << "  <key id=\"country\" for=\"node\" attr.name=\"country\" attr.type=\"string\"/>\n"
            << "  <key id=\"value\" for=\"node\" attr.name=\"value\" attr.type=\"double\"/>\n"
            << "  <key id=\"score\" for=\"node\" attr.name=\"score\" attr.type=\"double\"/>\n"
            << "  <key id=\"share\" for=\"edge\" attr.name=\"share\" attr.type=\"double\"/>\n"
            << "  <key id=\"provenance\" for=\"edge\" attr.name=\"provenance\" "
               "attr.type=\"string\"/>\n"
            << "  <graph id=\"ownership\" edgedefault=\"directed\">\n";
        for (std::uint32_t i = 0; i < g.size(); ++i) {
            const auto& n = g.node(NodeId{i});
            out << "    <node id=\"" << detail::xml_escape(n.id) << "\">\n"
                << "      <data key=\"name\">" << detail::xml_escape(n.name) << "</data>\n"
                << "      <data key=\"kind\">" << to_string(n.kind) << "</data>\n"
                << "      <data key=\"country\">" << detail::xml_escape(n.country) << "</data>\n"
                << "      <data key=\"value\">" << format_double(n.value) << "</data>\n"
                << "      <data key=\"score\">" << format_double(score(i)) << "</data>\n"
                << "    </node>\n";
        }
        for (std::size_t e = 0; e < g.edge_count(); ++e) {
            const auto& edge = g.edges()[e];
            out << "    <edge id=\"e" << e << "\" source=\""
                << detail::xml_escape(g.node(edge.owner).id) << "\" target=\""
                << detail::xml_escape(g.node(edge.owned).id) << "\">\n"
                << "      <data key=\"share\">" << format_double(edge.share) << "</data>\n"
                << "      <data key=\"provenance\">" << to_string(ig.provenance(e)) << "</data>\n"
                << "    </edge>\n";
        }
        out << "  </graph>\n</graphml>\n";
        break;
    }
    case ExportFormat::Dot: {
        out << "digraph ownership {\n";
        for (std::uint32_t i = 0; i < g.size(); ++i) {
            const auto& n = g.node(NodeId{i});
            out << "  " << detail::dot_quote(n.id) << " [name=" << detail::dot_quote(n.name)
                << ", kind=" << detail::dot_quote(to_string(n.kind))
                << ", country=" << detail::dot_quote(n.country)
                << ", value=" << format_double(n.value) << ", score=" << format_double(score(i))
                << "];\n";
        }
        for (std::size_t e = 0; e < g.edge_count(); ++e) {
            const auto& edge = g.edges()[e];
            out << "  " << detail::dot_quote(g.node(edge.owner).id) << " -> "
                << detail::dot_quote(g.node(edge.owned).id)
                << " [share=" << format_double(edge.share)
                << ", provenance=" << detail::dot_quote(to_string(ig.provenance(e))) << "];\n";
        }
        out << "}\n";
        break;
    }
    case ExportFormat::Json: {
        nlohmann::ordered_json doc;
        doc["directed"] = true;
        doc["nodes"] = nlohmann::ordered_json::array();
        for (std::uint32_t i = 0; i < g.size(); ++i) {
            const auto& n = g.node(NodeId{i});
            doc["nodes"].push_back({{"id", n.id},
                                    {"name", n.name},
                                    {"kind", std::string(to_string(n.kind))},
                                    {"country", n.country},
                                    {"value", n.value},
                                    {"score", score(i)}});
        }
        doc["edges"] = nlohmann::ordered_json::array();
        for (std::size_t e = 0; e < g.edge_count(); ++e) {
            const auto& edge = g.edges()[e];
            doc["edges"].push_back({{"source", g.node(edge.owner).id},
                                    {"target", g.node(edge.owned).id},
                                    {"share", edge.share},
                                    {"provenance", std::string(to_string(ig.provenance(e)))}});
        }
        out << doc.dump(2) << '\n';
        break;
    }
    }
}

} // namespace netcontrol
