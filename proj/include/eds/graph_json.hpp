#pragma once

/// Line-delimited JSON interchange for EDS graphs:
///   {"id": ..., "top": ..., "nodes": [{"id","predicate","start","end","carg"?}],
///    "edges": [{"src","tgt","role"}]}

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "eds/graph.hpp"

namespace eds {

inline nlohmann::ordered_json graph_to_json(const std::string& id, const EdsGraph& g) {
  nlohmann::ordered_json j;
  j["id"] = id;
  if (g.top) j["top"] = *g.top;
  auto nodes = nlohmann::ordered_json::array();
  for (const auto& n : g.nodes) {
    nlohmann::ordered_json jn{{"id", n.id},
                              {"predicate", n.predicate},
                              {"start", n.anchor.start},
                              {"end", n.anchor.end}};
    if (n.carg) jn["carg"] = *n.carg;
    nodes.push_back(std::move(jn));
  }
  j["nodes"] = std::move(nodes);
  auto edges = nlohmann::ordered_json::array();
  for (const auto& e : g.edges)
    edges.push_back({{"src", e.source}, {"tgt", e.target}, {"role", e.role}});
  j["edges"] = std::move(edges);
  return j;
}

inline std::pair<std::string, EdsGraph> graph_from_json(const nlohmann::json& j) {
  EdsGraph g;
  std::string id = j.at("id").get<std::string>();
  if (j.contains("top") && !j.at("top").is_null()) g.top = j.at("top").get<std::string>();
  for (const auto& jn : j.at("nodes")) {
    EdsNode n;
    n.id = jn.at("id").get<std::string>();
    n.predicate = jn.at("predicate").get<std::string>();
    n.anchor.start = jn.at("start").get<int>();
    n.anchor.end = jn.at("end").get<int>();
    if (jn.contains("carg")) n.carg = jn.at("carg").get<std::string>();
    g.nodes.push_back(std::move(n));
  }
  for (const auto& je : j.at("edges"))
    g.edges.push_back(
        {je.at("src").get<std::string>(), je.at("tgt").get<std::string>(), je.at("role").get<std::string>()});
  validate(g);
  return {id, g};
}

/// One JSON object per line, in input order.
inline std::string graphs_to_jsonl(const std::vector<std::pair<std::string, EdsGraph>>& graphs) {
  std::string out;
  for (const auto& [id, g] : graphs) out += graph_to_json(id, g).dump() + "\n";
  return out;
}

inline std::vector<std::pair<std::string, EdsGraph>> graphs_from_jsonl(const std::string& text) {
  std::vector<std::pair<std::string, EdsGraph>> out;
  int lineno = 0;
  for (const auto& line : split(text, '\n')) {
    ++lineno;
    if (strip(line).empty()) continue;
    try {
      out.push_back(graph_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("bad JSON graph: ") + e.what(), lineno, 1);
    }
  }
  return out;
}

}  // namespace eds
