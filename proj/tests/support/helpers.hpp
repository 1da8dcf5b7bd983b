#pragma once

#include <algorithm>
#include <cstdlib>
#include <string>
#include <vector>

#include "eds/corpus.hpp"
#include "eds/graph.hpp"
#include "eds/util.hpp"

namespace testsupport {

using namespace eds;

inline const std::vector<std::string>& surface_pool() {
  static const std::vector<std::string> p = {
      "_dog_n_1", "_run_v_1",  "_red_a_1", "_the_q",
      "_in_p",    "_give_v_1", "_see_v_1", "_happy_a_1"};
  return p;
}

inline const std::vector<std::string>& abstract_pool() {
  static const std::vector<std::string> p = {"compound", "parg_d",   "loc_nonsp",
                                             "named",    "proper_q", "pron",
                                             "udef_q",   "nominalization"};
  return p;
}

inline const std::vector<std::string>& role_pool() {
  static const std::vector<std::string> p = {"ARG1", "ARG2",    "ARG3",    "BV",
                                             "MOD",  "L-INDEX", "R-INDEX", "compound"};
  return p;
}

/// Random valid graph; shared predicate pools keep cross-graph matching
/// nontrivial for the semantic-match tests.
inline EdsGraph random_graph(Rng& rng, int max_nodes, int max_edges,
                             bool allow_top = true) {
  EdsGraph g;
  std::uniform_int_distribution<int> nd(1, max_nodes);
  int n = nd(rng);
  for (int i = 0; i < n; ++i) {
    EdsNode node;
    const char* styles[] = {"n", "e", "x"};
    node.id = std::string(styles[rng() % 3]) + std::to_string(i);
    bool surface = rng() % 2 == 0;
    const auto& pool = surface ? surface_pool() : abstract_pool();
    node.predicate = pool[rng() % pool.size()];
    if (node.predicate == "named") {
      const char* cargs[] = {"Abrams", "Browne", "West", "Germany"};
      node.carg = cargs[rng() % 4];
    }
    int start = static_cast<int>(rng() % 40);
    node.anchor = {start, start + 1 + static_cast<int>(rng() % 10)};
    g.nodes.push_back(node);
  }
  std::uniform_int_distribution<int> ed(0, max_edges);
  int tries = ed(rng);
  for (int t = 0; t < tries && n > 1; ++t) {
    int s = static_cast<int>(rng() % n);
    int d = static_cast<int>(rng() % n);
    if (s == d) continue;
    EdsEdge e{g.nodes[s].id, g.nodes[d].id, role_pool()[rng() % role_pool().size()]};
    bool dup = std::any_of(g.edges.begin(), g.edges.end(),
                           [&](const EdsEdge& x) { return x == e; });
    if (!dup) g.edges.push_back(e);
  }
  if (allow_top && rng() % 5 != 0) g.top = g.nodes[rng() % n].id;
  return g;
}

inline std::string data_dir() {
  const char* d = std::getenv("EDS_DATA");
  return d ? d : "data";
}

/// Whitespace-tokenized sentence with lowercase lemmas and a fixed POS.
inline Sentence make_sentence(const std::string& id, const std::string& text,
                              const std::string& pos = "NN") {
  Sentence s;
  s.id = id;
  s.text = text;
  int at = 0;
  for (std::string_view part : split(text, ' ')) {
    if (!part.empty()) {
      Token t;
      t.form = std::string(part);
      t.lemma = lower(t.form);
      t.pos = pos;
      t.span = {at, at + static_cast<int>(part.size())};
      s.tokens.push_back(std::move(t));
    }
    at += static_cast<int>(part.size()) + 1;
  }
  validate(s);
  return s;
}

/// Worked example used across alignment and tagging tests:
/// a passive sentence with a compound name and a temporal modifier.
inline Sentence drug_sentence() {
  Sentence s;
  s.id = "drug1";
  s.text = "The drug was introduced in West Germany this year.";
  auto tok = [&](std::string f, std::string l, std::string p, int a, int b) {
    s.tokens.push_back(Token{std::move(f), std::move(l), std::move(p), {a, b}});
  };
  tok("The", "the", "DT", 0, 3);
  tok("drug", "drug", "NN", 4, 8);
  tok("was", "be", "VBD", 9, 12);
  tok("introduced", "introduce", "VBN", 13, 23);
  tok("in", "in", "IN", 24, 26);
  tok("West", "west", "NNP", 27, 31);
  tok("Germany", "germany", "NNP", 32, 39);
  tok("this", "this", "DT", 40, 44);
  tok("year", "year", "NN", 45, 49);
  tok(".", ".", ".", 49, 50);
  validate(s);
  return s;
}

inline EdsGraph drug_graph() {
  EdsGraph g;
  auto node = [&](std::string id, std::string pred, int a, int b, std::string carg = "") {
    EdsNode n;
    n.id = std::move(id);
    n.predicate = std::move(pred);
    n.anchor = {a, b};
    if (!carg.empty()) n.carg = carg;
    g.nodes.push_back(n);
  };
  auto edge = [&](std::string s, std::string r, std::string t) {
    g.edges.push_back(EdsEdge{std::move(s), std::move(t), std::move(r)});
  };
  node("n1", "_the_q", 0, 3);
  node("n2", "_drug_n_1", 4, 8);
  node("n3", "parg_d", 13, 23);
  node("n4", "_introduce_v_to", 13, 23);
  node("n5", "_in_p", 24, 26);
  node("n6", "named", 32, 39, "Germany");
  node("n7", "proper_q", 32, 39);
  node("n8", "compound_name", 27, 39);
  node("n9", "named", 27, 31, "West");
  node("n10", "proper_q", 27, 31);
  node("n11", "loc_nonsp", 40, 49);
  node("n12", "_year_n_1", 45, 49);
  node("n13", "_this_q_dem", 40, 44);
  edge("n1", "BV", "n2");
  edge("n3", "ARG1", "n4");
  edge("n3", "ARG2", "n2");
  edge("n4", "ARG2", "n2");
  edge("n5", "ARG1", "n4");
  edge("n5", "ARG2", "n6");
  edge("n7", "BV", "n6");
  edge("n8", "ARG1", "n6");
  edge("n8", "ARG2", "n9");
  edge("n10", "BV", "n9");
  edge("n11", "ARG1", "n4");
  edge("n11", "ARG2", "n12");
  edge("n13", "BV", "n12");
  g.top = "n4";
  validate(g);
  return g;
}

}  // namespace testsupport
