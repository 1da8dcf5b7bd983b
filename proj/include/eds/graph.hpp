#pragma once

/// EDS graph data model: predicate-labeled nodes with character anchors,
/// role-labeled arcs, an optional top, plus the native text format and the
/// triple view used by graph matching.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "eds/util.hpp"

namespace eds {

struct Anchor {
  int start = 0;
  int end = 0;  // exclusive
  auto operator<=>(const Anchor&) const = default;
};

struct EdsNode {
  std::string id;
  std::string predicate;
  Anchor anchor;
  std::optional<std::string> carg;  // constant argument, e.g. for `named`

  bool operator==(const EdsNode&) const = default;
};

struct EdsEdge {
  std::string source;
  std::string target;
  std::string role;

  auto operator<=>(const EdsEdge&) const = default;
};

/// A surface predicate derives from a lexical item and carries its lemma
/// (`_drug_n_1`); everything else is an abstract predicate (`compound`).
inline bool is_surface_predicate(std::string_view predicate) {
  return !predicate.empty() && predicate.front() == '_';
}

struct EdsGraph {
  std::vector<EdsNode> nodes;
  std::vector<EdsEdge> edges;
  std::optional<std::string> top;
  std::optional<std::string> text;

  const EdsNode* find_node(std::string_view id) const {
    for (const auto& n : nodes)
      if (n.id == id) return &n;
    return nullptr;
  }

  bool operator==(const EdsGraph&) const = default;
};

/// Checks the structural invariants; throws ValidationError on the first
/// violation. Rejects dangling endpoints, duplicate node ids, duplicate
/// (source,target,role) triples, self-loops and negative anchors.
inline void validate(const EdsGraph& g) {
  if (g.nodes.empty()) throw ValidationError("graph has no nodes");
  std::set<std::string> ids;
  for (const auto& n : g.nodes) {
    if (n.id.empty()) throw ValidationError("node with empty id");
    if (!ids.insert(n.id).second) throw ValidationError("duplicate node id: " + n.id);
    if (n.predicate.empty()) throw ValidationError("empty predicate on node " + n.id);
    if (n.anchor.start < 0 || n.anchor.end < n.anchor.start)
      throw ValidationError("bad anchor <" + std::to_string(n.anchor.start) + ":" +
                            std::to_string(n.anchor.end) + "> on node " + n.id);
  }
  std::set<std::tuple<std::string, std::string, std::string>> seen;
  for (const auto& e : g.edges) {
    if (!ids.count(e.source)) throw ValidationError("dangling edge source: " + e.source);
    if (!ids.count(e.target)) throw ValidationError("dangling edge target: " + e.target);
    if (e.source == e.target)
      throw ValidationError("self-loop on node " + e.source + " (role " + e.role + ")");
    if (e.role.empty()) throw ValidationError("empty role on edge from " + e.source);
    if (!seen.insert({e.source, e.target, e.role}).second)
      throw ValidationError("duplicate edge " + e.source + " -" + e.role + "-> " + e.target);
  }
  if (g.top && !ids.count(*g.top)) throw ValidationError("top does not resolve: " + *g.top);
}

// ---------------------------------------------------------------------------
// Native text format
//
//   Graph   := '{' TopId? ':' Node* '}'
//   Node    := Id ':' Predicate Carg? '<' Int ':' Int '>' '[' EdgeList? ']'
//   Carg    := '(' '"' chars '"' ')'
//   EdgeList:= Edge (',' Edge)*
//   Edge    := Role ' ' Id
//
// Whitespace between tokens is insignificant.
// ---------------------------------------------------------------------------

namespace detail {

class EdsLexer {
 public:
  explicit EdsLexer(std::string_view text) : text_(text) {}

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) advance();
  }

  bool eof() {
    skip_ws();
    return pos_ >= text_.size();
  }

  char peek() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    return text_[pos_];
  }

  void expect(char c) {
    skip_ws();
    if (pos_ >= text_.size() || text_[pos_] != c)
      fail(std::string("expected '") + c + "'");
    advance();
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      advance();
      return true;
    }
    return false;
  }

  /// A name token: everything up to whitespace or a structural character.
  std::string name(const char* what) {
    skip_ws();
    size_t start = pos_;
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (std::isspace(static_cast<unsigned char>(c)) || c == ':' || c == '{' || c == '}' ||
          c == '[' || c == ']' || c == '<' || c == '>' || c == '(' || c == ')' || c == ',' ||
          c == '"')
        break;
      advance();
    }
    if (pos_ == start) fail(std::string("expected ") + what);
    return std::string(text_.substr(start, pos_ - start));
  }

  int integer() {
    std::string tok = name("integer");
    for (char c : tok)
      if (!std::isdigit(static_cast<unsigned char>(c))) fail("expected integer, got '" + tok + "'");
    return std::stoi(tok);
  }

  /// Raw characters up to the closing quote; no escape sequences.
  std::string quoted() {
    expect('"');
    size_t start = pos_;
    while (pos_ < text_.size() && text_[pos_] != '"') {
      if (text_[pos_] == '\n') fail("newline inside quoted constant");
      advance();
    }
    if (pos_ >= text_.size()) fail("unterminated quoted constant");
    std::string out(text_.substr(start, pos_ - start));
    advance();  // closing quote
    return out;
  }

  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, line_, col_); }

 private:
  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  std::string_view text_;
  size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

}  // namespace detail

/// Parses one graph in the native text format and validates it.
inline EdsGraph parse_eds(std::string_view text) {
  detail::EdsLexer lex(text);
  EdsGraph g;
  lex.expect('{');
  if (lex.peek() != ':') g.top = lex.name("top id");
  lex.expect(':');
  while (!lex.accept('}')) {
    EdsNode node;
    node.id = lex.name("node id");
    lex.expect(':');
    node.predicate = lex.name("predicate");
    if (lex.accept('(')) {
      node.carg = lex.quoted();
      lex.expect(')');
    }
    lex.expect('<');
    node.anchor.start = lex.integer();
    lex.expect(':');
    node.anchor.end = lex.integer();
    lex.expect('>');
    lex.expect('[');
    if (!lex.accept(']')) {
      while (true) {
        EdsEdge e;
        e.source = node.id;
        e.role = lex.name("role");
        e.target = lex.name("edge target id");
        g.edges.push_back(std::move(e));
        if (lex.accept(']')) break;
        lex.expect(',');
      }
    }
    g.nodes.push_back(std::move(node));
  }
  if (!lex.eof()) lex.fail("trailing input after '}'");
  validate(g);
  return g;
}

/// Canonical serialization: nodes ordered by (anchor, predicate, id), each
/// node's outgoing edges ordered by (role, target). Idempotent byte-for-byte.
inline std::string serialize_eds(const EdsGraph& g) {
  validate(g);
  std::vector<const EdsNode*> order;
  order.reserve(g.nodes.size());
  for (const auto& n : g.nodes) order.push_back(&n);
  std::sort(order.begin(), order.end(), [](const EdsNode* a, const EdsNode* b) {
    return std::tie(a->anchor.start, a->anchor.end, a->predicate, a->id) <
           std::tie(b->anchor.start, b->anchor.end, b->predicate, b->id);
  });
  std::map<std::string, std::vector<const EdsEdge*>> out_edges;
  for (const auto& e : g.edges) out_edges[e.source].push_back(&e);
  for (auto& [src, es] : out_edges)
    std::sort(es.begin(), es.end(), [](const EdsEdge* a, const EdsEdge* b) {
      return std::tie(a->role, a->target) < std::tie(b->role, b->target);
    });

  std::string s = "{" + g.top.value_or("") + ":\n";
  for (const EdsNode* n : order) {
    s += " " + n->id + ":" + n->predicate;
    if (n->carg) s += "(\"" + *n->carg + "\")";
    s += "<" + std::to_string(n->anchor.start) + ":" + std::to_string(n->anchor.end) + ">[";
    auto it = out_edges.find(n->id);
    if (it != out_edges.end()) {
      bool first = true;
      for (const EdsEdge* e : it->second) {
        if (!first) s += ", ";
        s += e->role + " " + e->target;
        first = false;
      }
    }
    s += "]\n";
  }
  s += "}\n";
  return s;
}

// ---------------------------------------------------------------------------
// Triple view
// ---------------------------------------------------------------------------

struct Triple {
  enum class Kind { Instance, Relation, Top };
  Kind kind;
  std::string role;    // relation role ("CARG" for constants), empty otherwise
  std::string source;  // node variable
  std::string target;  // node variable, or quoted constant for CARG

  auto operator<=>(const Triple&) const = default;
};

/// Decomposes a graph into matchable triples. Anchors are dropped: node
/// identity is carried by the predicate alone. A node's constant argument
/// becomes a CARG relation against a quoted constant.
inline std::vector<Triple> to_triples(const EdsGraph& g) {
  std::vector<Triple> out;
  for (const auto& n : g.nodes) {
    out.push_back({Triple::Kind::Instance, "", n.id, n.predicate});
    if (n.carg) out.push_back({Triple::Kind::Relation, "CARG", n.id, "\"" + *n.carg + "\""});
  }
  for (const auto& e : g.edges) out.push_back({Triple::Kind::Relation, e.role, e.source, e.target});
  if (g.top) out.push_back({Triple::Kind::Top, "", "", *g.top});
  return out;
}

/// Undirected reachability over all nodes. The empty graph is rejected.
inline bool is_connected(const EdsGraph& g) {
  if (g.nodes.empty()) throw ValidationError("is_connected: empty graph");
  std::map<std::string, int> index;
  for (size_t i = 0; i < g.nodes.size(); ++i) index[g.nodes[i].id] = static_cast<int>(i);
  std::vector<std::vector<int>> adj(g.nodes.size());
  for (const auto& e : g.edges) {
    int s = index.at(e.source), t = index.at(e.target);
    adj[s].push_back(t);
    adj[t].push_back(s);
  }
  std::vector<char> seen(g.nodes.size(), 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  size_t count = 1;
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    for (int w : adj[v])
      if (!seen[w]) {
        seen[w] = 1;
        ++count;
        stack.push_back(w);
      }
  }
  return count == g.nodes.size();
}

}  // namespace eds
