#pragma once

/// Corpus ingestion: tokenized sentences with annotations, gold graphs keyed
/// by sentence id, and deterministic down-sampling for learning curves.
///
/// Sentence file: blank-line-separated blocks of
///   #id <sentence-id>
///   #text <raw text>
///   <index>\tFORM\tLEMMA\tPOS\tSTART\tEND      (one per token, 1-based index)
///
/// Graph file: either `#id`-prefixed native-EDS blocks or JSON lines.

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "eds/graph.hpp"
#include "eds/graph_json.hpp"
#include "eds/util.hpp"

namespace eds {

struct Token {
  std::string form;
  std::string lemma;
  std::string pos;
  Anchor span;

  bool operator==(const Token&) const = default;
};

struct Sentence {
  std::string id;
  std::string text;
  std::vector<Token> tokens;

  bool operator==(const Sentence&) const = default;
};

struct Instance {
  Sentence sentence;
  EdsGraph graph;
};

inline void validate(const Sentence& s) {
  if (s.id.empty()) throw ValidationError("sentence with empty id");
  if (s.tokens.empty()) throw ValidationError("sentence " + s.id + " has no tokens");
  int prev_end = 0;
  for (size_t i = 0; i < s.tokens.size(); ++i) {
    const Token& t = s.tokens[i];
    if (t.span.start < prev_end || t.span.end <= t.span.start ||
        t.span.end > static_cast<int>(s.text.size()))
      throw ValidationError("sentence " + s.id + ": token " + std::to_string(i + 1) +
                            " span out of order or out of bounds");
    if (s.text.substr(t.span.start, t.span.end - t.span.start) != t.form)
      throw ValidationError("sentence " + s.id + ": token " + std::to_string(i + 1) +
                            " form does not match text slice");
    prev_end = t.span.end;
  }
}

inline void validate(const Instance& inst) {
  validate(inst.sentence);
  validate(inst.graph);
  for (const auto& n : inst.graph.nodes)
    if (n.anchor.end > static_cast<int>(inst.sentence.text.size()))
      throw ValidationError("sentence " + inst.sentence.id + ": node " + n.id +
                            " anchor exceeds text bounds");
}

// ---------------------------------------------------------------------------
// Sentence file
// ---------------------------------------------------------------------------

inline std::vector<Sentence> parse_sentences(const std::string& content) {
  std::vector<Sentence> out;
  Sentence cur;
  bool in_block = false;
  int lineno = 0;
  auto flush = [&] {
    if (in_block) {
      validate(cur);
      out.push_back(std::move(cur));
      cur = Sentence{};
      in_block = false;
    }
  };
  for (const auto& raw : split(content, '\n')) {
    ++lineno;
    std::string line = raw;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (strip(line).empty()) {
      flush();
      continue;
    }
    if (starts_with(line, "#id ")) {
      if (in_block) throw ParseError("unexpected #id inside block", lineno, 1);
      cur.id = strip(line.substr(4));
      in_block = true;
      continue;
    }
    if (starts_with(line, "#text ")) {
      if (!in_block) throw ParseError("#text before #id", lineno, 1);
      cur.text = line.substr(6);
      continue;
    }
    if (!in_block) throw ParseError("token line before #id", lineno, 1);
    auto cols = split(line, '\t');
    if (cols.size() != 6)
      throw ParseError("expected 6 tab-separated columns, got " + std::to_string(cols.size()),
                       lineno, 1);
    try {
      int index = std::stoi(cols[0]);
      if (index != static_cast<int>(cur.tokens.size()) + 1)
        throw ParseError("token index out of sequence", lineno, 1);
      cur.tokens.push_back(
          Token{cols[1], cols[2], cols[3], Anchor{std::stoi(cols[4]), std::stoi(cols[5])}});
    } catch (const std::invalid_argument&) {
      throw ParseError("malformed numeric column", lineno, 1);
    }
  }
  flush();
  std::set<std::string> seen;
  for (const Sentence& s : out)
    if (!seen.insert(s.id).second)
      throw ValidationError("duplicate sentence id: " + s.id);
  return out;
}

inline std::vector<Sentence> load_sentences(const std::string& path) {
  return parse_sentences(read_file(path));
}

inline std::string format_sentences(const std::vector<Sentence>& sentences) {
  std::string out;
  bool first = true;
  for (const auto& s : sentences) {
    if (!first) out += "\n";
    first = false;
    out += "#id " + s.id + "\n#text " + s.text + "\n";
    for (size_t i = 0; i < s.tokens.size(); ++i) {
      const Token& t = s.tokens[i];
      out += std::to_string(i + 1) + "\t" + t.form + "\t" + t.lemma + "\t" + t.pos + "\t" +
             std::to_string(t.span.start) + "\t" + std::to_string(t.span.end) + "\n";
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Graph file (native blocks or JSON lines)
// ---------------------------------------------------------------------------

inline std::vector<std::pair<std::string, EdsGraph>> parse_graph_blocks(const std::string& content) {
  std::vector<std::pair<std::string, EdsGraph>> out;
  size_t pos = 0;
  int lineno = 0;
  auto next_line = [&](std::string& line) {
    if (pos >= content.size()) return false;
    size_t nl = content.find('\n', pos);
    if (nl == std::string::npos) nl = content.size();
    line = content.substr(pos, nl - pos);
    pos = nl + 1;
    ++lineno;
    return true;
  };
  std::string line;
  std::string id;
  std::string body;
  int depth = 0;
  auto flush = [&] {
    if (!id.empty()) {
      if (strip(body).empty()) throw ParseError("graph block #id " + id + " has no graph");
      out.emplace_back(id, parse_eds(body));
      id.clear();
      body.clear();
    }
  };
  while (next_line(line)) {
    if (starts_with(line, "#id ")) {
      if (depth != 0) throw ParseError("unbalanced braces before #id", lineno, 1);
      flush();
      id = strip(line.substr(4));
      continue;
    }
    if (id.empty()) {
      if (strip(line).empty()) continue;
      throw ParseError("graph text before #id", lineno, 1);
    }
    for (char c : line) {
      if (c == '{') ++depth;
      if (c == '}') --depth;
    }
    body += line + "\n";
  }
  if (depth != 0) throw ParseError("unbalanced braces at end of file", lineno, 1);
  flush();
  return out;
}

inline std::vector<std::pair<std::string, EdsGraph>> parse_graphs(const std::string& content) {
  std::string head = strip(content.substr(0, std::min<size_t>(content.size(), 64)));
  if (starts_with(head, "{\"")) return graphs_from_jsonl(content);
  return parse_graph_blocks(content);
}

inline std::vector<std::pair<std::string, EdsGraph>> load_graphs(const std::string& path) {
  return parse_graphs(read_file(path));
}

inline std::string format_graphs(const std::vector<std::pair<std::string, EdsGraph>>& graphs) {
  std::string out;
  bool first = true;
  for (const auto& [id, g] : graphs) {
    if (!first) out += "\n";
    first = false;
    out += "#id " + id + "\n" + serialize_eds(g);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Pairing and down-sampling
// ---------------------------------------------------------------------------

inline std::vector<Instance> pair_corpus(const std::vector<Sentence>& sentences,
                                         const std::vector<std::pair<std::string, EdsGraph>>& graphs) {
  std::map<std::string, const EdsGraph*> by_id;
  for (const auto& [id, g] : graphs) {
    if (!by_id.emplace(id, &g).second) throw ValidationError("duplicate graph id: " + id);
  }
  std::vector<Instance> out;
  std::map<std::string, bool> used;
  for (const auto& s : sentences) {
    auto it = by_id.find(s.id);
    if (it == by_id.end()) throw ValidationError("no graph for sentence id: " + s.id);
    used[s.id] = true;
    Instance inst{s, *it->second};
    validate(inst);
    out.push_back(std::move(inst));
  }
  for (const auto& [id, g] : graphs)
    if (!used.count(id)) throw ValidationError("graph id missing from sentence file: " + id);
  return out;
}

inline std::vector<Instance> load_corpus(const std::string& sentences_path,
                                         const std::string& graphs_path) {
  return pair_corpus(load_sentences(sentences_path), load_graphs(graphs_path));
}

/// Deterministic pseudo-random subset of size round(fraction * N), original
/// order preserved. Subsets are nested: with the same seed, a larger fraction
/// always contains the smaller one's instances.
inline std::vector<Instance> downsample(const std::vector<Instance>& instances, double fraction,
                                        uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw ValidationError("downsample: fraction must be in (0, 1]");
  auto n = static_cast<size_t>(std::llround(fraction * static_cast<double>(instances.size())));
  if (n == 0) throw ValidationError("downsample: empty subset");
  std::vector<size_t> order(instances.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  order.resize(n);
  std::sort(order.begin(), order.end());
  std::vector<Instance> out;
  out.reserve(n);
  for (size_t i : order) out.push_back(instances[i]);
  return out;
}

}  // namespace eds
