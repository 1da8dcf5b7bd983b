#pragma once

/// Node-to-token alignment, predicate delexicalization, per-token tag
/// composition and its inverse. Tags are the targets of the sequence
/// labeling stage: each token carries the (possibly empty) set of
/// delexicalized predicates it triggers.

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "eds/corpus.hpp"
#include "eds/graph.hpp"
#include "eds/util.hpp"

namespace eds {

inline constexpr const char* kEmptyTag = "∅";   // ∅
inline constexpr const char* kTagJoiner = "⊕";  // ⊕

/// The composed, canonically ordered label of one token.
struct ConceptTag {
  std::vector<std::string> parts;  // lexicographically sorted

  static ConceptTag of(std::vector<std::string> parts) {
    std::sort(parts.begin(), parts.end());
    return ConceptTag{std::move(parts)};
  }

  static ConceptTag parse(std::string_view s) {
    if (s == kEmptyTag || s.empty()) return ConceptTag{};
    return of(split_str(s, kTagJoiner));
  }

  std::string str() const {
    if (parts.empty()) return kEmptyTag;
    std::string out = parts[0];
    for (size_t i = 1; i < parts.size(); ++i) out += std::string(kTagJoiner) + parts[i];
    return out;
  }

  bool empty() const { return parts.empty(); }
  bool operator==(const ConceptTag&) const = default;
};

// ---------------------------------------------------------------------------
// Alignment heuristics
// ---------------------------------------------------------------------------

/// Aligns every node to exactly one token:
///   1. anchor covers exactly one token -> that token;
///   2. `compound*` predicates -> first covered token;
///   3. other abstract predicates covering several tokens -> last covered;
///   4. otherwise -> the token containing anchor.start.
/// A node whose anchor touches no token is an error.
/// Token index for one node, or -1 when no rule applies.
inline int align_node(const Sentence& s, const EdsNode& n) {
  const auto& tokens = s.tokens;
  std::vector<int> covered;
  for (size_t i = 0; i < tokens.size(); ++i)
    if (tokens[i].span.start >= n.anchor.start && tokens[i].span.end <= n.anchor.end)
      covered.push_back(static_cast<int>(i));
  if (covered.size() == 1) return covered[0];
  if (!covered.empty() && starts_with(n.predicate, "compound")) return covered.front();
  if (covered.size() > 1 && !is_surface_predicate(n.predicate)) return covered.back();
  for (size_t i = 0; i < tokens.size(); ++i)
    if (tokens[i].span.start <= n.anchor.start && n.anchor.start < tokens[i].span.end)
      return static_cast<int>(i);
  return -1;
}

inline std::map<std::string, int> align_nodes(const Instance& inst) {
  std::map<std::string, int> out;
  std::vector<std::string> unalignable;
  for (const auto& n : inst.graph.nodes) {
    int chosen = align_node(inst.sentence, n);
    if (chosen < 0) {
      unalignable.push_back(n.id + ":" + n.predicate);
      continue;
    }
    out[n.id] = chosen;
  }
  if (!unalignable.empty()) {
    std::string msg = "unalignable nodes in " + inst.sentence.id + ":";
    for (const auto& u : unalignable) msg += " " + u;
    throw ValidationError(msg);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Delexicalization
// ---------------------------------------------------------------------------

/// `_drug_n_1` -> `*_n_1`; abstract predicates (and already-delexicalized
/// parts) pass through unchanged. When the predicate's lemma segment matches
/// the supplied lemma it is stripped exactly, otherwise the segment up to the
/// next underscore is used.
inline std::string delexicalize(const std::string& predicate, const std::string& lemma = "") {
  if (!is_surface_predicate(predicate)) return predicate;
  if (!lemma.empty()) {
    std::string prefix = "_" + lower(lemma) + "_";
    if (starts_with(lower(predicate), prefix)) return "*" + predicate.substr(prefix.size() - 1);
  }
  size_t next = predicate.find('_', 1);
  if (next == std::string::npos) return "*";
  return "*" + predicate.substr(next);
}

/// Inverse of delexicalize for one tag part: `*_n_1` with lemma "drug"
/// -> `_drug_n_1`. Parts without the placeholder pass through verbatim.
inline std::string relexicalize_part(const std::string& part, const std::string& lemma) {
  if (part.empty() || part[0] != '*') return part;
  return "_" + lower(lemma) + part.substr(1);
}

// ---------------------------------------------------------------------------
// Tag composition and expansion
// ---------------------------------------------------------------------------

inline std::vector<ConceptTag> compose_tags(const Instance& inst,
                                            const std::map<std::string, int>& alignment) {
  std::vector<std::vector<std::string>> parts(inst.sentence.tokens.size());
  for (const auto& n : inst.graph.nodes) {
    auto it = alignment.find(n.id);
    if (it == alignment.end()) throw ValidationError("alignment missing node " + n.id);
    const Token& tok = inst.sentence.tokens.at(it->second);
    parts[it->second].push_back(delexicalize(n.predicate, tok.lemma));
  }
  std::vector<ConceptTag> out;
  out.reserve(parts.size());
  for (auto& p : parts) out.push_back(ConceptTag::of(std::move(p)));
  return out;
}

/// Expands predicted tags back into concept nodes. Node ids are generated as
/// n<token>_<k>; anchors are the token spans; `named` nodes receive the
/// surface form as their constant argument.
inline std::vector<EdsNode> relexicalize(const std::vector<ConceptTag>& tags,
                                         const Sentence& sentence) {
  if (tags.size() != sentence.tokens.size())
    throw ValidationError("relexicalize: tag count != token count");
  std::vector<EdsNode> out;
  for (size_t i = 0; i < tags.size(); ++i) {
    const Token& tok = sentence.tokens[i];
    for (size_t k = 0; k < tags[i].parts.size(); ++k) {
      EdsNode n;
      n.id = "n" + std::to_string(i) + "_" + std::to_string(k);
      n.predicate = relexicalize_part(tags[i].parts[k], tok.lemma);
      n.anchor = tok.span;
      if (n.predicate == "named") n.carg = tok.form;
      out.push_back(std::move(n));
    }
  }
  return out;
}

/// Measures whether delexicalization round-trips on gold data: for each
/// instance, compose tags from the gold graph and expand them again, then
/// compare the (predicate, token) multisets. Inconsistent lemmas are
/// reported, not fatal.
struct RoundTripReport {
  int total = 0;
  int ok = 0;
  std::vector<std::string> failures;  // sentence ids
};

inline RoundTripReport alignment_roundtrip_report(const std::vector<Instance>& instances) {
  RoundTripReport rep;
  for (const auto& inst : instances) {
    ++rep.total;
    auto alignment = align_nodes(inst);
    auto tags = compose_tags(inst, alignment);
    auto nodes = relexicalize(tags, inst.sentence);
    std::multiset<std::pair<std::string, int>> gold, rebuilt;
    for (const auto& n : inst.graph.nodes) gold.insert({n.predicate, alignment.at(n.id)});
    for (const auto& n : nodes) {
      // n<token>_<k>
      int tok = std::stoi(n.id.substr(1, n.id.find('_') - 1));
      rebuilt.insert({n.predicate, tok});
    }
    if (gold == rebuilt)
      ++rep.ok;
    else
      rep.failures.push_back(inst.sentence.id);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Tag vocabulary
// ---------------------------------------------------------------------------

/// Bijective tag <-> id mapping with frequency counts. Id 0 is always the
/// empty tag.
class TagVocabulary {
 public:
  TagVocabulary() { add(kEmptyTag, 0); }

  int add(const std::string& tag, long count = 1) {
    auto it = ids_.find(tag);
    if (it != ids_.end()) {
      counts_[it->second] += count;
      return it->second;
    }
    int id = static_cast<int>(tags_.size());
    ids_.emplace(tag, id);
    tags_.push_back(tag);
    counts_.push_back(count);
    return id;
  }

  /// Builds from gold tag sequences; tags rarer than min_count are pruned
  /// (their tokens fall back to the empty tag).
  static TagVocabulary build(const std::vector<std::vector<ConceptTag>>& sequences,
                             long min_count = 1) {
    TagVocabulary raw;
    for (const auto& seq : sequences)
      for (const auto& tag : seq) raw.add(tag.str());
    if (min_count <= 1) return raw;
    TagVocabulary pruned;
    for (int id = 1; id < raw.size(); ++id)
      if (raw.count(id) >= min_count) pruned.add(raw.tag(id), raw.count(id));
    pruned.counts_[0] = raw.count(0);
    return pruned;
  }

  int size() const { return static_cast<int>(tags_.size()); }
  const std::string& tag(int id) const { return tags_.at(id); }
  long count(int id) const { return counts_.at(id); }

  /// Id of a tag, or 0 (empty) when unknown.
  int id_or_empty(const std::string& tag) const {
    auto it = ids_.find(tag);
    return it == ids_.end() ? 0 : it->second;
  }

  bool contains(const std::string& tag) const { return ids_.count(tag) > 0; }

  std::string serialize() const {
    std::string out;
    for (int id = 0; id < size(); ++id)
      out += tags_[id] + "\t" + std::to_string(id) + "\t" + std::to_string(counts_[id]) + "\n";
    return out;
  }

  static TagVocabulary deserialize(const std::string& text) {
    TagVocabulary v;
    int lineno = 0;
    for (const auto& line : split(text, '\n')) {
      ++lineno;
      if (strip(line).empty()) continue;
      auto cols = split(line, '\t');
      if (cols.size() != 3) throw ParseError("tag vocabulary: expected 3 columns", lineno, 1);
      int id = std::stoi(cols[1]);
      if (id == 0) {
        if (cols[0] != kEmptyTag) throw ParseError("tag id 0 must be the empty tag", lineno, 1);
        v.counts_[0] = std::stol(cols[2]);
        continue;
      }
      int got = v.add(cols[0], std::stol(cols[2]));
      if (got != id) throw ParseError("tag vocabulary ids are not dense", lineno, 1);
    }
    return v;
  }

 private:
  std::vector<std::string> tags_;
  std::vector<long> counts_;
  std::map<std::string, int> ids_;
};

}  // namespace eds
