#pragma once

/// Construction-focused diagnostics. Gold annotations are bi-lexical triples
/// (head word, role, dependent word, 1-based positions) grouped into sixteen
/// phenomenon families; system graphs are reduced to the same shape and
/// scored by recall, with complete-match accuracy for the argument-structure
/// families. Down-sampled learning curves reuse the same scoring.

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "eds/align.hpp"
#include "eds/corpus.hpp"
#include "eds/graph.hpp"
#include "eds/pipeline.hpp"
#include "eds/smatch.hpp"
#include "eds/util.hpp"

namespace eds {

inline const std::array<std::string, 16>& pheno_families() {
  static const std::array<std::string, 16> kFamilies = {
      "comp",    "as",      "ditr",  "causemo", "way",   "passive",
      "vpart",   "itexpl",  "ned",   "argadj",  "barerel", "tough",
      "rnr",     "absol",   "vger",  "control"};
  return kFamilies;
}

/// Families whose report includes complete-match accuracy over head groups.
inline bool pheno_complete_match_family(const std::string& phenomenon) {
  return phenomenon == "as" || phenomenon == "ditr" || phenomenon == "causemo" ||
         phenomenon == "way";
}

struct PhenoTriple {
  std::string sentence;
  std::string phenomenon;
  std::string subtype;  // empty when the gold file has "-"
  std::string head_form;
  int head_pos = 0;  // 1-based
  std::string role;
  std::string dep_form;
  int dep_pos = 0;  // 1-based
};

namespace detail {

inline std::pair<std::string, int> split_word_pos(const std::string& field, int lineno) {
  size_t us = field.rfind('_');
  if (us == std::string::npos || us + 1 >= field.size())
    throw ParseError("missing position suffix in '" + field + "'", lineno, 1);
  for (size_t i = us + 1; i < field.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(field[i])))
      throw ParseError("malformed position suffix in '" + field + "'", lineno, 1);
  int pos = std::stoi(field.substr(us + 1));
  if (pos < 1) throw ParseError("position must be 1-based in '" + field + "'", lineno, 1);
  return {field.substr(0, us), pos};
}

}  // namespace detail

/// Parses the tab-separated gold file:
/// sent-id, phenomenon, subtype-or-dash, headform_pos, role, depform_pos.
inline std::vector<PhenoTriple> parse_pheno_gold(std::string_view text) {
  const auto& families = pheno_families();
  std::vector<PhenoTriple> out;
  int lineno = 0;
  for (std::string_view raw : split(text, '\n')) {
    ++lineno;
    std::string line = strip(raw);
    if (line.empty() || line[0] == '#') continue;
    auto cols = split(line, '\t');
    if (cols.size() != 6)
      throw ParseError("expected 6 tab-separated fields", lineno, 1);
    PhenoTriple t;
    t.sentence = std::string(cols[0]);
    t.phenomenon = std::string(cols[1]);
    if (std::find(families.begin(), families.end(), t.phenomenon) == families.end())
      throw ParseError("unknown phenomenon '" + t.phenomenon + "'", lineno, 1);
    t.subtype = cols[2] == "-" ? "" : std::string(cols[2]);
    std::tie(t.head_form, t.head_pos) =
        detail::split_word_pos(std::string(cols[3]), lineno);
    t.role = std::string(cols[4]);
    std::tie(t.dep_form, t.dep_pos) =
        detail::split_word_pos(std::string(cols[5]), lineno);
    out.push_back(std::move(t));
  }
  return out;
}

inline std::vector<PhenoTriple> load_pheno_gold(const std::string& path) {
  return parse_pheno_gold(read_file(path));
}

/// Checks every triple against its sentence: known id, positions in range,
/// surface forms matching the tokens.
inline void validate_pheno(const std::vector<PhenoTriple>& gold,
                           const std::vector<Sentence>& sentences) {
  std::map<std::string, const Sentence*> by_id;
  for (const Sentence& s : sentences) by_id[s.id] = &s;
  for (const PhenoTriple& t : gold) {
    auto it = by_id.find(t.sentence);
    if (it == by_id.end())
      throw ValidationError("pheno triple names unknown sentence " + t.sentence);
    const Sentence& s = *it->second;
    auto check = [&](const std::string& form, int pos) {
      if (pos < 1 || pos > static_cast<int>(s.tokens.size()))
        throw ValidationError("position " + std::to_string(pos) + " out of range in " +
                              t.sentence);
      if (s.tokens[pos - 1].form != form)
        throw ValidationError("form '" + form + "' does not match token " +
                              std::to_string(pos) + " ('" + s.tokens[pos - 1].form +
                              "') in " + t.sentence);
    };
    check(t.head_form, t.head_pos);
    check(t.dep_form, t.dep_pos);
  }
}

struct BilexicalSet {
  std::set<std::tuple<int, std::string, int>> triples;  // 1-based positions
  std::vector<std::string> warnings;

  bool has(int head, const std::string& role, int dep) const {
    return triples.count({head, role, dep}) > 0;
  }
};

/// Reduces a graph to bi-lexical token triples:
/// - every edge projects onto its endpoints' aligned tokens;
/// - arcs into or out of a coordination node (one with L-INDEX and R-INDEX
///   edges) are also distributed over the conjuncts, recursively;
/// - each compound* node derives (ARG1-token, compound, ARG2-token);
/// - a node whose constant matches its token's surface form emits a CARG
///   self-triple, so name recognition is checkable like any other triple.
/// Unalignable nodes are skipped with a warning.
inline BilexicalSet extract_bilexical(const EdsGraph& g, const Sentence& s) {
  BilexicalSet out;
  std::map<std::string, int> pos;  // node id -> 1-based token position
  for (const EdsNode& n : g.nodes) {
    int tok = align_node(s, n);
    if (tok < 0) {
      out.warnings.push_back("skipped unalignable node " + n.id + ":" + n.predicate +
                             " in " + s.id);
      continue;
    }
    pos[n.id] = tok + 1;
  }

  std::map<std::string, std::pair<std::string, std::string>> coord;  // id -> (L,R)
  std::map<std::string, std::map<std::string, std::string>> out_by_role;
  for (const EdsEdge& e : g.edges) out_by_role[e.source][e.role] = e.target;
  for (const auto& [id, roles] : out_by_role) {
    auto l = roles.find("L-INDEX");
    auto r = roles.find("R-INDEX");
    if (l != roles.end() && r != roles.end()) coord[id] = {l->second, r->second};
  }

  std::map<std::string, std::vector<std::string>> expansion;
  std::function<const std::vector<std::string>&(const std::string&)> expand =
      [&](const std::string& id) -> const std::vector<std::string>& {
    auto done = expansion.find(id);
    if (done != expansion.end()) return done->second;
    expansion[id] = {};  // breaks cycles: a node reached twice expands to itself
    std::vector<std::string> result;
    auto c = coord.find(id);
    if (c == coord.end()) {
      result.push_back(id);
    } else {
      for (const std::string& side : {c->second.first, c->second.second}) {
        const auto& sub = expand(side);
        if (sub.empty())
          result.push_back(side);
        else
          result.insert(result.end(), sub.begin(), sub.end());
      }
    }
    return expansion[id] = std::move(result);
  };

  auto emit = [&](const std::string& src, const std::string& role,
                  const std::string& tgt) {
    auto ps = pos.find(src);
    auto pt = pos.find(tgt);
    if (ps != pos.end() && pt != pos.end())
      out.triples.insert({ps->second, role, pt->second});
  };

  for (const EdsEdge& e : g.edges) {
    emit(e.source, e.role, e.target);
    if (e.role == "L-INDEX" || e.role == "R-INDEX" || e.role == "L-HNDL" ||
        e.role == "R-HNDL")
      continue;
    for (const std::string& src : expand(e.source))
      for (const std::string& tgt : expand(e.target)) emit(src, e.role, tgt);
  }

  for (const EdsNode& n : g.nodes) {
    if (!starts_with(n.predicate, "compound")) continue;
    auto roles = out_by_role.find(n.id);
    if (roles == out_by_role.end()) continue;
    auto a1 = roles->second.find("ARG1");
    auto a2 = roles->second.find("ARG2");
    if (a1 == roles->second.end() || a2 == roles->second.end()) continue;
    for (const std::string& head : expand(a1->second))
      for (const std::string& dep : expand(a2->second))
        emit(head, "compound", dep);
  }

  for (const EdsNode& n : g.nodes) {
    if (!n.carg) continue;
    auto p = pos.find(n.id);
    if (p == pos.end()) continue;
    if (s.tokens[p->second - 1].form == *n.carg)
      out.triples.insert({p->second, "CARG", p->second});
  }
  return out;
}

struct PhenoRow {
  std::string system;
  std::string phenomenon;
  std::string subtype;
  long count = 0;
  long recovered = 0;
  double recall = 0;
  long groups = 0;
  long groups_complete = 0;
  double complete_match = -1;  // negative: not defined for this family
};

struct PhenoReport {
  std::vector<PhenoRow> rows;

  const PhenoRow* find(const std::string& system, const std::string& phenomenon,
                       const std::string& subtype = "") const {
    for (const PhenoRow& r : rows)
      if (r.system == system && r.phenomenon == phenomenon && r.subtype == subtype)
        return &r;
    return nullptr;
  }

  std::string to_csv() const {
    std::ostringstream out;
    out << "system,phenomenon,subtype,count,recall,complete_match\n";
    char buf[64];
    for (const PhenoRow& r : rows) {
      out << r.system << ',' << r.phenomenon << ','
          << (r.subtype.empty() ? "-" : r.subtype) << ',' << r.count << ',';
      std::snprintf(buf, sizeof(buf), "%.4f", r.recall);
      out << buf << ',';
      if (r.complete_match < 0) {
        out << '-';
      } else {
        std::snprintf(buf, sizeof(buf), "%.4f", r.complete_match);
        out << buf;
      }
      out << '\n';
    }
    return out.str();
  }
};

/// Recall of gold triples against each system's extracted sets. Sentences a
/// system has no graph for count as unrecovered; a parallel `name@covered`
/// block restricts scoring to the sentences the system did produce.
inline PhenoReport pheno_score(
    const std::vector<PhenoTriple>& gold, const std::vector<Sentence>& sentences,
    const std::map<std::string, std::vector<std::pair<std::string, EdsGraph>>>&
        systems) {
  validate_pheno(gold, sentences);
  std::map<std::string, const Sentence*> sentence_by_id;
  for (const Sentence& s : sentences) sentence_by_id[s.id] = &s;

  PhenoReport report;
  for (const auto& [name, graphs] : systems) {
    std::map<std::string, BilexicalSet> extracted;
    for (const auto& [id, graph] : graphs) {
      auto s = sentence_by_id.find(id);
      if (s == sentence_by_id.end())
        throw ValidationError("system " + name + " has a graph for unknown sentence " +
                              id);
      extracted[id] = extract_bilexical(graph, *s->second);
    }

    auto score = [&](const std::string& label, bool covered_only) {
      struct Group {
        long count = 0, recovered = 0;
        // head groups for complete match: key sentence@head_pos
        std::map<std::string, std::pair<long, long>> heads;  // total, recovered
      };
      std::map<std::pair<std::string, std::string>, Group> cells;
      for (const PhenoTriple& t : gold) {
        auto ext = extracted.find(t.sentence);
        if (covered_only && ext == extracted.end()) continue;
        bool hit = ext != extracted.end() &&
                   ext->second.has(t.head_pos, t.role, t.dep_pos);
        Group& g = cells[{t.phenomenon, t.subtype}];
        ++g.count;
        if (hit) ++g.recovered;
        if (pheno_complete_match_family(t.phenomenon)) {
          auto& [total, rec] = g.heads[t.sentence + "@" + std::to_string(t.head_pos)];
          ++total;
          if (hit) ++rec;
        }
      }
      for (const std::string& family : pheno_families()) {
        for (const auto& [key, g] : cells) {
          if (key.first != family) continue;
          PhenoRow row;
          row.system = label;
          row.phenomenon = key.first;
          row.subtype = key.second;
          row.count = g.count;
          row.recovered = g.recovered;
          row.recall = g.count ? static_cast<double>(g.recovered) / g.count : 1.0;
          if (pheno_complete_match_family(family)) {
            row.groups = static_cast<long>(g.heads.size());
            for (const auto& [head, counts] : g.heads)
              if (counts.first == counts.second) ++row.groups_complete;
            row.complete_match =
                row.groups ? static_cast<double>(row.groups_complete) / row.groups
                           : 1.0;
          }
          report.rows.push_back(std::move(row));
        }
      }
    };
    score(name, false);
    score(name + "@covered", true);
  }
  return report;
}

/// Per-family recall aggregated over subtypes, for one system's rows.
inline std::map<std::string, double> pheno_family_recall(const PhenoReport& report,
                                                         const std::string& system) {
  std::map<std::string, std::pair<long, long>> counts;
  for (const PhenoRow& r : report.rows) {
    if (r.system != system) continue;
    counts[r.phenomenon].first += r.count;
    counts[r.phenomenon].second += r.recovered;
  }
  std::map<std::string, double> out;
  for (const auto& [family, c] : counts)
    out[family] = c.first ? static_cast<double>(c.second) / c.first : 1.0;
  return out;
}

// ---------------------------------------------------------------------------
// Learning curves
// ---------------------------------------------------------------------------

struct CurveConfig {
  std::vector<double> fractions;
  PipelineConfig pipeline{};
  SmatchConfig smatch_cfg{};
};

struct CurvePoint {
  double fraction = 0;
  std::vector<std::pair<std::string, double>> metrics;
};

/// Trains both stages on nested down-sampled subsets and evaluates each model
/// on dev: corpus Smatch with concept/arc breakdown, plus per-family pheno
/// recall when gold annotations are supplied.
inline std::vector<CurvePoint> learning_curve(
    const std::vector<Instance>& train, const std::vector<Instance>& dev,
    const CurveConfig& cfg, const std::vector<PhenoTriple>* pheno_gold = nullptr,
    const ContextVectors* ctx = nullptr) {
  if (cfg.fractions.empty()) throw ValidationError("no fractions given");
  for (double f : cfg.fractions)
    if (!(f > 0.0 && f <= 1.0))
      throw ValidationError("fractions must lie in (0, 1]");
  for (size_t i = 1; i < cfg.fractions.size(); ++i)
    if (cfg.fractions[i] <= cfg.fractions[i - 1])
      throw ValidationError("fractions must be strictly ascending");
  if (dev.empty()) throw ValidationError("learning curve needs a dev set");

  std::vector<Sentence> dev_sents;
  std::vector<std::pair<std::string, EdsGraph>> dev_gold;
  for (const Instance& inst : dev) {
    dev_sents.push_back(inst.sentence);
    dev_gold.emplace_back(inst.sentence.id, inst.graph);
  }

  std::vector<CurvePoint> points;
  for (double fraction : cfg.fractions) {
    auto subset = downsample(train, fraction, cfg.pipeline.training.seed);
    Pipeline model = train_pipeline(subset, dev, cfg.pipeline, ctx);
    auto pred = parse_corpus(model, dev_sents, ctx);

    CurvePoint point;
    point.fraction = fraction;
    CorpusSmatch sm = corpus_smatch(pred, dev_gold, cfg.smatch_cfg);
    point.metrics.emplace_back("smatch_f", sm.f);
    point.metrics.emplace_back("concept_f", sm.concept_f);
    point.metrics.emplace_back("arc_f", sm.arc_f);
    if (pheno_gold) {
      PhenoReport rep = pheno_score(*pheno_gold, dev_sents, {{"model", pred}});
      for (const auto& [family, recall] : pheno_family_recall(rep, "model"))
        point.metrics.emplace_back("recall:" + family, recall);
    }
    points.push_back(std::move(point));
  }
  return points;
}

inline std::string curve_csv(const std::vector<CurvePoint>& points) {
  std::ostringstream out;
  out << "fraction,metric,value\n";
  char buf[32];
  for (const CurvePoint& p : points)
    for (const auto& [metric, value] : p.metrics) {
      std::snprintf(buf, sizeof(buf), "%.4f", value);
      out << p.fraction << ',' << metric << ',' << buf << '\n';
    }
  return out.str();
}

}  // namespace eds
