#pragma once

/// Smatch scoring for possibly-disconnected graphs: the best triple overlap
/// between two graphs over partial injective node mappings. Search is greedy
/// hill-climbing from a predicate-matching start plus random restarts; an
/// exhaustive oracle covers small graphs. Anchors play no part; node identity
/// is the predicate string.

#include <algorithm>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "eds/graph.hpp"
#include "eds/util.hpp"

namespace eds {

struct SmatchConfig {
  int restarts = 20;
  uint64_t seed = 1;
  bool include_top = true;
  int jobs = 1;  // worker threads for corpus scoring; per-graph results merge in id order
};

struct AlignmentMapping {
  std::map<std::string, std::string> mapping;  // pred node id -> gold node id
  long matched = 0;
  long pred_triples = 0;
  long gold_triples = 0;
  double precision = 0, recall = 0, f = 0;
  bool vacuous = false;  // both sides had no triples

  void finalize() {
    vacuous = pred_triples == 0 && gold_triples == 0;
    precision = pred_triples > 0 ? static_cast<double>(matched) / pred_triples
                                 : (gold_triples == 0 ? 1.0 : 0.0);
    recall = gold_triples > 0 ? static_cast<double>(matched) / gold_triples
                              : (pred_triples == 0 ? 1.0 : 0.0);
    f = (precision + recall) > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
  }
};

namespace detail {

/// Indexed matching problem: nodes in canonical order, relations as index
/// tuples. assign[p] is the gold index for pred index p, or -1.
struct SmatchProblem {
  std::vector<std::string> pred_ids, gold_ids;
  std::vector<std::string> pred_label, gold_label;
  std::vector<std::tuple<std::string, int, int>> pred_rel;
  std::set<std::tuple<std::string, int, int>> gold_rel;
  std::vector<std::tuple<std::string, int, std::string>> pred_const;
  std::set<std::tuple<std::string, int, std::string>> gold_const;
  int pred_top = -1, gold_top = -1;
  bool include_top = true;
  long pred_triples = 0, gold_triples = 0;

  long score(const std::vector<int>& assign) const {
    long m = 0;
    for (size_t p = 0; p < pred_label.size(); ++p)
      if (assign[p] >= 0 && pred_label[p] == gold_label[assign[p]]) ++m;
    for (const auto& [role, s, t] : pred_rel)
      if (assign[s] >= 0 && assign[t] >= 0 &&
          gold_rel.count({role, assign[s], assign[t]}))
        ++m;
    for (const auto& [role, s, c] : pred_const)
      if (assign[s] >= 0 && gold_const.count({role, assign[s], c})) ++m;
    if (include_top && pred_top >= 0 && gold_top >= 0 && assign[pred_top] == gold_top)
      ++m;
    return m;
  }
};

inline void index_side(const EdsGraph& g, std::vector<std::string>& ids,
                       std::vector<std::string>& labels,
                       std::map<std::string, int>& pos) {
  std::vector<const EdsNode*> order;
  for (const auto& n : g.nodes) order.push_back(&n);
  std::sort(order.begin(), order.end(), [](const EdsNode* a, const EdsNode* b) {
    return std::tie(a->anchor.start, a->anchor.end, a->predicate, a->id) <
           std::tie(b->anchor.start, b->anchor.end, b->predicate, b->id);
  });
  for (const EdsNode* n : order) {
    pos[n->id] = static_cast<int>(ids.size());
    ids.push_back(n->id);
    labels.push_back(n->predicate);
  }
}

inline SmatchProblem make_problem(const EdsGraph& pred, const EdsGraph& gold,
                                  bool include_top) {
  SmatchProblem pr;
  pr.include_top = include_top;
  std::map<std::string, int> ppos, gpos;
  index_side(pred, pr.pred_ids, pr.pred_label, ppos);
  index_side(gold, pr.gold_ids, pr.gold_label, gpos);
  for (const EdsNode& n : pred.nodes)
    if (n.carg) pr.pred_const.emplace_back("CARG", ppos.at(n.id), *n.carg);
  for (const EdsNode& n : gold.nodes)
    if (n.carg) pr.gold_const.insert({"CARG", gpos.at(n.id), *n.carg});
  for (const EdsEdge& e : pred.edges)
    pr.pred_rel.emplace_back(e.role, ppos.at(e.source), ppos.at(e.target));
  for (const EdsEdge& e : gold.edges)
    pr.gold_rel.insert({e.role, gpos.at(e.source), gpos.at(e.target)});
  if (pred.top) pr.pred_top = ppos.at(*pred.top);
  if (gold.top) pr.gold_top = gpos.at(*gold.top);

  auto count = [&](const EdsGraph& g) {
    long n = static_cast<long>(g.nodes.size() + g.edges.size());
    for (const EdsNode& node : g.nodes)
      if (node.carg) ++n;
    if (include_top && g.top) ++n;
    return n;
  };
  pr.pred_triples = count(pred);
  pr.gold_triples = count(gold);
  return pr;
}

/// Best-improvement hill-climbing over move/swap/unmap steps.
inline long hill_climb(const SmatchProblem& pr, std::vector<int>& assign) {
  int np = static_cast<int>(pr.pred_label.size());
  int ng = static_cast<int>(pr.gold_label.size());
  std::vector<int> owner(ng, -1);
  for (int p = 0; p < np; ++p)
    if (assign[p] >= 0) owner[assign[p]] = p;

  long current = pr.score(assign);
  bool improved = true;
  while (improved) {
    improved = false;
    long best_gain = 0;
    int best_p = -1, best_g = -2;
    std::vector<int> cand(assign);
    for (int p = 0; p < np; ++p) {
      for (int g = -1; g < ng; ++g) {
        if (g == assign[p]) continue;
        cand = assign;
        if (g >= 0 && owner[g] >= 0 && owner[g] != p) cand[owner[g]] = assign[p];
        cand[p] = g;
        long gain = pr.score(cand) - current;
        if (gain > best_gain) {
          best_gain = gain;
          best_p = p;
          best_g = g;
        }
      }
    }
    if (best_p >= 0) {
      int old = assign[best_p];
      if (best_g >= 0 && owner[best_g] >= 0 && owner[best_g] != best_p) {
        assign[owner[best_g]] = old;
        if (old >= 0) owner[old] = owner[best_g];
      } else if (old >= 0) {
        owner[old] = -1;
      }
      assign[best_p] = best_g;
      if (best_g >= 0) owner[best_g] = best_p;
      current += best_gain;
      improved = true;
    }
  }
  return current;
}

inline std::vector<int> greedy_start(const SmatchProblem& pr) {
  int np = static_cast<int>(pr.pred_label.size());
  int ng = static_cast<int>(pr.gold_label.size());
  std::vector<int> assign(np, -1);
  std::vector<bool> used(ng, false);
  for (int p = 0; p < np; ++p)
    for (int g = 0; g < ng; ++g)
      if (!used[g] && pr.gold_label[g] == pr.pred_label[p]) {
        assign[p] = g;
        used[g] = true;
        break;
      }
  return assign;
}

inline std::vector<int> random_start(const SmatchProblem& pr, Rng& rng) {
  int np = static_cast<int>(pr.pred_label.size());
  int ng = static_cast<int>(pr.gold_label.size());
  std::vector<int> golds(ng);
  std::iota(golds.begin(), golds.end(), 0);
  std::shuffle(golds.begin(), golds.end(), rng);
  std::vector<int> preds(np);
  std::iota(preds.begin(), preds.end(), 0);
  std::shuffle(preds.begin(), preds.end(), rng);
  std::vector<int> assign(np, -1);
  for (int i = 0; i < std::min(np, ng); ++i) assign[preds[i]] = golds[i];
  return assign;
}

inline AlignmentMapping finish_mapping(const SmatchProblem& pr,
                                       const std::vector<int>& assign, long matched) {
  AlignmentMapping out;
  for (size_t p = 0; p < assign.size(); ++p)
    if (assign[p] >= 0) out.mapping[pr.pred_ids[p]] = pr.gold_ids[assign[p]];
  out.matched = matched;
  out.pred_triples = pr.pred_triples;
  out.gold_triples = pr.gold_triples;
  out.finalize();
  return out;
}

}  // namespace detail

/// Hill-climbing Smatch: greedy start plus restarts-1 random starts, best
/// mapping wins. Deterministic for a fixed seed.
inline AlignmentMapping smatch(const EdsGraph& pred, const EdsGraph& gold,
                               SmatchConfig cfg = {}) {
  if (cfg.restarts < 1) throw ValidationError("smatch needs at least one restart");
  detail::SmatchProblem pr = detail::make_problem(pred, gold, cfg.include_top);

  std::vector<int> best_assign = detail::greedy_start(pr);
  long best = detail::hill_climb(pr, best_assign);
  for (int r = 1; r < cfg.restarts; ++r) {
    Rng rng = derived_rng(cfg.seed, static_cast<uint64_t>(r));
    std::vector<int> assign = detail::random_start(pr, rng);
    long score = detail::hill_climb(pr, assign);
    if (score > best) {
      best = score;
      best_assign = assign;
    }
  }
  return detail::finish_mapping(pr, best_assign, best);
}

/// Exact Smatch by exhaustive search over complete injective mappings of the
/// smaller node set into the larger. Kept for verification on small graphs.
inline AlignmentMapping smatch_oracle(const EdsGraph& pred, const EdsGraph& gold,
                                      bool include_top = true) {
  detail::SmatchProblem pr = detail::make_problem(pred, gold, include_top);
  int np = static_cast<int>(pr.pred_label.size());
  int ng = static_cast<int>(pr.gold_label.size());
  if (std::min(np, ng) > 8)
    throw ValidationError("smatch_oracle: graphs too large for exhaustive search");

  bool invert = np > ng;
  int small = invert ? ng : np;
  int large = invert ? np : ng;

  std::vector<int> small_assign(small, -1), used(large, 0);
  std::vector<int> best_small(small, -1);
  long best = -1;

  std::vector<int> assign(np, -1);
  auto eval = [&]() {
    std::fill(assign.begin(), assign.end(), -1);
    for (int i = 0; i < small; ++i) {
      if (small_assign[i] < 0) continue;
      if (invert)
        assign[small_assign[i]] = i;
      else
        assign[i] = small_assign[i];
    }
    long s = pr.score(assign);
    if (s > best) {
      best = s;
      best_small = small_assign;
    }
  };

  std::function<void(int)> rec = [&](int i) {
    if (i == small) {
      eval();
      return;
    }
    for (int j = 0; j < large; ++j) {
      if (used[j]) continue;
      used[j] = 1;
      small_assign[i] = j;
      rec(i + 1);
      used[j] = 0;
    }
    small_assign[i] = -1;
  };
  if (small == 0)
    eval();
  else
    rec(0);

  std::fill(assign.begin(), assign.end(), -1);
  for (int i = 0; i < small; ++i) {
    if (best_small[i] < 0) continue;
    if (invert)
      assign[best_small[i]] = i;
    else
      assign[i] = best_small[i];
  }
  return detail::finish_mapping(pr, assign, best);
}

struct BreakdownCounts {
  long inst_matched = 0, inst_pred = 0, inst_gold = 0;
  long rel_matched = 0, rel_pred = 0, rel_gold = 0;
};

inline double count_f(long m, long p, long g) {
  double pr = p > 0 ? static_cast<double>(m) / p : (g == 0 ? 1.0 : 0.0);
  double rc = g > 0 ? static_cast<double>(m) / g : (p == 0 ? 1.0 : 0.0);
  return (pr + rc) > 0 ? 2 * pr * rc / (pr + rc) : 0.0;
}

/// Instance-triple and relation-triple counts under a fixed mapping, for the
/// per-graph concept and arc breakdowns.
inline BreakdownCounts mapping_breakdown_counts(const EdsGraph& pred,
                                                const EdsGraph& gold,
                                                const AlignmentMapping& m) {
  BreakdownCounts c;
  std::map<std::string, std::string> gold_label;
  for (const EdsNode& n : gold.nodes) gold_label[n.id] = n.predicate;
  for (const EdsNode& n : pred.nodes) {
    auto it = m.mapping.find(n.id);
    if (it != m.mapping.end() && gold_label.at(it->second) == n.predicate)
      ++c.inst_matched;
  }
  c.inst_pred = static_cast<long>(pred.nodes.size());
  c.inst_gold = static_cast<long>(gold.nodes.size());

  std::set<std::tuple<std::string, std::string, std::string>> gold_rel;
  for (const EdsEdge& e : gold.edges) gold_rel.insert({e.role, e.source, e.target});
  for (const EdsNode& n : gold.nodes)
    if (n.carg) gold_rel.insert({"CARG", n.id, "\"" + *n.carg + "\""});
  auto mapped = [&](const std::string& id) -> const std::string* {
    auto it = m.mapping.find(id);
    return it == m.mapping.end() ? nullptr : &it->second;
  };
  for (const EdsEdge& e : pred.edges) {
    ++c.rel_pred;
    const std::string* s = mapped(e.source);
    const std::string* t = mapped(e.target);
    if (s && t && gold_rel.count({e.role, *s, *t})) ++c.rel_matched;
  }
  for (const EdsNode& n : pred.nodes) {
    if (!n.carg) continue;
    ++c.rel_pred;
    const std::string* s = mapped(n.id);
    if (s && gold_rel.count({"CARG", *s, "\"" + *n.carg + "\""})) ++c.rel_matched;
  }
  c.rel_gold = static_cast<long>(gold_rel.size());
  return c;
}

/// Concept-F and arc-F under a fixed mapping.
inline std::pair<double, double> mapping_breakdown(const EdsGraph& pred,
                                                   const EdsGraph& gold,
                                                   const AlignmentMapping& m) {
  BreakdownCounts c = mapping_breakdown_counts(pred, gold, m);
  return {count_f(c.inst_matched, c.inst_pred, c.inst_gold),
          count_f(c.rel_matched, c.rel_pred, c.rel_gold)};
}

struct GraphScore {
  std::string id;
  double precision = 0, recall = 0, f = 0;
  double concept_f = 0, arc_f = 0;
  long matched = 0, pred_triples = 0, gold_triples = 0;
  bool vacuous = false;
};

struct CorpusSmatch {
  double precision = 0, recall = 0, f = 0;
  double concept_f = 0, arc_f = 0;
  bool macro = false;
  std::vector<GraphScore> rows;

  std::string to_tsv() const {
    std::ostringstream out;
    out << "id\tP\tR\tF\tconcept_F\tarc_F\n";
    char buf[160];
    for (const GraphScore& r : rows) {
      std::snprintf(buf, sizeof(buf), "%s\t%.4f\t%.4f\t%.4f\t%.4f\t%.4f%s\n",
                    r.id.c_str(), r.precision, r.recall, r.f, r.concept_f, r.arc_f,
                    r.vacuous ? "\tvacuous" : "");
      out << buf;
    }
    std::snprintf(buf, sizeof(buf), "ALL\t%.4f\t%.4f\t%.4f\t%.4f\t%.4f\n", precision,
                  recall, f, concept_f, arc_f);
    out << buf;
    return out.str();
  }
};

/// Corpus-level Smatch over id-matched graph lists. Micro-average by default
/// (summed triple counts); macro averages per-graph scores.
inline CorpusSmatch corpus_smatch(
    const std::vector<std::pair<std::string, EdsGraph>>& pred,
    const std::vector<std::pair<std::string, EdsGraph>>& gold, SmatchConfig cfg = {},
    bool macro = false) {
  std::map<std::string, const EdsGraph*> by_id;
  for (const auto& [id, g] : pred) {
    if (by_id.count(id)) throw ValidationError("duplicate predicted graph id: " + id);
    by_id[id] = &g;
  }
  std::vector<std::string> missing;
  for (const auto& [id, g] : gold)
    if (!by_id.count(id)) missing.push_back(id);
  if (!missing.empty()) {
    std::string msg = "no prediction for:";
    for (const auto& id : missing) msg += " " + id;
    throw ValidationError(msg);
  }
  if (pred.size() != gold.size())
    throw ValidationError("predictions without matching gold ids");

  CorpusSmatch out;
  out.macro = macro;
  long matched = 0, pred_t = 0, gold_t = 0;
  BreakdownCounts counts;
  double sum_p = 0, sum_r = 0, sum_f = 0, sum_cf = 0, sum_af = 0;
  std::vector<std::pair<AlignmentMapping, BreakdownCounts>> per_graph(gold.size());
  parallel_for(gold.size(), cfg.jobs, [&](size_t i) {
    const EdsGraph& pred_graph = *by_id.at(gold[i].first);
    per_graph[i].first = smatch(pred_graph, gold[i].second, cfg);
    per_graph[i].second =
        mapping_breakdown_counts(pred_graph, gold[i].second, per_graph[i].first);
  });
  for (size_t i = 0; i < gold.size(); ++i) {
    const std::string& id = gold[i].first;
    const AlignmentMapping& m = per_graph[i].first;
    const BreakdownCounts& c = per_graph[i].second;
    double cf = count_f(c.inst_matched, c.inst_pred, c.inst_gold);
    double af = count_f(c.rel_matched, c.rel_pred, c.rel_gold);
    out.rows.push_back({id, m.precision, m.recall, m.f, cf, af, m.matched,
                        m.pred_triples, m.gold_triples, m.vacuous});
    matched += m.matched;
    pred_t += m.pred_triples;
    gold_t += m.gold_triples;
    counts.inst_matched += c.inst_matched;
    counts.inst_pred += c.inst_pred;
    counts.inst_gold += c.inst_gold;
    counts.rel_matched += c.rel_matched;
    counts.rel_pred += c.rel_pred;
    counts.rel_gold += c.rel_gold;
    sum_p += m.precision;
    sum_r += m.recall;
    sum_f += m.f;
    sum_cf += cf;
    sum_af += af;
  }
  size_t n = out.rows.size();
  if (macro && n > 0) {
    out.precision = sum_p / n;
    out.recall = sum_r / n;
    out.f = sum_f / n;
    out.concept_f = sum_cf / n;
    out.arc_f = sum_af / n;
  } else {
    AlignmentMapping agg;
    agg.matched = matched;
    agg.pred_triples = pred_t;
    agg.gold_triples = gold_t;
    agg.finalize();
    out.precision = agg.precision;
    out.recall = agg.recall;
    out.f = agg.f;
    out.concept_f = count_f(counts.inst_matched, counts.inst_pred, counts.inst_gold);
    out.arc_f = count_f(counts.rel_matched, counts.rel_pred, counts.rel_gold);
  }
  return out;
}

}  // namespace eds
