#pragma once

/// Stage 2: dependency identification between predicted concepts. Every
/// ordered node pair is scored by an MLP over the two concept
/// representations; decoding either thresholds at zero or additionally
/// enforces connectivity through a maximum spanning tree. Training uses a
/// structured hinge loss with a weighted Hamming cost, plus cross-entropy
/// heads for arc labels and the top node.

#include <algorithm>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "eds/align.hpp"
#include "eds/corpus.hpp"
#include "eds/encoder.hpp"
#include "eds/graph.hpp"
#include "eds/nn/autodiff.hpp"
#include "eds/tagger.hpp"

namespace eds {

struct HammingCost {
  double c_fp = 0.4;  // predicted but not gold
  double c_fn = 0.6;  // gold but missing
};

struct ArcConfig {
  int d_n = 50;         // concept embedding dim
  int hidden = 100;     // arc MLP hidden dim
  int top_hidden = 50;  // top-node MLP hidden dim
  HammingCost cost{};
};

struct LabeledArc {
  int src = 0;
  int tgt = 0;
  std::string label;

  bool operator<(const LabeledArc& o) const {
    return std::tie(src, tgt, label) < std::tie(o.src, o.tgt, o.label);
  }
  bool operator==(const LabeledArc& o) const {
    return src == o.src && tgt == o.tgt && label == o.label;
  }
};

/// Weighted Hamming distance between labeled arc sets:
/// c_fp per predicted-only arc plus c_fn per gold-only arc.
inline double hamming_delta(const std::set<LabeledArc>& gold,
                            const std::set<LabeledArc>& pred, HammingCost cost = {}) {
  long fp = 0, fn = 0;
  for (const LabeledArc& a : pred)
    if (!gold.count(a)) ++fp;
  for (const LabeledArc& a : gold)
    if (!pred.count(a)) ++fn;
  return cost.c_fp * fp + cost.c_fn * fn;
}

/// W2 · relu(W1 · x + b); returns a 1x1 value.
inline nn::Var mlp_score(nn::Tape& t, nn::Var w1, nn::Var b, nn::Var w2, nn::Var x) {
  return t.matmul(w2, t.relu(t.add(t.matmul(w1, x), b)));
}

/// Maximum-weight spanning tree over the undirected collapse of a directed
/// score matrix (weight(u,v) = max of the two directions), each chosen edge
/// oriented to its better direction. Ties break toward lower indices.
inline std::vector<std::pair<int, int>> max_spanning_tree(const nn::Mat& scores) {
  int n = static_cast<int>(scores.rows());
  struct Cand {
    double w;
    int u, v;
  };
  std::vector<Cand> cands;
  for (int u = 0; u < n; ++u)
    for (int v = u + 1; v < n; ++v)
      cands.push_back({std::max(scores(u, v), scores(v, u)), u, v});
  std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
    return std::tie(b.w, a.u, a.v) < std::tie(a.w, b.u, b.v);
  });

  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };

  std::vector<std::pair<int, int>> arcs;
  for (const Cand& c : cands) {
    int ru = find(c.u), rv = find(c.v);
    if (ru == rv) continue;
    parent[ru] = rv;
    if (scores(c.v, c.u) > scores(c.u, c.v))
      arcs.emplace_back(c.v, c.u);
    else
      arcs.emplace_back(c.u, c.v);
  }
  std::sort(arcs.begin(), arcs.end());
  return arcs;
}

/// Arc decoding. connected = false: exactly the arcs with positive score.
/// connected = true: arcs of the maximum spanning tree unioned with all
/// positive arcs, so the result covers every node.
inline std::set<std::pair<int, int>> decode_mscg(const nn::Mat& scores, bool connected) {
  int n = static_cast<int>(scores.rows());
  std::set<std::pair<int, int>> out;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && scores(i, j) > 0) out.insert({i, j});
  if (connected)
    for (const auto& arc : max_spanning_tree(scores)) out.insert(arc);
  return out;
}

struct ArcModel {
  EncoderConfig enc_cfg;
  ArcConfig arc_cfg;
  nn::ParamCollection params;
  Encoder encoder;
  Vocab concepts;                  // delexicalized predicate vocabulary
  std::vector<std::string> roles;  // sorted role vocabulary

  nn::Parameter* w1 = nullptr;      // hidden x 2(2h + d_n)
  nn::Parameter* b1 = nullptr;      // hidden x 1
  nn::Parameter* w2 = nullptr;      // 1 x hidden
  nn::Parameter* lab_w1 = nullptr;  // hidden x 2(2h + d_n)
  nn::Parameter* lab_b1 = nullptr;
  nn::Parameter* lab_w2 = nullptr;  // |roles| x hidden
  nn::Parameter* lab_b2 = nullptr;  // |roles| x 1
  nn::Parameter* top_w1 = nullptr;  // top_hidden x (2h + d_n)
  nn::Parameter* top_b1 = nullptr;
  nn::Parameter* top_w2 = nullptr;  // 1 x top_hidden

  ArcModel() = default;
  ArcModel(const ArcModel&) = delete;
  ArcModel& operator=(const ArcModel&) = delete;
  ArcModel(ArcModel&&) = default;
  ArcModel& operator=(ArcModel&&) = default;

  void bind_heads() {
    w1 = params.find("arc.w1");
    b1 = params.find("arc.b1");
    w2 = params.find("arc.w2");
    lab_w1 = params.find("arc.lab_w1");
    lab_b1 = params.find("arc.lab_b1");
    lab_w2 = params.find("arc.lab_w2");
    lab_b2 = params.find("arc.lab_b2");
    top_w1 = params.find("arc.top_w1");
    top_b1 = params.find("arc.top_b1");
    top_w2 = params.find("arc.top_w2");
    for (auto* p : {w1, b1, w2, lab_w1, lab_b1, lab_w2, lab_b2, top_w1, top_b1, top_w2})
      if (!p) throw Error("missing arc model parameter");
  }
};

/// Node indices of a graph in canonical order: (start, end, predicate, id).
inline std::vector<int> node_order(const EdsGraph& g) {
  std::vector<int> order(g.nodes.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const EdsNode& x = g.nodes[a];
    const EdsNode& y = g.nodes[b];
    return std::tie(x.anchor.start, x.anchor.end, x.predicate, x.id) <
           std::tie(y.anchor.start, y.anchor.end, y.predicate, y.id);
  });
  return order;
}

namespace detail {

/// Per-instance view of a graph for arc scoring: nodes in canonical order
/// with their aligned token and concept id, arcs as index pairs.
struct ArcView {
  std::vector<int> order;        // node index per position
  std::vector<int> tok;          // aligned token per position
  std::vector<int> concept_ids;  // concept embedding row per position
  std::set<std::pair<int, int>> arcs;
  std::map<std::pair<int, int>, std::string> arc_labels;
  int top = -1;
};

inline ArcView make_arc_view(const ArcModel& model, const Sentence& s,
                             const EdsGraph& g) {
  ArcView v;
  v.order = node_order(g);
  std::map<std::string, int> pos_of;
  Instance inst{s, g};
  auto align = align_nodes(inst);
  for (size_t p = 0; p < v.order.size(); ++p) {
    const EdsNode& node = g.nodes[v.order[p]];
    pos_of[node.id] = static_cast<int>(p);
    v.tok.push_back(align.at(node.id));
    std::string lemma;
    if (v.tok.back() >= 0 && v.tok.back() < static_cast<int>(s.tokens.size()))
      lemma = s.tokens[v.tok.back()].lemma;
    v.concept_ids.push_back(model.concepts.id(delexicalize(node.predicate, lemma)));
  }
  for (const EdsEdge& e : g.edges) {
    std::pair<int, int> arc{pos_of.at(e.source), pos_of.at(e.target)};
    v.arcs.insert(arc);
    v.arc_labels[arc] = e.role;
  }
  if (g.top) v.top = pos_of.at(*g.top);
  return v;
}

/// Concept representations c_i = r_tok(i) concat concept embedding.
inline std::vector<nn::Var> concept_reprs(nn::Tape& t, const ArcModel& model,
                                          const Sentence& s, const ArcView& v,
                                          const std::vector<nn::Mat>* ctx) {
  auto rs = model.encoder.encode_sentence(t, s, ctx);
  nn::Var emb = t.param(*model.params.find("arc.concept_emb"));
  std::vector<nn::Var> out;
  for (size_t p = 0; p < v.tok.size(); ++p)
    out.push_back(t.concat({rs[v.tok[p]], t.cols(emb, v.concept_ids[p], 1)}));
  return out;
}

inline nn::Var pair_input(nn::Tape& t, const std::vector<nn::Var>& c, int p, int a) {
  return t.concat({c[p], c[a]});
}

inline nn::Var arc_score_var(nn::Tape& t, const ArcModel& m, nn::Var pair) {
  return mlp_score(t, t.param(*m.w1), t.param(*m.b1), t.param(*m.w2), pair);
}

inline nn::Var label_logits_var(nn::Tape& t, const ArcModel& m, nn::Var pair) {
  return t.affine(t.param(*m.lab_w2),
                  t.relu(t.add(t.matmul(t.param(*m.lab_w1), pair), t.param(*m.lab_b1))),
                  t.param(*m.lab_b2));
}

inline nn::Var top_score_var(nn::Tape& t, const ArcModel& m, nn::Var ci) {
  return t.matmul(t.param(*m.top_w2),
                  t.relu(t.add(t.matmul(t.param(*m.top_w1), ci), t.param(*m.top_b1))));
}

/// Score matrix over node positions; the diagonal is left at zero and never
/// consulted by the decoders.
inline nn::Mat score_matrix(nn::Tape& t, const ArcModel& m,
                            const std::vector<nn::Var>& c,
                            std::map<std::pair<int, int>, nn::Var>* vars = nullptr) {
  int n = static_cast<int>(c.size());
  nn::Mat s = nn::Mat::Zero(n, n);
  for (int p = 0; p < n; ++p)
    for (int a = 0; a < n; ++a) {
      if (p == a) continue;
      nn::Var sc = arc_score_var(t, m, pair_input(t, c, p, a));
      s(p, a) = t.value(sc)(0, 0);
      if (vars) (*vars)[{p, a}] = sc;
    }
  return s;
}

}  // namespace detail

/// Unlabeled score matrix for the nodes of `g` in canonical order.
inline nn::Mat score_arcs(const ArcModel& model, const Sentence& s, const EdsGraph& g,
                          const ContextVectors* ctx = nullptr) {
  nn::Tape t;
  auto view = detail::make_arc_view(model, s, g);
  auto c = detail::concept_reprs(t, model, s, view, detail::ctx_for(ctx, s));
  return detail::score_matrix(t, model, c);
}

/// Role assignment for a set of arcs over node positions: per-arc argmax of
/// the label head, ties to the lowest label id.
inline std::map<std::pair<int, int>, std::string> label_arcs(
    const ArcModel& model, const Sentence& s, const EdsGraph& g,
    const std::set<std::pair<int, int>>& arcs, const ContextVectors* ctx = nullptr) {
  nn::Tape t;
  auto view = detail::make_arc_view(model, s, g);
  auto c = detail::concept_reprs(t, model, s, view, detail::ctx_for(ctx, s));
  std::map<std::pair<int, int>, std::string> out;
  for (const auto& [p, a] : arcs) {
    nn::Var logits = detail::label_logits_var(t, model, detail::pair_input(t, c, p, a));
    out[{p, a}] = model.roles.at(detail::argmax_lowest(t.value(logits)));
  }
  return out;
}

/// Full stage-2 prediction: takes a graph whose nodes are fixed (edges and
/// top ignored) and returns a copy with predicted edges and top.
inline EdsGraph predict_arcs(const ArcModel& model, const Sentence& s,
                             const EdsGraph& nodes, bool connected,
                             const ContextVectors* ctx = nullptr) {
  if (nodes.nodes.empty()) throw ValidationError("cannot predict arcs over no nodes");
  nn::Tape t;
  auto view = detail::make_arc_view(model, s, nodes);
  auto c = detail::concept_reprs(t, model, s, view, detail::ctx_for(ctx, s));
  nn::Mat scores = detail::score_matrix(t, model, c);
  auto arcs = decode_mscg(scores, connected);

  EdsGraph out;
  out.text = nodes.text;
  out.nodes = nodes.nodes;
  for (const auto& [p, a] : arcs) {
    nn::Var logits = detail::label_logits_var(t, model, detail::pair_input(t, c, p, a));
    out.edges.push_back({nodes.nodes[view.order[p]].id,
                         nodes.nodes[view.order[a]].id,
                         model.roles.at(detail::argmax_lowest(t.value(logits)))});
  }
  int best = 0;
  double best_score = 0;
  for (size_t p = 0; p < c.size(); ++p) {
    double sc = t.value(detail::top_score_var(t, model, c[p]))(0, 0);
    if (p == 0 || sc > best_score) {
      best = static_cast<int>(p);
      best_score = sc;
    }
  }
  out.top = nodes.nodes[view.order[best]].id;
  return out;
}

struct DepMetrics {
  double up = 0, ur = 0, uf = 0;
  double lp = 0, lr = 0, lf = 0;
  long gold = 0, pred = 0;
  long matched_unlabeled = 0, matched_labeled = 0;

  void finalize() {
    auto prf = [](long m, long p, long g, double& pr, double& rc, double& f) {
      pr = p > 0 ? static_cast<double>(m) / p : (g == 0 ? 1.0 : 0.0);
      rc = g > 0 ? static_cast<double>(m) / g : (p == 0 ? 1.0 : 0.0);
      f = (pr + rc) > 0 ? 2 * pr * rc / (pr + rc) : 0.0;
    };
    prf(matched_unlabeled, pred, gold, up, ur, uf);
    prf(matched_labeled, pred, gold, lp, lr, lf);
  }
};

/// Arc precision/recall/F between two graphs under a node correspondence
/// (predicted node id -> gold node id). Arcs whose endpoints have no
/// correspondent count as unmatched predictions.
inline DepMetrics dep_metrics(const EdsGraph& gold, const EdsGraph& pred,
                              const std::map<std::string, std::string>& pred_to_gold) {
  using Arc = std::tuple<std::string, std::string, std::string>;
  std::map<Arc, int> gold_lab, gold_unlab;
  for (const EdsEdge& e : gold.edges) {
    ++gold_lab[{e.source, e.target, e.role}];
    ++gold_unlab[{e.source, e.target, ""}];
  }
  DepMetrics m;
  m.gold = static_cast<long>(gold.edges.size());
  m.pred = static_cast<long>(pred.edges.size());
  for (const EdsEdge& e : pred.edges) {
    auto s = pred_to_gold.find(e.source);
    auto t = pred_to_gold.find(e.target);
    if (s == pred_to_gold.end() || t == pred_to_gold.end()) continue;
    auto& ul = gold_unlab[{s->second, t->second, ""}];
    if (ul > 0) {
      --ul;
      ++m.matched_unlabeled;
    }
    auto& l = gold_lab[{s->second, t->second, e.role}];
    if (l > 0) {
      --l;
      ++m.matched_labeled;
    }
  }
  m.finalize();
  return m;
}

/// Same-node-id correspondence, for predictions over gold concepts.
inline DepMetrics dep_metrics(const EdsGraph& gold, const EdsGraph& pred) {
  std::map<std::string, std::string> ident;
  for (const EdsNode& n : pred.nodes) ident[n.id] = n.id;
  return dep_metrics(gold, pred, ident);
}

inline ArcModel train_arcs(const std::vector<Instance>& train,
                           const std::vector<Instance>& dev, EncoderConfig enc_cfg,
                           ArcConfig arc_cfg, TrainConfig cfg,
                           const ContextVectors* ctx = nullptr) {
  if (train.empty()) throw ValidationError("empty training set");

  ArcModel model;
  model.enc_cfg = enc_cfg;
  model.arc_cfg = arc_cfg;

  std::vector<Sentence> train_sents;
  for (const Instance& inst : train) train_sents.push_back(inst.sentence);
  Vocab words, chars, pos_tags;
  build_vocabs(train_sents, words, chars, pos_tags);

  std::set<std::string> role_set;
  for (const Instance& inst : train) {
    for (const EdsEdge& e : inst.graph.edges) role_set.insert(e.role);
    auto align = align_nodes(inst);
    for (const EdsNode& n : inst.graph.nodes)
      model.concepts.add(
          delexicalize(n.predicate, inst.sentence.tokens[align.at(n.id)].lemma));
  }
  if (role_set.empty()) throw ValidationError("training graphs contain no edges");
  model.roles.assign(role_set.begin(), role_set.end());

  Rng rng = derived_rng(cfg.seed, 11);
  model.encoder =
      Encoder::create(model.params, enc_cfg, std::move(words), std::move(chars),
                      std::move(pos_tags), rng);
  int cdim = enc_cfg.output_dim() + arc_cfg.d_n;
  model.params.add("arc.concept_emb", arc_cfg.d_n, model.concepts.size(), rng);
  model.params.add("arc.w1", arc_cfg.hidden, 2 * cdim, rng);
  model.params.add_zero("arc.b1", arc_cfg.hidden, 1);
  model.params.add("arc.w2", 1, arc_cfg.hidden, rng);
  model.params.add("arc.lab_w1", arc_cfg.hidden, 2 * cdim, rng);
  model.params.add_zero("arc.lab_b1", arc_cfg.hidden, 1);
  model.params.add("arc.lab_w2", static_cast<int>(model.roles.size()), arc_cfg.hidden,
                   rng);
  model.params.add_zero("arc.lab_b2", static_cast<int>(model.roles.size()), 1);
  model.params.add("arc.top_w1", arc_cfg.top_hidden, cdim, rng);
  model.params.add_zero("arc.top_b1", arc_cfg.top_hidden, 1);
  model.params.add("arc.top_w2", 1, arc_cfg.top_hidden, rng);
  model.bind_heads();

  std::map<std::string, int> role_id;
  for (size_t i = 0; i < model.roles.size(); ++i)
    role_id[model.roles[i]] = static_cast<int>(i);

  std::vector<detail::ArcView> views;
  for (const Instance& inst : train)
    views.push_back(detail::make_arc_view(model, inst.sentence, inst.graph));
  std::vector<detail::ArcView> dev_views;
  for (const Instance& inst : dev)
    dev_views.push_back(detail::make_arc_view(model, inst.sentence, inst.graph));

  nn::Optimizer opt(cfg.optimizer);
  Rng order_rng = derived_rng(cfg.seed, 12);
  std::vector<size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  auto eval_labeled_f = [&](const std::vector<Instance>& insts,
                            const std::vector<detail::ArcView>& vws) {
    DepMetrics m;
    for (size_t i = 0; i < insts.size(); ++i) {
      nn::Tape t;
      const detail::ArcView& v = vws[i];
      auto c = detail::concept_reprs(t, model, insts[i].sentence, v,
                                     detail::ctx_for(ctx, insts[i].sentence));
      nn::Mat s = detail::score_matrix(t, model, c);
      auto arcs = decode_mscg(s, false);
      m.gold += static_cast<long>(v.arcs.size());
      m.pred += static_cast<long>(arcs.size());
      for (const auto& arc : arcs) {
        if (!v.arcs.count(arc)) continue;
        ++m.matched_unlabeled;
        nn::Var logits = detail::label_logits_var(
            t, model, detail::pair_input(t, c, arc.first, arc.second));
        if (model.roles.at(detail::argmax_lowest(t.value(logits))) ==
            v.arc_labels.at(arc))
          ++m.matched_labeled;
      }
    }
    m.finalize();
    return m.lf;
  };

  double best_f = -1;
  std::map<std::string, nn::Mat> best;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), order_rng);
    double epoch_loss = 0;
    size_t done = 0;
    while (done < order.size()) {
      size_t take = std::min<size_t>(cfg.batch, order.size() - done);
      model.params.zero_grads();
      for (size_t b = 0; b < take; ++b) {
        size_t idx = order[done + b];
        const Instance& inst = train[idx];
        const detail::ArcView& v = views[idx];
        nn::Tape t;
        auto c = detail::concept_reprs(t, model, inst.sentence, v,
                                       detail::ctx_for(ctx, inst.sentence));
        std::map<std::pair<int, int>, nn::Var> score_vars;
        nn::Mat s = detail::score_matrix(t, model, c, &score_vars);

        nn::Mat aug = s;
        int n = static_cast<int>(c.size());
        for (int p = 0; p < n; ++p)
          for (int a = 0; a < n; ++a) {
            if (p == a) continue;
            aug(p, a) += v.arcs.count({p, a}) ? -arc_cfg.cost.c_fn : arc_cfg.cost.c_fp;
          }
        auto pred = decode_mscg(aug, false);

        std::vector<nn::Var> losses;
        if (pred != v.arcs) {
          std::set<LabeledArc> gold_u, pred_u;
          for (const auto& [p, a] : v.arcs) gold_u.insert({p, a, ""});
          for (const auto& [p, a] : pred) pred_u.insert({p, a, ""});
          double delta = hamming_delta(gold_u, pred_u, arc_cfg.cost);
          std::vector<nn::Var> terms;
          terms.push_back(t.input(nn::Mat::Constant(1, 1, delta)));
          for (const auto& arc : pred) terms.push_back(score_vars.at(arc));
          for (const auto& arc : v.arcs)
            terms.push_back(t.scale(score_vars.at(arc), -1.0));
          losses.push_back(t.relu(t.sum(terms)));
        }
        for (const auto& [arc, role] : v.arc_labels) {
          nn::Var logits = detail::label_logits_var(
              t, model, detail::pair_input(t, c, arc.first, arc.second));
          losses.push_back(t.neg_log_softmax_pick(logits, role_id.at(role)));
        }
        if (v.top >= 0 && n > 0) {
          std::vector<nn::Var> tops;
          for (int p = 0; p < n; ++p)
            tops.push_back(detail::top_score_var(t, model, c[p]));
          losses.push_back(t.neg_log_softmax_pick(t.concat(tops), v.top));
        }
        if (!losses.empty()) {
          nn::Var loss = t.sum(losses);
          epoch_loss += t.scalar(loss);
          t.backward(loss);
        }
      }
      opt.step(model.params);
      done += take;
    }

    double f = dev.empty() ? eval_labeled_f(train, views) : eval_labeled_f(dev, dev_views);
    if (f > best_f) {
      best_f = f;
      best = model.params.snapshot();
    }
    if (cfg.verbose)
      std::fprintf(stderr, "arcs epoch %d loss %.4f dev labeled F %.4f\n", epoch + 1,
                   epoch_loss, f);
  }
  if (!best.empty()) model.params.restore(best);
  return model;
}

}  // namespace eds
