// Acceptance gate: ten end-to-end properties of the toolkit, one pass/fail
// line each. Exits nonzero if any criterion fails.
#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <map>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "eds/align.hpp"
#include "eds/arc.hpp"
#include "eds/corpus.hpp"
#include "eds/encoder.hpp"
#include "eds/graph.hpp"
#include "eds/model_io.hpp"
#include "eds/pheno.hpp"
#include "eds/pipeline.hpp"
#include "eds/smatch.hpp"
#include "eds/tagger.hpp"
#include "eds/util.hpp"
#include "support/gradcheck.hpp"
#include "support/helpers.hpp"
#include "support/synthetic.hpp"

using namespace eds;

namespace {

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// --------------------------------------------------------------------------
// 1. Hill-climbing smatch against the exhaustive oracle on small graphs.
// --------------------------------------------------------------------------
std::string crit1() {
  auto t0 = std::chrono::steady_clock::now();
  Rng rng(2024);
  int equal = 0;
  const int pairs = 200;
  for (int i = 0; i < pairs; ++i) {
    EdsGraph a = testsupport::random_graph(rng, 6, 8);
    EdsGraph b = testsupport::random_graph(rng, 6, 8);
    SmatchConfig cfg;
    cfg.restarts = 20;
    cfg.seed = 7 + i;
    double hill = smatch(a, b, cfg).f;
    double oracle = smatch_oracle(a, b).f;
    if (hill > oracle + 1e-9)
      return fmt("pair %d: hill climbing %f exceeds oracle %f", i, hill, oracle);
    if (std::abs(hill - oracle) < 1e-9) ++equal;
  }
  double secs = seconds_since(t0);
  if (equal < 198) return fmt("only %d/%d pairs matched the oracle", equal, pairs);
  if (secs >= 10.0) return fmt("took %.1fs, budget 10s", secs);
  return "";
}

// --------------------------------------------------------------------------
// 2. Two-node fixture with one wrong label scores F = 0.75 exactly.
// --------------------------------------------------------------------------
std::string crit2() {
  EdsGraph gold;
  gold.nodes = {{"a", "_cat_n_1", {0, 3}, {}}, {"b", "_sleep_v_1", {4, 10}, {}}};
  gold.edges = {{"b", "a", "ARG1"}};
  gold.top = "b";
  EdsGraph pred = gold;
  pred.nodes[0].predicate = "_dog_n_1";

  double oracle = smatch_oracle(pred, gold).f;
  if (oracle != 0.75) return fmt("oracle F %f, expected 0.75", oracle);
  double hill = smatch(pred, gold).f;
  if (hill != 0.75) return fmt("hill-climbing F %f, expected 0.75", hill);
  return "";
}

// --------------------------------------------------------------------------
// 3. Finite-difference gradient checks, component by component.
// --------------------------------------------------------------------------
std::string crit3() {
  auto t0 = std::chrono::steady_clock::now();
  const int seeds = 10;
  const double tol = 1e-4;

  EncoderConfig ec;
  ec.d_w = 4;
  ec.d_c = 2;
  ec.d_t = 2;
  ec.d_e = 2;
  ec.hidden = 3;
  ec.layers = 1;
  ec.k = 0;

  std::vector<Sentence> train;
  for (int i = 0; i < 3; ++i)
    train.push_back(testsupport::make_sentence("t" + std::to_string(i), "aa bb cc"));
  Vocab words, chars, pos;
  build_vocabs(train, words, chars, pos);

  auto check_encoder = [&](const char* name, const Sentence& s) -> std::string {
    for (int seed = 0; seed < seeds; ++seed) {
      nn::ParamCollection pc;
      Rng rng(100 + seed);
      Encoder enc = Encoder::create(pc, ec, words, chars, pos, rng);
      auto forward = [&](nn::Tape& t) {
        return t.sum_all(t.concat(enc.encode_sentence(t, s, nullptr)));
      };
      pc.zero_grads();
      {
        nn::Tape t;
        t.backward(forward(t));
      }
      auto value = [&]() {
        nn::Tape t;
        return t.scalar(forward(t));
      };
      double err = testsupport::max_gradient_error(pc, value);
      if (!(err < tol)) return fmt("%s seed %d: error %g", name, seed, err);
    }
    return "";
  };

  // Unseen forms route every token through the char composer.
  std::string r = check_encoder("char composer", testsupport::make_sentence("x", "zz qq"));
  if (!r.empty()) return r;
  // Seen forms take the lookup path; the recurrent layers do the work.
  r = check_encoder("recurrent encoder", testsupport::make_sentence("x", "aa cc bb"));
  if (!r.empty()) return r;

  auto corpus = testsupport::synthetic_corpus();
  std::vector<Instance> insts(corpus.begin(), corpus.begin() + 2);

  for (int seed = 0; seed < seeds; ++seed) {
    TrainConfig cfg;
    cfg.epochs = 0;
    cfg.seed = 40 + seed;
    TaggerModel model = train_tagger(insts, {}, ec, cfg);
    const Sentence& s = insts[0].sentence;
    auto gold = compose_tags(insts[0], align_nodes(insts[0]));
    auto forward = [&](nn::Tape& t) {
      auto scores = detail::tag_scores(t, model, s, nullptr);
      std::vector<nn::Var> losses;
      for (size_t i = 0; i < scores.size(); ++i)
        losses.push_back(
            t.neg_log_softmax_pick(scores[i], model.tags.id_or_empty(gold[i].str())));
      return t.sum(losses);
    };
    model.params.zero_grads();
    {
      nn::Tape t;
      t.backward(forward(t));
    }
    auto value = [&]() {
      nn::Tape t;
      return t.scalar(forward(t));
    };
    double err = testsupport::max_gradient_error(model.params, value);
    if (!(err < tol)) return fmt("tagger softmax seed %d: error %g", seed, err);
  }

  ArcConfig ac;
  ac.d_n = 3;
  ac.hidden = 4;
  ac.top_hidden = 3;
  for (int part = 0; part < 2; ++part) {
    const char* name = part == 0 ? "arc scorer" : "label scorer";
    for (int seed = 0; seed < seeds; ++seed) {
      TrainConfig cfg;
      cfg.epochs = 0;
      cfg.seed = 60 + seed;
      ArcModel model = train_arcs(insts, {}, ec, ac, cfg);
      auto view = detail::make_arc_view(model, insts[0].sentence, insts[0].graph);
      auto forward = [&](nn::Tape& t) {
        auto c = detail::concept_reprs(t, model, insts[0].sentence, view, nullptr);
        std::vector<nn::Var> terms;
        if (part == 0) {
          for (size_t p = 0; p < c.size(); ++p)
            for (size_t a = 0; a < c.size(); ++a) {
              if (p == a) continue;
              terms.push_back(detail::arc_score_var(
                  t, model,
                  detail::pair_input(t, c, static_cast<int>(p), static_cast<int>(a))));
            }
        } else {
          for (const auto& [arc, role] : view.arc_labels) {
            nn::Var logits = detail::label_logits_var(
                t, model, detail::pair_input(t, c, arc.first, arc.second));
            terms.push_back(t.neg_log_softmax_pick(logits, 0));
          }
        }
        return t.sum(terms);
      };
      model.params.zero_grads();
      {
        nn::Tape t;
        t.backward(forward(t));
      }
      auto value = [&]() {
        nn::Tape t;
        return t.scalar(forward(t));
      };
      double err = testsupport::max_gradient_error(model.params, value);
      if (!(err < tol)) return fmt("%s seed %d: error %g", name, seed, err);
    }
  }

  double secs = seconds_since(t0);
  if (secs >= 30.0) return fmt("took %.1fs, budget 30s", secs);
  return "";
}

// --------------------------------------------------------------------------
// 4. Decoder properties on random score matrices.
// --------------------------------------------------------------------------
double best_tree_weight(const nn::Mat& s) {
  int n = static_cast<int>(s.rows());
  std::vector<std::pair<int, int>> edges;
  for (int u = 0; u < n; ++u)
    for (int v = u + 1; v < n; ++v) edges.emplace_back(u, v);
  double best = -1e18;
  int m = static_cast<int>(edges.size());
  for (int mask = 0; mask < (1 << m); ++mask) {
    if (__builtin_popcount(mask) != n - 1) continue;
    std::vector<std::vector<int>> adj(n);
    double w = 0;
    for (int e = 0; e < m; ++e)
      if (mask & (1 << e)) {
        auto [u, v] = edges[e];
        adj[u].push_back(v);
        adj[v].push_back(u);
        w += std::max(s(u, v), s(v, u));
      }
    std::vector<bool> seen(n, false);
    std::vector<int> stack{0};
    seen[0] = true;
    int count = 1;
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      for (int v : adj[u])
        if (!seen[v]) {
          seen[v] = true;
          ++count;
          stack.push_back(v);
        }
    }
    if (count == n) best = std::max(best, w);
  }
  return best;
}

bool arcs_connected(int n, const std::set<std::pair<int, int>>& arcs) {
  if (n <= 1) return true;
  std::vector<std::vector<int>> adj(n);
  for (const auto& [u, v] : arcs) {
    adj[u].push_back(v);
    adj[v].push_back(u);
  }
  std::vector<bool> seen(n, false);
  std::vector<int> stack{0};
  seen[0] = true;
  int count = 1;
  while (!stack.empty()) {
    int u = stack.back();
    stack.pop_back();
    for (int v : adj[u])
      if (!seen[v]) {
        seen[v] = true;
        ++count;
        stack.push_back(v);
      }
  }
  return count == n;
}

std::string crit4() {
  Rng rng(99);
  std::uniform_int_distribution<int> nd(1, 6);
  std::uniform_real_distribution<double> sd(-1.0, 1.0);
  for (int it = 0; it < 500; ++it) {
    int n = nd(rng);
    nn::Mat s(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) s(i, j) = sd(rng);

    std::set<std::pair<int, int>> positive;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j && s(i, j) > 0) positive.insert({i, j});

    auto loose = decode_mscg(s, false);
    if (loose != positive) return fmt("iteration %d: loose decode != positive arcs", it);

    auto tight = decode_mscg(s, true);
    if (!std::includes(tight.begin(), tight.end(), positive.begin(), positive.end()))
      return fmt("iteration %d: connected decode dropped a positive arc", it);
    if (!arcs_connected(n, tight))
      return fmt("iteration %d: connected decode is disconnected", it);

    if (n >= 2 && n <= 4) {
      auto tree = max_spanning_tree(s);
      double w = 0;
      for (const auto& [u, v] : tree) w += std::max(s(u, v), s(v, u));
      double best = best_tree_weight(s);
      if (std::abs(w - best) > 1e-9)
        return fmt("iteration %d: tree weight %f, brute force %f", it, w, best);
    }
  }
  return "";
}

// --------------------------------------------------------------------------
// 5. End-to-end overfit on the shipped synthetic corpus.
// --------------------------------------------------------------------------
std::string crit5() {
  auto t0 = std::chrono::steady_clock::now();
  auto insts = load_corpus(testsupport::data_dir() + "/synthetic/train.sent",
                           testsupport::data_dir() + "/synthetic/train.eds");

  PipelineConfig cfg;
  cfg.encoder.d_w = 24;
  cfg.encoder.d_c = 8;
  cfg.encoder.d_t = 8;
  cfg.encoder.d_e = 2;
  cfg.encoder.hidden = 32;
  cfg.encoder.layers = 1;
  cfg.arcs.d_n = 24;
  cfg.arcs.hidden = 32;
  cfg.arcs.top_hidden = 16;
  cfg.training.epochs = 30;  // within the 50-epoch budget
  cfg.training.batch = 8;
  cfg.training.seed = 1;
  Pipeline pipe = train_pipeline(insts, insts, cfg);

  std::vector<Sentence> sentences;
  std::vector<std::pair<std::string, EdsGraph>> gold;
  for (const Instance& inst : insts) {
    sentences.push_back(inst.sentence);
    gold.emplace_back(inst.sentence.id, inst.graph);
  }
  auto pred = parse_corpus(pipe, sentences);
  SmatchConfig sc;
  sc.restarts = 5;
  sc.seed = 1;
  double f = corpus_smatch(pred, gold, sc).f;
  double secs = seconds_since(t0);
  if (f < 0.98) return fmt("smatch F %.4f after 30 epochs, need 0.98", f);
  if (secs >= 300.0) return fmt("took %.1fs, budget 300s", secs);
  return "";
}

// --------------------------------------------------------------------------
// 6. Round trips: text format, delexicalization, corpus loader.
// --------------------------------------------------------------------------
std::string crit6() {
  Rng rng(501);
  for (int i = 0; i < 1000; ++i) {
    EdsGraph g = testsupport::random_graph(rng, 8, 12);
    std::string text = serialize_eds(g);
    EdsGraph back = parse_eds(text);
    if (serialize_eds(back) != text)
      return fmt("graph %d: serialization not idempotent", i);

    auto node_key = [](const EdsNode& n) {
      return std::tuple(n.id, n.predicate, n.anchor.start, n.anchor.end,
                        n.carg.value_or(""));
    };
    auto edge_key = [](const EdsEdge& e) { return std::tuple(e.source, e.target, e.role); };
    std::multiset<std::tuple<std::string, std::string, int, int, std::string>> n1, n2;
    for (const EdsNode& n : g.nodes) n1.insert(node_key(n));
    for (const EdsNode& n : back.nodes) n2.insert(node_key(n));
    std::multiset<std::tuple<std::string, std::string, std::string>> e1, e2;
    for (const EdsEdge& e : g.edges) e1.insert(edge_key(e));
    for (const EdsEdge& e : back.edges) e2.insert(edge_key(e));
    if (n1 != n2 || e1 != e2 || back.top != g.top)
      return fmt("graph %d changed across serialize/parse", i);
  }

  auto insts = load_corpus(testsupport::data_dir() + "/synthetic/train.sent",
                           testsupport::data_dir() + "/synthetic/train.eds");
  auto rep = alignment_roundtrip_report(insts);
  if (rep.ok != rep.total)
    return fmt("delexicalize round trip: %d/%d sentences", rep.ok, rep.total);

  std::string sent_path = testsupport::data_dir() + "/synthetic/train.sent";
  std::string eds_path = testsupport::data_dir() + "/synthetic/train.eds";
  if (format_sentences(load_sentences(sent_path)) != read_file(sent_path))
    return "sentence file not byte-identical after load/format";
  if (format_graphs(load_graphs(eds_path)) != read_file(eds_path))
    return "graph file not byte-identical after load/format";
  return "";
}

// --------------------------------------------------------------------------
// 7. Tag, concept and dependency metrics against hand-computed values.
// --------------------------------------------------------------------------
std::string crit7() {
  auto T = [](std::vector<std::string> parts) { return ConceptTag::of(std::move(parts)); };
  ConceptTag none{};
  std::vector<std::vector<ConceptTag>> gold_tags = {
      {T({"A"}), none, T({"B"})},
      {T({"A", "B"}), none},
      {T({"C"}), T({"D"})},
      {T({"A", "A"})},
      {T({"A", "A"})},
      {T({"B"}), none},
      {T({"E"}), T({"A"})},
      {none},
      {T({"B"}), T({"C", "D"})},
      {T({"A"}), none},
  };
  std::vector<std::vector<ConceptTag>> pred_tags = {
      {T({"A"}), none, T({"C"})},
      {T({"A"}), T({"D"})},
      {none, T({"D"})},
      {T({"A", "A"})},
      {T({"A"})},
      {T({"B"}), none},
      {T({"B", "E"}), T({"A"})},
      {none},
      {T({"E"}), T({"C", "D"})},
      {none, T({"A"})},
  };
  TagMetrics tm = tag_metrics(gold_tags, pred_tags);
  if (tm.tokens != 18 || tm.gold_concepts != 17 || tm.pred_concepts != 16 ||
      tm.matched_concepts != 11)
    return fmt("tag counts %ld/%ld/%ld/%ld, expected 18/17/16/11", tm.tokens,
               tm.gold_concepts, tm.pred_concepts, tm.matched_concepts);
  double ep = 11.0 / 16, er = 11.0 / 17;
  double ef = 2 * ep * er / (ep + er);
  if (tm.tag_accuracy != 0.5) return fmt("tag accuracy %f, expected 0.5", tm.tag_accuracy);
  if (tm.precision != ep || tm.recall != er || tm.f1 != ef)
    return fmt("concept P/R/F %f/%f/%f, expected %f/%f/%f", tm.precision, tm.recall,
               tm.f1, ep, er, ef);

  auto G = [](std::vector<std::string> ids,
              std::vector<std::array<std::string, 3>> edges) {
    EdsGraph g;
    for (auto& id : ids) {
      EdsNode n;
      n.id = id;
      n.predicate = "_" + id + "_n_1";
      n.anchor = {0, 1};
      g.nodes.push_back(n);
    }
    for (auto& e : edges) g.edges.push_back({e[0], e[1], e[2]});
    return g;
  };
  std::vector<std::pair<EdsGraph, EdsGraph>> pairs = {
      {G({"a", "b", "c", "d", "e"},
         {{"a", "b", "ARG1"},
          {"a", "c", "ARG2"},
          {"b", "c", "ARG1"},
          {"d", "c", "BV"},
          {"c", "e", "ARG1"},
          {"a", "b", "ARG2"}}),
       G({"a", "b", "c", "d", "f"},
         {{"a", "b", "ARG1"},
          {"a", "b", "ARG3"},
          {"b", "c", "ARG2"},
          {"d", "c", "BV"},
          {"c", "f", "ARG1"}})},
      {G({"x", "y"}, {{"x", "y", "R"}}), G({"x", "y"}, {{"x", "y", "R"}})},
      {G({"x", "y", "z"}, {{"x", "y", "A"}, {"y", "z", "B"}}), G({"x", "y", "z"}, {})},
      {G({"x", "y"}, {}), G({"x", "y"}, {{"x", "y", "A"}})},
      {G({"x", "y", "z"}, {{"x", "y", "A"}, {"y", "z", "B"}}),
       G({"x", "y", "z"}, {{"x", "y", "B"}, {"y", "z", "A"}})},
      {G({"x", "y"}, {{"x", "y", "A"}}), G({"x", "y"}, {{"y", "x", "A"}})},
      {G({"x", "y", "z", "w"}, {{"x", "y", "A"}, {"y", "z", "B"}, {"z", "w", "C"}}),
       G({"x", "y", "z", "w"}, {{"x", "y", "A"}, {"y", "z", "B"}, {"z", "w", "C"}})},
      {G({"x", "y"}, {{"x", "y", "A"}}),
       G({"x", "y", "w"}, {{"x", "y", "A"}, {"x", "w", "B"}})},
      {G({"x", "y"}, {{"x", "y", "A"}, {"x", "y", "B"}}),
       G({"x", "y"}, {{"x", "y", "A"}, {"x", "y", "A"}})},
      {G({"x"}, {}), G({"x"}, {})},
  };

  DepMetrics first = dep_metrics(pairs[0].first, pairs[0].second);
  if (first.gold != 6 || first.pred != 5 || first.matched_unlabeled != 4 ||
      first.matched_labeled != 2)
    return fmt("sentence 1 dep counts %ld/%ld/%ld/%ld, expected 6/5/4/2", first.gold,
               first.pred, first.matched_unlabeled, first.matched_labeled);
  double up = 4.0 / 5, ur = 4.0 / 6, uf = 2 * up * ur / (up + ur);
  double lp = 2.0 / 5, lr = 2.0 / 6, lf = 2 * lp * lr / (lp + lr);
  if (first.up != up || first.ur != ur || first.uf != uf || first.lp != lp ||
      first.lr != lr || first.lf != lf)
    return "sentence 1 dep ratios off";

  DepMetrics agg;
  for (const auto& [g, p] : pairs) {
    DepMetrics m = dep_metrics(g, p);
    agg.gold += m.gold;
    agg.pred += m.pred;
    agg.matched_unlabeled += m.matched_unlabeled;
    agg.matched_labeled += m.matched_labeled;
  }
  agg.finalize();
  if (agg.gold != 18 || agg.pred != 17 || agg.matched_unlabeled != 13 ||
      agg.matched_labeled != 8)
    return fmt("aggregate dep counts %ld/%ld/%ld/%ld, expected 18/17/13/8", agg.gold,
               agg.pred, agg.matched_unlabeled, agg.matched_labeled);
  up = 13.0 / 17;
  ur = 13.0 / 18;
  uf = 2 * up * ur / (up + ur);
  lp = 8.0 / 17;
  lr = 8.0 / 18;
  lf = 2 * lp * lr / (lp + lr);
  if (agg.up != up || agg.ur != ur || agg.uf != uf || agg.lp != lp || agg.lr != lr ||
      agg.lf != lf)
    return "aggregate dep ratios off";
  return "";
}

// --------------------------------------------------------------------------
// 8. Construction suite: gold self-consistency and known degraded recalls.
// --------------------------------------------------------------------------
std::string crit8() {
  std::string base = testsupport::data_dir() + "/pheno";
  auto sentences = load_sentences(base + "/pheno.sent");
  auto gold = load_pheno_gold(base + "/pheno_gold.tsv");
  std::map<std::string, std::vector<std::pair<std::string, EdsGraph>>> systems;
  systems["gold"] = load_graphs(base + "/pheno.eds");
  systems["corrupt"] = load_graphs(base + "/pheno_corrupt.eds");

  PhenoReport report = pheno_score(gold, sentences, systems);
  auto clean = pheno_family_recall(report, "gold");
  if (clean.size() != pheno_families().size())
    return fmt("%zu families reported, expected %zu", clean.size(),
               pheno_families().size());
  for (const auto& [family, recall] : clean)
    if (recall != 1.0) return fmt("gold recall for %s is %f", family.c_str(), recall);

  std::map<std::string, double> expected = {
      {"comp", 0.5},     {"as", 2.0 / 3},     {"ditr", 2.0 / 3}, {"causemo", 0.75},
      {"way", 2.0 / 3},  {"passive", 0.5},    {"vpart", 0.5},    {"itexpl", 0.5},
      {"ned", 0.8},      {"argadj", 2.0 / 3}, {"barerel", 0.5},  {"tough", 0.5},
      {"rnr", 0.75},     {"absol", 0.5},      {"vger", 0.5},     {"control", 0.5},
  };
  auto degraded = pheno_family_recall(report, "corrupt");
  for (const auto& [family, recall] : expected) {
    auto it = degraded.find(family);
    if (it == degraded.end()) return fmt("no corrupt recall for %s", family.c_str());
    if (it->second != recall)
      return fmt("corrupt recall for %s is %f, expected %f", family.c_str(), it->second,
                 recall);
  }
  return "";
}

// --------------------------------------------------------------------------
// 9. Structured hinge loss around cost-augmented decoding.
// --------------------------------------------------------------------------
std::string crit9() {
  Rng rng(321);
  HammingCost cost;
  auto arc_sum = [](const nn::Mat& s, const std::set<std::pair<int, int>>& arcs) {
    double v = 0;
    for (const auto& [p, a] : arcs) v += s(p, a);
    return v;
  };
  auto labeled = [](const std::set<std::pair<int, int>>& arcs) {
    std::set<LabeledArc> out;
    for (const auto& [p, a] : arcs) out.insert({p, a, ""});
    return out;
  };
  auto hinge = [&](const nn::Mat& s, const std::set<std::pair<int, int>>& gold,
                   std::set<std::pair<int, int>>& pred) {
    nn::Mat aug = s;
    int n = static_cast<int>(s.rows());
    for (int p = 0; p < n; ++p)
      for (int a = 0; a < n; ++a) {
        if (p == a) continue;
        aug(p, a) += gold.count({p, a}) ? -cost.c_fn : cost.c_fp;
      }
    pred = decode_mscg(aug, false);
    if (pred == gold) return 0.0;
    double delta = hamming_delta(labeled(gold), labeled(pred), cost);
    return std::max(0.0, delta + arc_sum(s, pred) - arc_sum(s, gold));
  };

  std::uniform_int_distribution<int> nd(2, 5);
  std::uniform_real_distribution<double> sd(-1.0, 1.0);
  std::uniform_real_distribution<double> coin(0.0, 1.0);

  // Separable examples: gold arcs strongly positive, the rest strongly
  // negative, so augmented decoding must return the gold set with zero loss.
  for (int it = 0; it < 50; ++it) {
    int n = nd(rng);
    std::set<std::pair<int, int>> gold;
    nn::Mat s(n, n);
    for (int p = 0; p < n; ++p)
      for (int a = 0; a < n; ++a) {
        if (p != a && coin(rng) < 0.4) gold.insert({p, a});
        s(p, a) = -2.0;
      }
    for (const auto& [p, a] : gold) s(p, a) = 2.0;
    std::set<std::pair<int, int>> pred;
    double loss = hinge(s, gold, pred);
    if (pred != gold) return fmt("separable example %d not recovered", it);
    if (loss != 0.0) return fmt("separable example %d: loss %f, expected 0", it, loss);
  }

  // Random examples: the loss upper-bounds delta minus margin for every
  // alternative arc set, the decoded one included.
  for (int it = 0; it < 100; ++it) {
    int n = nd(rng);
    std::set<std::pair<int, int>> gold;
    nn::Mat s(n, n);
    for (int p = 0; p < n; ++p)
      for (int a = 0; a < n; ++a) {
        s(p, a) = sd(rng);
        if (p != a && coin(rng) < 0.3) gold.insert({p, a});
      }
    std::set<std::pair<int, int>> pred;
    double loss = hinge(s, gold, pred);
    if (pred == gold && loss != 0.0)
      return fmt("example %d: gold decode but loss %f", it, loss);

    auto bound = [&](const std::set<std::pair<int, int>>& alt) {
      return hamming_delta(labeled(gold), labeled(alt), cost) + arc_sum(s, alt) -
             arc_sum(s, gold);
    };
    if (loss + 1e-9 < bound(pred))
      return fmt("example %d: loss below the decoded alternative's bound", it);
    for (int k = 0; k < 20; ++k) {
      std::set<std::pair<int, int>> alt;
      for (int p = 0; p < n; ++p)
        for (int a = 0; a < n; ++a)
          if (p != a && coin(rng) < 0.3) alt.insert({p, a});
      if (loss + 1e-9 < bound(alt))
        return fmt("example %d: loss below a sampled alternative's bound", it);
    }
  }
  return "";
}

// --------------------------------------------------------------------------
// 10. Determinism of train, parse and eval under a fixed seed.
// --------------------------------------------------------------------------
std::string crit10() {
  auto insts = load_corpus(testsupport::data_dir() + "/synthetic/train.sent",
                           testsupport::data_dir() + "/synthetic/train.eds");
  insts.resize(16);

  auto run_once = [&]() {
    PipelineConfig cfg;
    cfg.encoder.d_w = 8;
    cfg.encoder.d_c = 4;
    cfg.encoder.d_t = 4;
    cfg.encoder.d_e = 2;
    cfg.encoder.hidden = 8;
    cfg.encoder.layers = 1;
    cfg.arcs.d_n = 6;
    cfg.arcs.hidden = 8;
    cfg.arcs.top_hidden = 4;
    cfg.training.epochs = 3;
    cfg.training.batch = 8;
    cfg.training.seed = 11;
    Pipeline pipe = train_pipeline(insts, insts, cfg);

    std::vector<Sentence> sentences;
    std::vector<std::pair<std::string, EdsGraph>> gold;
    for (const Instance& inst : insts) {
      sentences.push_back(inst.sentence);
      gold.emplace_back(inst.sentence.id, inst.graph);
    }
    auto pred = parse_corpus(pipe, sentences);
    SmatchConfig sc;
    sc.restarts = 5;
    sc.seed = 3;
    return std::tuple<std::string, std::string, std::string>(
        serialize_pipeline(pipe), format_graphs(pred),
        corpus_smatch(pred, gold, sc).to_tsv());
  };

  auto [model1, parse1, eval1] = run_once();
  auto [model2, parse2, eval2] = run_once();
  if (model1 != model2) return "model bytes differ between runs";
  if (parse1 != parse2) return "parse output differs between runs";
  if (eval1 != eval2) return "eval report differs between runs";
  return "";
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::string (*run)();
  };
  const Criterion criteria[] = {
      {"smatch matches the exhaustive oracle", crit1},
      {"wrong-label fixture scores 0.75", crit2},
      {"gradients match finite differences", crit3},
      {"decoder covers positives and connects", crit4},
      {"training overfits the synthetic corpus", crit5},
      {"formats and alignment round-trip", crit6},
      {"metrics match hand computations", crit7},
      {"construction recalls match fixtures", crit8},
      {"hinge loss respects its margin bound", crit9},
      {"fixed seeds reproduce artifacts", crit10},
  };
  int failures = 0;
  for (size_t i = 0; i < std::size(criteria); ++i) {
    std::string err;
    try {
      err = criteria[i].run();
    } catch (const std::exception& e) {
      err = fmt("exception: %s", e.what());
    }
    if (err.empty()) {
      std::printf("criterion %2zu  %-42s pass\n", i + 1, criteria[i].name);
    } else {
      std::printf("criterion %2zu  %-42s FAIL  %s\n", i + 1, criteria[i].name,
                  err.c_str());
      ++failures;
    }
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
