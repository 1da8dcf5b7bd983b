#pragma once

/// Stage 1: per-token concept tagging. A softmax layer over the encoder
/// output scores every tag in the closed vocabulary; training is per-token
/// cross-entropy with dev-best selection by concept F-score.

#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "eds/align.hpp"
#include "eds/corpus.hpp"
#include "eds/encoder.hpp"
#include "eds/nn/autodiff.hpp"

namespace eds {

struct TrainConfig {
  int epochs = 30;
  int batch = 32;
  uint64_t seed = 1;
  long tag_min_count = 1;
  nn::OptimizerConfig optimizer{};
  bool verbose = false;
};

struct TaggerModel {
  EncoderConfig enc_cfg;
  nn::ParamCollection params;
  Encoder encoder;
  TagVocabulary tags;
  nn::Parameter* w_out = nullptr;  // |ST| x 2h
  nn::Parameter* b_out = nullptr;  // |ST| x 1

  TaggerModel() = default;
  TaggerModel(const TaggerModel&) = delete;
  TaggerModel& operator=(const TaggerModel&) = delete;
  TaggerModel(TaggerModel&&) = default;
  TaggerModel& operator=(TaggerModel&&) = default;
};

struct TagMetrics {
  double tag_accuracy = 0;
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  bool precision_defined = true;
  long tokens = 0;
  long gold_concepts = 0;
  long pred_concepts = 0;
  long matched_concepts = 0;
};

/// Tag accuracy over whole tag strings (the empty tag counts like any other);
/// concept P/R over per-token multisets of tag parts, empty tags excluded.
inline TagMetrics tag_metrics(const std::vector<std::vector<ConceptTag>>& gold,
                              const std::vector<std::vector<ConceptTag>>& pred) {
  if (gold.size() != pred.size())
    throw ValidationError("tag metrics: sentence count mismatch");
  TagMetrics m;
  long correct = 0;
  for (size_t s = 0; s < gold.size(); ++s) {
    if (gold[s].size() != pred[s].size())
      throw ValidationError("tag metrics: token count mismatch in sentence " +
                            std::to_string(s));
    for (size_t i = 0; i < gold[s].size(); ++i) {
      ++m.tokens;
      if (gold[s][i].str() == pred[s][i].str()) ++correct;
      std::multiset<std::string> g(gold[s][i].parts.begin(), gold[s][i].parts.end());
      std::multiset<std::string> p(pred[s][i].parts.begin(), pred[s][i].parts.end());
      m.gold_concepts += static_cast<long>(g.size());
      m.pred_concepts += static_cast<long>(p.size());
      for (const auto& part : g)
        if (p.count(part)) {
          p.erase(p.find(part));
          ++m.matched_concepts;
        }
    }
  }
  m.tag_accuracy = m.tokens ? static_cast<double>(correct) / m.tokens : 1.0;
  m.precision_defined = m.pred_concepts > 0;
  m.precision =
      m.precision_defined ? static_cast<double>(m.matched_concepts) / m.pred_concepts : 0.0;
  m.recall =
      m.gold_concepts ? static_cast<double>(m.matched_concepts) / m.gold_concepts : 1.0;
  m.f1 = (m.precision + m.recall) > 0
             ? 2 * m.precision * m.recall / (m.precision + m.recall)
             : 0.0;
  return m;
}

namespace detail {

inline std::vector<nn::Var> tag_scores(nn::Tape& t, const TaggerModel& model,
                                       const Sentence& s,
                                       const std::vector<nn::Mat>* ctx) {
  auto rs = model.encoder.encode_sentence(t, s, ctx);
  std::vector<nn::Var> out;
  for (nn::Var r : rs)
    out.push_back(t.affine(t.param(*model.w_out), r, t.param(*model.b_out)));
  return out;
}

inline int argmax_lowest(const nn::Mat& col) {
  int best = 0;
  for (int i = 1; i < col.rows(); ++i)
    if (col(i, 0) > col(best, 0)) best = i;
  return best;
}

inline const std::vector<nn::Mat>* ctx_for(const ContextVectors* ctx, const Sentence& s) {
  if (!ctx) return nullptr;
  const std::vector<nn::Mat>* block = ctx->find(s.id);
  if (!block) throw ValidationError("no context vectors for sentence " + s.id);
  return block;
}

}  // namespace detail

inline std::vector<ConceptTag> predict_tags(const TaggerModel& model, const Sentence& s,
                                            const ContextVectors* ctx = nullptr) {
  nn::Tape t;
  auto scores = detail::tag_scores(t, model, s, detail::ctx_for(ctx, s));
  std::vector<ConceptTag> out;
  for (nn::Var sc : scores)
    out.push_back(ConceptTag::parse(model.tags.tag(detail::argmax_lowest(t.value(sc)))));
  return out;
}

/// Gold tag sequences for a set of instances, via alignment.
inline std::vector<std::vector<ConceptTag>> gold_tags(const std::vector<Instance>& insts) {
  std::vector<std::vector<ConceptTag>> out;
  for (const Instance& inst : insts)
    out.push_back(compose_tags(inst, align_nodes(inst)));
  return out;
}

inline TaggerModel train_tagger(const std::vector<Instance>& train,
                                const std::vector<Instance>& dev, EncoderConfig enc_cfg,
                                TrainConfig cfg, const ContextVectors* ctx = nullptr) {
  if (train.empty()) throw ValidationError("empty training set");

  auto train_tags = gold_tags(train);
  auto dev_tags = gold_tags(dev);

  TaggerModel model;
  model.enc_cfg = enc_cfg;
  model.tags = TagVocabulary::build(train_tags, cfg.tag_min_count);

  std::vector<Sentence> train_sents;
  for (const Instance& inst : train) train_sents.push_back(inst.sentence);
  Vocab words, chars, pos_tags;
  build_vocabs(train_sents, words, chars, pos_tags);

  Rng rng = derived_rng(cfg.seed, 1);
  model.encoder =
      Encoder::create(model.params, enc_cfg, std::move(words), std::move(chars),
                      std::move(pos_tags), rng);
  model.w_out = model.params.add("tag.w", model.tags.size(), enc_cfg.output_dim(), rng);
  model.b_out = model.params.add_zero("tag.b", model.tags.size(), 1);

  std::vector<std::vector<int>> gold_ids(train.size());
  for (size_t i = 0; i < train.size(); ++i)
    for (const ConceptTag& tag : train_tags[i])
      gold_ids[i].push_back(model.tags.id_or_empty(tag.str()));

  nn::Optimizer opt(cfg.optimizer);
  Rng order_rng = derived_rng(cfg.seed, 2);
  std::vector<size_t> order(train.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

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
        nn::Tape t;
        auto scores =
            detail::tag_scores(t, model, inst.sentence, detail::ctx_for(ctx, inst.sentence));
        std::vector<nn::Var> losses;
        for (size_t i = 0; i < scores.size(); ++i)
          losses.push_back(t.neg_log_softmax_pick(scores[i], gold_ids[idx][i]));
        nn::Var loss = t.sum(losses);
        epoch_loss += t.scalar(loss);
        t.backward(loss);
      }
      opt.step(model.params);
      done += take;
    }

    const auto& eval_insts = dev.empty() ? train : dev;
    const auto& eval_gold = dev.empty() ? train_tags : dev_tags;
    std::vector<std::vector<ConceptTag>> pred;
    for (const Instance& inst : eval_insts)
      pred.push_back(predict_tags(model, inst.sentence, ctx));
    TagMetrics tm = tag_metrics(eval_gold, pred);
    if (tm.f1 > best_f) {
      best_f = tm.f1;
      best = model.params.snapshot();
    }
    if (cfg.verbose)
      std::fprintf(stderr, "tagger epoch %d loss %.4f dev concept F %.4f\n", epoch + 1,
                   epoch_loss, tm.f1);
  }
  if (!best.empty()) model.params.restore(best);
  return model;
}

}  // namespace eds
