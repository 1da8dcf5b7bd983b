#pragma once

/// Two-stage pipeline: concept tagging feeds relexicalized nodes into the
/// dependency identifier. Both stages train independently on the same data;
/// parsing runs them back to back.

#include <utility>
#include <vector>

#include "eds/align.hpp"
#include "eds/arc.hpp"
#include "eds/tagger.hpp"

namespace eds {

struct PipelineConfig {
  EncoderConfig encoder{};
  ArcConfig arcs{};
  TrainConfig training{};
  bool connected = true;  // connectivity constraint at decode time
};

struct Pipeline {
  TaggerModel tagger;
  ArcModel arcs;
  bool connected = true;
  TrainConfig training{};  // kept for provenance when the model is saved

  Pipeline() = default;
  Pipeline(const Pipeline&) = delete;
  Pipeline& operator=(const Pipeline&) = delete;
  Pipeline(Pipeline&&) = default;
  Pipeline& operator=(Pipeline&&) = default;
};

inline Pipeline train_pipeline(const std::vector<Instance>& train,
                               const std::vector<Instance>& dev,
                               const PipelineConfig& cfg,
                               const ContextVectors* ctx = nullptr) {
  Pipeline p;
  p.connected = cfg.connected;
  p.training = cfg.training;
  p.tagger = train_tagger(train, dev, cfg.encoder, cfg.training, ctx);
  p.arcs = train_arcs(train, dev, cfg.encoder, cfg.arcs, cfg.training, ctx);
  return p;
}

/// Tags, relexicalizes, then predicts arcs and the top. A sentence with no
/// predicted concepts falls back to a single placeholder node so the output
/// is always a valid graph.
inline EdsGraph parse_sentence(const Pipeline& p, const Sentence& s,
                               const ContextVectors* ctx = nullptr) {
  auto tags = predict_tags(p.tagger, s, ctx);
  std::vector<EdsNode> nodes = relexicalize(tags, s);
  EdsGraph g;
  g.text = s.text;
  if (nodes.empty()) {
    EdsNode fallback;
    fallback.id = "n0_0";
    fallback.predicate = "unknown";
    fallback.anchor = {0, std::max(1, static_cast<int>(s.text.size()))};
    nodes.push_back(fallback);
  }
  g.nodes = std::move(nodes);
  return predict_arcs(p.arcs, s, g, p.connected, ctx);
}

inline std::vector<std::pair<std::string, EdsGraph>> parse_corpus(
    const Pipeline& p, const std::vector<Sentence>& sentences,
    const ContextVectors* ctx = nullptr) {
  std::vector<std::pair<std::string, EdsGraph>> out;
  for (const Sentence& s : sentences) out.emplace_back(s.id, parse_sentence(p, s, ctx));
  return out;
}

}  // namespace eds
