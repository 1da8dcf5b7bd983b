#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>

#include "eds/model_io.hpp"
#include "support/helpers.hpp"
#include "support/synthetic.hpp"

using namespace eds;
using testsupport::synthetic_corpus;

namespace {

PipelineConfig tiny_config(uint64_t seed) {
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
  cfg.training.epochs = 2;
  cfg.training.batch = 4;
  cfg.training.seed = seed;
  return cfg;
}

Pipeline tiny_pipeline(uint64_t seed = 11) {
  auto corpus = synthetic_corpus();
  corpus.resize(12);
  return train_pipeline(corpus, corpus, tiny_config(seed));
}

}  // namespace

TEST_CASE("serialize round-trips to identical bytes and identical output") {
  Pipeline p = tiny_pipeline();
  std::string bytes = serialize_pipeline(p);
  CHECK(bytes.substr(0, 5) == "EDSF1");

  Pipeline q = deserialize_pipeline(bytes);
  CHECK(serialize_pipeline(q) == bytes);
  CHECK(q.connected == p.connected);
  CHECK(q.training.seed == p.training.seed);
  CHECK(q.arcs.roles == p.arcs.roles);
  CHECK(q.tagger.tags.size() == p.tagger.tags.size());

  auto corpus = synthetic_corpus();
  for (int i = 0; i < 4; ++i) {
    const Sentence& s = corpus[i].sentence;
    CHECK(serialize_eds(parse_sentence(q, s)) == serialize_eds(parse_sentence(p, s)));
    CHECK(predict_tags(q.tagger, s) == predict_tags(p.tagger, s));
  }
}

TEST_CASE("non-default configuration values survive the round trip") {
  auto corpus = synthetic_corpus();
  corpus.resize(8);
  PipelineConfig cfg = tiny_config(3);
  cfg.connected = false;
  cfg.arcs.cost.c_fp = 0.25;
  cfg.arcs.cost.c_fn = 0.75;
  cfg.encoder.k = 5;
  cfg.training.optimizer.kind = "sgd";
  cfg.training.optimizer.lr = 0.5;
  Pipeline p = train_pipeline(corpus, corpus, cfg);

  Pipeline q = deserialize_pipeline(serialize_pipeline(p));
  CHECK(q.connected == false);
  CHECK(q.arcs.arc_cfg.cost.c_fp == 0.25);
  CHECK(q.arcs.arc_cfg.cost.c_fn == 0.75);
  CHECK(q.arcs.enc_cfg.k == 5);
  CHECK(q.tagger.enc_cfg.k == 5);
  CHECK(q.training.optimizer.kind == "sgd");
  CHECK(q.training.optimizer.lr == 0.5);
  CHECK(q.training.epochs == 2);
}

TEST_CASE("save and load through a file") {
  Pipeline p = tiny_pipeline(5);
  std::string path = "/tmp/eds_model_io_test.edsf";
  save_pipeline(p, path);
  Pipeline q = load_pipeline(path);
  CHECK(serialize_pipeline(q) == serialize_pipeline(p));
  std::remove(path.c_str());
  CHECK_THROWS_AS(load_pipeline(path), IoError);
}

TEST_CASE("retraining with the same seed gives byte-identical models") {
  std::string a = serialize_pipeline(tiny_pipeline(21));
  std::string b = serialize_pipeline(tiny_pipeline(21));
  CHECK(a == b);
  std::string c = serialize_pipeline(tiny_pipeline(22));
  CHECK(a != c);
}

TEST_CASE("corrupt containers are rejected") {
  Pipeline p = tiny_pipeline(7);
  std::string bytes = serialize_pipeline(p);

  CHECK_THROWS_WITH_AS(deserialize_pipeline("XXXXX garbage"),
                       doctest::Contains("magic"), ParseError);

  std::string wrong_version = bytes;
  wrong_version[5] = 9;
  CHECK_THROWS_WITH_AS(deserialize_pipeline(wrong_version),
                       doctest::Contains("version"), ParseError);

  CHECK_THROWS_WITH_AS(deserialize_pipeline(bytes.substr(0, 40)),
                       doctest::Contains("truncated"), ParseError);

  std::string trailing = bytes + "zz";
  CHECK_THROWS_WITH_AS(deserialize_pipeline(trailing),
                       doctest::Contains("trailing"), ParseError);
}
