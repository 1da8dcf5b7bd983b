#pragma once

/// Single-file model container, magic `EDSF1`: a JSON config record followed
/// by length-prefixed vocabularies and raw parameter matrices for both
/// pipeline stages. Saving is deterministic (collection order, fixed number
/// encoding), so identical models produce identical bytes.

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "eds/pipeline.hpp"

namespace eds {

inline constexpr std::string_view kModelMagic = "EDSF1";
inline constexpr uint32_t kModelVersion = 1;

namespace detail {

struct ByteWriter {
  std::string buf;

  void u32(uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void u64(uint64_t v) {
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void f64(double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    u64(bits);
  }
  void str(std::string_view s) {
    u64(s.size());
    buf.append(s);
  }
  void mat(const nn::Mat& m) {
    u32(static_cast<uint32_t>(m.rows()));
    u32(static_cast<uint32_t>(m.cols()));
    for (int i = 0; i < m.rows(); ++i)
      for (int j = 0; j < m.cols(); ++j) f64(m(i, j));
  }
};

struct ByteReader {
  std::string_view data;
  size_t pos = 0;

  void need(size_t n) const {
    if (pos + n > data.size()) throw ParseError("truncated model file");
  }
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<uint32_t>(static_cast<unsigned char>(data[pos + i])) << (8 * i);
    pos += 4;
    return v;
  }
  uint64_t u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<uint64_t>(static_cast<unsigned char>(data[pos + i])) << (8 * i);
    pos += 8;
    return v;
  }
  double f64() {
    uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
  }
  std::string str() {
    uint64_t n = u64();
    need(n);
    std::string s(data.substr(pos, n));
    pos += n;
    return s;
  }
  nn::Mat mat() {
    uint32_t rows = u32();
    uint32_t cols = u32();
    nn::Mat m(rows, cols);
    for (uint32_t i = 0; i < rows; ++i)
      for (uint32_t j = 0; j < cols; ++j) m(i, j) = f64();
    return m;
  }
};

inline void write_params(ByteWriter& w, const nn::ParamCollection& pc) {
  w.u32(static_cast<uint32_t>(pc.all().size()));
  for (const auto& p : pc.all()) {
    w.str(p->name);
    w.mat(p->value);
  }
}

inline void read_params(ByteReader& r, nn::ParamCollection& pc) {
  uint32_t n = r.u32();
  for (uint32_t i = 0; i < n; ++i) {
    std::string name = r.str();
    nn::Mat value = r.mat();
    nn::Parameter* p =
        pc.add_zero(name, static_cast<int>(value.rows()), static_cast<int>(value.cols()));
    p->value = value;
  }
}

inline nlohmann::ordered_json encoder_cfg_json(const EncoderConfig& c) {
  return {{"d_w", c.d_w},       {"d_c", c.d_c},       {"d_t", c.d_t},
          {"d_e", c.d_e},       {"hidden", c.hidden}, {"layers", c.layers},
          {"k", c.k},           {"ctx_layers", c.ctx_layers}};
}

inline EncoderConfig encoder_cfg_from_json(const nlohmann::ordered_json& j) {
  EncoderConfig c;
  c.d_w = j.at("d_w");
  c.d_c = j.at("d_c");
  c.d_t = j.at("d_t");
  c.d_e = j.at("d_e");
  c.hidden = j.at("hidden");
  c.layers = j.at("layers");
  c.k = j.at("k");
  c.ctx_layers = j.at("ctx_layers");
  return c;
}

inline nlohmann::ordered_json arc_cfg_json(const ArcConfig& c) {
  return {{"d_n", c.d_n},
          {"hidden", c.hidden},
          {"top_hidden", c.top_hidden},
          {"c_fp", c.cost.c_fp},
          {"c_fn", c.cost.c_fn}};
}

inline ArcConfig arc_cfg_from_json(const nlohmann::ordered_json& j) {
  ArcConfig c;
  c.d_n = j.at("d_n");
  c.hidden = j.at("hidden");
  c.top_hidden = j.at("top_hidden");
  c.cost.c_fp = j.at("c_fp");
  c.cost.c_fn = j.at("c_fn");
  return c;
}

inline nlohmann::ordered_json train_cfg_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},
          {"batch", c.batch},
          {"seed", c.seed},
          {"tag_min_count", c.tag_min_count},
          {"optimizer",
           {{"kind", c.optimizer.kind},
            {"lr", c.optimizer.lr},
            {"momentum", c.optimizer.momentum},
            {"adam_beta1", c.optimizer.adam_beta1},
            {"adam_beta2", c.optimizer.adam_beta2},
            {"adam_eps", c.optimizer.adam_eps},
            {"clip", c.optimizer.clip}}}};
}

inline TrainConfig train_cfg_from_json(const nlohmann::ordered_json& j) {
  TrainConfig c;
  c.epochs = j.at("epochs");
  c.batch = j.at("batch");
  c.seed = j.at("seed");
  c.tag_min_count = j.at("tag_min_count");
  const auto& o = j.at("optimizer");
  c.optimizer.kind = o.at("kind");
  c.optimizer.lr = o.at("lr");
  c.optimizer.momentum = o.at("momentum");
  c.optimizer.adam_beta1 = o.at("adam_beta1");
  c.optimizer.adam_beta2 = o.at("adam_beta2");
  c.optimizer.adam_eps = o.at("adam_eps");
  c.optimizer.clip = o.at("clip");
  return c;
}

}  // namespace detail

inline std::string serialize_pipeline(const Pipeline& p) {
  detail::ByteWriter w;
  w.buf.append(kModelMagic);
  w.u32(kModelVersion);

  nlohmann::ordered_json cfg;
  cfg["connected"] = p.connected;
  cfg["training"] = detail::train_cfg_json(p.training);
  cfg["tagger"] = {{"encoder", detail::encoder_cfg_json(p.tagger.enc_cfg)}};
  cfg["arcs"] = {{"encoder", detail::encoder_cfg_json(p.arcs.enc_cfg)},
                 {"model", detail::arc_cfg_json(p.arcs.arc_cfg)}};
  w.str(cfg.dump());

  w.str(p.tagger.tags.serialize());
  w.str(p.tagger.encoder.words.serialize());
  w.str(p.tagger.encoder.chars.serialize());
  w.str(p.tagger.encoder.pos.serialize());
  detail::write_params(w, p.tagger.params);

  w.str(p.arcs.concepts.serialize());
  w.u32(static_cast<uint32_t>(p.arcs.roles.size()));
  for (const std::string& role : p.arcs.roles) w.str(role);
  w.str(p.arcs.encoder.words.serialize());
  w.str(p.arcs.encoder.chars.serialize());
  w.str(p.arcs.encoder.pos.serialize());
  detail::write_params(w, p.arcs.params);

  return std::move(w.buf);
}

inline Pipeline deserialize_pipeline(std::string_view bytes) {
  if (bytes.substr(0, kModelMagic.size()) != kModelMagic)
    throw ParseError("not a model file (bad magic)");
  detail::ByteReader r{bytes, kModelMagic.size()};
  uint32_t version = r.u32();
  if (version != kModelVersion)
    throw ParseError("unsupported model version " + std::to_string(version));

  nlohmann::ordered_json cfg;
  try {
    cfg = nlohmann::ordered_json::parse(r.str());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad model config: ") + e.what());
  }

  Pipeline p;
  try {
    p.connected = cfg.at("connected");
    p.training = detail::train_cfg_from_json(cfg.at("training"));
    p.tagger.enc_cfg = detail::encoder_cfg_from_json(cfg.at("tagger").at("encoder"));
    p.arcs.enc_cfg = detail::encoder_cfg_from_json(cfg.at("arcs").at("encoder"));
    p.arcs.arc_cfg = detail::arc_cfg_from_json(cfg.at("arcs").at("model"));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad model config: ") + e.what());
  }

  p.tagger.tags = TagVocabulary::deserialize(r.str());
  Vocab words = Vocab::deserialize(r.str());
  Vocab chars = Vocab::deserialize(r.str());
  Vocab pos_tags = Vocab::deserialize(r.str());
  detail::read_params(r, p.tagger.params);
  p.tagger.encoder = Encoder::attach(p.tagger.params, p.tagger.enc_cfg, std::move(words),
                                     std::move(chars), std::move(pos_tags));
  p.tagger.w_out = p.tagger.params.find("tag.w");
  p.tagger.b_out = p.tagger.params.find("tag.b");
  if (!p.tagger.w_out || !p.tagger.b_out)
    throw ParseError("model file lacks tagger output head");

  p.arcs.concepts = Vocab::deserialize(r.str());
  uint32_t n_roles = r.u32();
  for (uint32_t i = 0; i < n_roles; ++i) p.arcs.roles.push_back(r.str());
  Vocab a_words = Vocab::deserialize(r.str());
  Vocab a_chars = Vocab::deserialize(r.str());
  Vocab a_pos = Vocab::deserialize(r.str());
  detail::read_params(r, p.arcs.params);
  p.arcs.encoder = Encoder::attach(p.arcs.params, p.arcs.enc_cfg, std::move(a_words),
                                   std::move(a_chars), std::move(a_pos));
  p.arcs.bind_heads();

  if (r.pos != bytes.size()) throw ParseError("trailing bytes in model file");
  return p;
}

inline void save_pipeline(const Pipeline& p, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  std::string bytes = serialize_pipeline(p);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to " + path);
}

inline Pipeline load_pipeline(const std::string& path) {
  return deserialize_pipeline(read_file(path));
}

}  // namespace eds
