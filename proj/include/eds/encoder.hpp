#pragma once

/// Token representation and contextual encoding: word/char/POS embeddings,
/// optional externally computed context vectors with learned layer mixing,
/// and a stacked bidirectional LSTM producing per-token features r_i.

#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "eds/corpus.hpp"
#include "eds/nn/autodiff.hpp"
#include "eds/nn/lstm.hpp"
#include "eds/util.hpp"

namespace eds {

/// String-to-id table; id 0 is always the unknown entry.
class Vocab {
 public:
  static constexpr const char* kUnknown = "<unk>";

  Vocab() { add(kUnknown, 0); }

  int add(const std::string& entry, long count = 1) {
    auto it = ids_.find(entry);
    if (it != ids_.end()) {
      counts_[it->second] += count;
      return it->second;
    }
    int id = static_cast<int>(entries_.size());
    ids_[entry] = id;
    entries_.push_back(entry);
    counts_.push_back(count);
    return id;
  }

  int id(const std::string& entry) const {
    auto it = ids_.find(entry);
    return it == ids_.end() ? 0 : it->second;
  }

  bool contains(const std::string& entry) const { return ids_.count(entry) > 0; }
  int size() const { return static_cast<int>(entries_.size()); }
  const std::string& entry(int id) const { return entries_.at(id); }
  long count(int id) const { return counts_.at(id); }
  long count(const std::string& entry) const {
    auto it = ids_.find(entry);
    return it == ids_.end() ? 0 : counts_[it->second];
  }

  std::string serialize() const {
    std::ostringstream out;
    for (int i = 0; i < size(); ++i)
      out << entries_[i] << '\t' << i << '\t' << counts_[i] << '\n';
    return out.str();
  }

  static Vocab deserialize(std::string_view text) {
    Vocab v;
    v.entries_.clear();
    v.ids_.clear();
    v.counts_.clear();
    for (std::string_view line : split(text, '\n')) {
      if (line.empty()) continue;
      auto cols = split(line, '\t');
      if (cols.size() != 3) throw ParseError("bad vocab line: " + std::string(line));
      int id = std::stoi(std::string(cols[1]));
      if (id != static_cast<int>(v.entries_.size()))
        throw ParseError("non-dense vocab ids");
      v.entries_.emplace_back(cols[0]);
      v.ids_[v.entries_.back()] = id;
      v.counts_.push_back(std::stol(std::string(cols[2])));
    }
    if (v.entries_.empty() || v.entries_[0] != kUnknown)
      throw ParseError("vocab id 0 must be " + std::string(kUnknown));
    return v;
  }

 private:
  std::vector<std::string> entries_;
  std::map<std::string, int> ids_;
  std::vector<long> counts_;
};

struct EncoderConfig {
  int d_w = 100;       // word embedding dim
  int d_c = 32;        // char embedding dim (also char LSTM hidden)
  int d_t = 16;        // POS embedding dim
  int d_e = 64;        // external context vector dim
  int hidden = 100;    // BiLSTM hidden per direction
  int layers = 2;      // BiLSTM depth
  int k = 3;           // words with train count <= k take the char path
  int ctx_layers = 0;  // layer count in the context-vector file; 0 = unused

  int input_dim() const { return d_w + d_e + d_t; }
  int output_dim() const { return 2 * hidden; }
};

/// Externally computed per-token vectors (a frozen language model's states);
/// only the scalar layer-mixing weights are trained.
class ContextVectors {
 public:
  int dim = 0;
  int layers = 0;
  // sentence id -> one (m x dim) matrix per layer
  std::map<std::string, std::vector<nn::Mat>> by_sentence;

  const std::vector<nn::Mat>* find(const std::string& sid) const {
    auto it = by_sentence.find(sid);
    return it == by_sentence.end() ? nullptr : &it->second;
  }

  static ContextVectors parse(std::string_view text) {
    ContextVectors cv;
    std::string sid;
    std::vector<std::vector<std::vector<double>>> rows;  // token -> layer -> values
    int lineno = 0;
    auto flush = [&]() {
      if (sid.empty()) return;
      if (rows.empty()) throw ParseError("context block without vectors: " + sid);
      int nl = static_cast<int>(rows[0].size());
      int d = static_cast<int>(rows[0][0].size());
      if (cv.layers == 0) {
        cv.layers = nl;
        cv.dim = d;
      }
      if (nl != cv.layers || d != cv.dim)
        throw ParseError("inconsistent context shape in " + sid);
      std::vector<nn::Mat> mats(nl, nn::Mat(rows.size(), d));
      for (size_t i = 0; i < rows.size(); ++i) {
        if (static_cast<int>(rows[i].size()) != nl ||
            static_cast<int>(rows[i][0].size()) != d)
          throw ParseError("ragged context block in " + sid);
        for (int l = 0; l < nl; ++l)
          for (int j = 0; j < d; ++j) mats[l](i, j) = rows[i][l][j];
      }
      if (cv.by_sentence.count(sid)) throw ParseError("duplicate context block: " + sid);
      cv.by_sentence[sid] = std::move(mats);
      rows.clear();
    };
    for (std::string_view raw : split(text, '\n')) {
      ++lineno;
      std::string line = strip(raw);
      if (line.empty()) continue;
      if (starts_with(line, "#id ")) {
        flush();
        sid = std::string(strip(line.substr(4)));
        if (sid.empty()) throw ParseError("empty sentence id", lineno, 1);
        continue;
      }
      if (sid.empty()) throw ParseError("vector line before #id", lineno, 1);
      std::vector<std::vector<double>> layer_vals;
      for (std::string_view part : split_str(line, "|")) {
        std::vector<double> vals;
        std::istringstream in{std::string(strip(part))};
        double x;
        while (in >> x) vals.push_back(x);
        if (vals.empty()) throw ParseError("empty layer vector", lineno, 1);
        layer_vals.push_back(std::move(vals));
      }
      rows.push_back(std::move(layer_vals));
    }
    flush();
    return cv;
  }

  static ContextVectors load(const std::string& path) { return parse(read_file(path)); }
};

/// Full token encoder; parameters live in an external ParamCollection under
/// the "enc." prefix so the model container can persist them uniformly.
class Encoder {
 public:
  EncoderConfig cfg;
  Vocab words, chars, pos;

  static Encoder create(nn::ParamCollection& pc, EncoderConfig cfg, Vocab words,
                        Vocab chars, Vocab pos_tags, Rng& rng) {
    Encoder e;
    e.cfg = cfg;
    e.words = std::move(words);
    e.chars = std::move(chars);
    e.pos = std::move(pos_tags);
    e.word_emb_ = pc.add("enc.word_emb", cfg.d_w, e.words.size(), rng);
    e.char_emb_ = pc.add("enc.char_emb", cfg.d_c, e.chars.size(), rng);
    e.pos_emb_ = pc.add("enc.pos_emb", cfg.d_t, e.pos.size(), rng);
    e.char_fwd_ = nn::make_lstm_cell(pc, "enc.char_fwd", cfg.d_c, cfg.d_c, rng);
    e.char_bwd_ = nn::make_lstm_cell(pc, "enc.char_bwd", cfg.d_c, cfg.d_c, rng);
    e.char_proj_w_ = pc.add("enc.char_proj_w", cfg.d_w, 2 * cfg.d_c, rng);
    e.char_proj_b_ = pc.add_zero("enc.char_proj_b", cfg.d_w, 1);
    if (cfg.ctx_layers > 0) {
      e.ctx_mix_ = pc.add_zero("enc.ctx_mix", cfg.ctx_layers, 1);
    }
    int in = cfg.input_dim();
    for (int l = 0; l < cfg.layers; ++l) {
      int d = l == 0 ? in : 2 * cfg.hidden;
      std::string base = "enc.l" + std::to_string(l);
      e.fwd_.push_back(nn::make_lstm_cell(pc, base + ".fwd", d, cfg.hidden, rng));
      e.bwd_.push_back(nn::make_lstm_cell(pc, base + ".bwd", d, cfg.hidden, rng));
    }
    return e;
  }

  static Encoder attach(const nn::ParamCollection& pc, EncoderConfig cfg, Vocab words,
                        Vocab chars, Vocab pos_tags) {
    Encoder e;
    e.cfg = cfg;
    e.words = std::move(words);
    e.chars = std::move(chars);
    e.pos = std::move(pos_tags);
    auto need = [&pc](const std::string& n) {
      nn::Parameter* p = pc.find(n);
      if (!p) throw Error("missing encoder parameter: " + n);
      return p;
    };
    e.word_emb_ = need("enc.word_emb");
    e.char_emb_ = need("enc.char_emb");
    e.pos_emb_ = need("enc.pos_emb");
    e.char_fwd_ = nn::attach_lstm_cell(pc, "enc.char_fwd");
    e.char_bwd_ = nn::attach_lstm_cell(pc, "enc.char_bwd");
    e.char_proj_w_ = need("enc.char_proj_w");
    e.char_proj_b_ = need("enc.char_proj_b");
    if (cfg.ctx_layers > 0) e.ctx_mix_ = need("enc.ctx_mix");
    for (int l = 0; l < cfg.layers; ++l) {
      std::string base = "enc.l" + std::to_string(l);
      e.fwd_.push_back(nn::attach_lstm_cell(pc, base + ".fwd"));
      e.bwd_.push_back(nn::attach_lstm_cell(pc, base + ".bwd"));
    }
    return e;
  }

  /// Word component: lookup row for frequent words, char-composed vector for
  /// rare/unknown ones (count <= k).
  nn::Var embed_word(nn::Tape& t, const std::string& form) const {
    int wid = words.id(form);
    bool rare = wid == 0 || words.count(wid) <= cfg.k;
    if (!rare) return t.cols(t.param(*word_emb_), wid, 1);
    std::vector<nn::Var> cvars;
    for (char ch : form) {
      int cid = chars.id(std::string(1, ch));
      cvars.push_back(t.cols(t.param(*char_emb_), cid, 1));
    }
    auto f = nn::run_lstm(t, char_fwd_, cvars, false);
    auto b = nn::run_lstm(t, char_bwd_, cvars, true);
    nn::Var both = t.concat({f.back().h, b.front().h});
    return t.affine(t.param(*char_proj_w_), both, t.param(*char_proj_b_));
  }

  /// a_i = word ⊕ context ⊕ POS per token; absent context contributes zeros.
  std::vector<nn::Var> embed(nn::Tape& t, const Sentence& s,
                             const std::vector<nn::Mat>* ctx) const {
    if (ctx && static_cast<int>((*ctx)[0].rows()) != static_cast<int>(s.tokens.size()))
      throw ValidationError("context vector rows do not match token count in " + s.id);
    std::vector<nn::Var> mix_weights;
    if (ctx) {
      if (!ctx_mix_) throw Error("encoder was built without context mixing weights");
      nn::Var w = t.softmax_col(t.param(*ctx_mix_));
      for (int l = 0; l < cfg.ctx_layers; ++l) mix_weights.push_back(t.pick(w, l));
    }
    std::vector<nn::Var> out;
    for (size_t i = 0; i < s.tokens.size(); ++i) {
      nn::Var word = embed_word(t, s.tokens[i].form);
      nn::Var ctx_part;
      if (ctx) {
        std::vector<nn::Var> terms;
        for (int l = 0; l < cfg.ctx_layers; ++l) {
          nn::Var row = t.input((*ctx)[l].row(i).transpose());
          terms.push_back(t.scale_by(row, mix_weights[l]));
        }
        ctx_part = t.sum(terms);
      } else {
        ctx_part = t.input(nn::Mat::Zero(cfg.d_e, 1));
      }
      nn::Var pos_part = t.cols(t.param(*pos_emb_), pos.id(s.tokens[i].pos), 1);
      out.push_back(t.concat({word, ctx_part, pos_part}));
    }
    return out;
  }

  /// Stacked BiLSTM; returns r_i (2h x 1) per token.
  std::vector<nn::Var> encode(nn::Tape& t, const std::vector<nn::Var>& inputs) const {
    std::vector<nn::Var> cur = inputs;
    for (int l = 0; l < cfg.layers; ++l) {
      auto f = nn::run_lstm(t, fwd_[l], cur, false);
      auto b = nn::run_lstm(t, bwd_[l], cur, true);
      std::vector<nn::Var> next;
      for (size_t i = 0; i < cur.size(); ++i) next.push_back(t.concat({f[i].h, b[i].h}));
      cur = std::move(next);
    }
    return cur;
  }

  std::vector<nn::Var> encode_sentence(nn::Tape& t, const Sentence& s,
                                       const std::vector<nn::Mat>* ctx) const {
    return encode(t, embed(t, s, ctx));
  }

  /// Value-level wrappers used by the evaluation APIs: one row per token.
  nn::Mat embed_tokens(const Sentence& s, const std::vector<nn::Mat>* ctx = nullptr) const {
    nn::Tape t;
    auto vars = embed(t, s, ctx);
    nn::Mat a(vars.size(), cfg.input_dim());
    for (size_t i = 0; i < vars.size(); ++i) a.row(i) = t.value(vars[i]).transpose();
    return a;
  }

  nn::Mat encode_sequence(const nn::Mat& a) const {
    nn::Tape t;
    std::vector<nn::Var> in;
    for (int i = 0; i < a.rows(); ++i) in.push_back(t.input(a.row(i).transpose()));
    auto r = encode(t, in);
    nn::Mat out(a.rows(), cfg.output_dim());
    for (size_t i = 0; i < r.size(); ++i) out.row(i) = t.value(r[i]).transpose();
    return out;
  }

  /// Overwrites embedding rows for words found in a `word v1 v2 …` text file.
  int load_pretrained(const std::string& text) {
    int applied = 0;
    int lineno = 0;
    for (std::string_view raw : split(text, '\n')) {
      ++lineno;
      std::string line = strip(raw);
      if (line.empty()) continue;
      std::istringstream in{std::string(line)};
      std::string w;
      in >> w;
      std::vector<double> vals;
      double x;
      while (in >> x) vals.push_back(x);
      if (static_cast<int>(vals.size()) != cfg.d_w)
        throw ParseError("embedding width mismatch", lineno, 1);
      if (!words.contains(w)) continue;
      int wid = words.id(w);
      for (int i = 0; i < cfg.d_w; ++i) word_emb_->value(i, wid) = vals[i];
      ++applied;
    }
    return applied;
  }

 private:
  nn::Parameter* word_emb_ = nullptr;
  nn::Parameter* char_emb_ = nullptr;
  nn::Parameter* pos_emb_ = nullptr;
  nn::LstmCell char_fwd_, char_bwd_;
  nn::Parameter* char_proj_w_ = nullptr;
  nn::Parameter* char_proj_b_ = nullptr;
  nn::Parameter* ctx_mix_ = nullptr;
  std::vector<nn::LstmCell> fwd_, bwd_;
};

/// Builds word/char/POS vocabularies from training sentences.
inline void build_vocabs(const std::vector<Sentence>& train, Vocab& words, Vocab& chars,
                         Vocab& pos) {
  for (const Sentence& s : train) {
    for (const Token& tok : s.tokens) {
      words.add(tok.form);
      for (char ch : tok.form) chars.add(std::string(1, ch));
      pos.add(tok.pos);
    }
  }
}

}  // namespace eds
