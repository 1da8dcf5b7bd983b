#pragma once

/// Command-line front end: `train`, `parse`, `eval`, `pheno`, `curve`.
/// Reports go to standard output in machine-readable form (TSV/CSV/JSON);
/// progress and summaries go to standard error. Exit codes: 0 success,
/// 1 a --fail-under threshold was missed, 2 bad input or usage.

#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "eds/model_io.hpp"
#include "eds/pheno.hpp"

namespace eds {

namespace cli_detail {

inline std::string fmt4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

/// Pairs prediction graphs with gold graphs by id, demanding an exact match.
inline std::vector<const EdsGraph*> pair_by_id(
    const std::vector<std::pair<std::string, EdsGraph>>& pred,
    const std::vector<std::pair<std::string, EdsGraph>>& gold) {
  std::map<std::string, const EdsGraph*> by_id;
  for (const auto& [id, g] : pred) {
    if (by_id.count(id)) throw ValidationError("duplicate predicted graph id: " + id);
    by_id[id] = &g;
  }
  std::vector<const EdsGraph*> out;
  std::vector<std::string> missing;
  for (const auto& [id, g] : gold) {
    auto it = by_id.find(id);
    if (it == by_id.end())
      missing.push_back(id);
    else
      out.push_back(it->second);
  }
  if (!missing.empty()) {
    std::string msg = "no prediction for:";
    for (const auto& id : missing) msg += " " + id;
    throw ValidationError(msg);
  }
  if (pred.size() != gold.size())
    throw ValidationError("predictions without matching gold ids");
  return out;
}

struct CorpusArgs {
  std::string sentences, graphs, dev_sentences, dev_graphs, ctx;
};

struct HyperArgs {
  PipelineConfig cfg{};
  bool quiet = false;
};

inline void add_hyper_flags(CLI::App* cmd, HyperArgs& h) {
  auto& cfg = h.cfg;
  cmd->add_option("--epochs", cfg.training.epochs, "Training epochs");
  cmd->add_option("--batch", cfg.training.batch, "Mini-batch size");
  cmd->add_option("--seed", cfg.training.seed, "Random seed")->envname("EDS_SEED");
  cmd->add_option("--tag-min-count", cfg.training.tag_min_count,
                  "Prune tags rarer than this from the tag vocabulary");
  cmd->add_option("--optimizer", cfg.training.optimizer.kind, "sgd, momentum, or adam");
  cmd->add_option("--lr", cfg.training.optimizer.lr, "Learning rate");
  cmd->add_option("--clip", cfg.training.optimizer.clip,
                  "Global gradient norm clip; <= 0 disables");
  cmd->add_option("--d-w", cfg.encoder.d_w, "Word embedding dim");
  cmd->add_option("--d-c", cfg.encoder.d_c, "Char embedding dim");
  cmd->add_option("--d-t", cfg.encoder.d_t, "POS embedding dim");
  cmd->add_option("--d-e", cfg.encoder.d_e, "Context vector dim");
  cmd->add_option("--hidden", cfg.encoder.hidden, "Encoder hidden dim per direction");
  cmd->add_option("--layers", cfg.encoder.layers, "Encoder depth");
  cmd->add_option("--char-k", cfg.encoder.k,
                  "Words seen at most this often go through the char composer");
  cmd->add_option("--d-n", cfg.arcs.d_n, "Concept embedding dim");
  cmd->add_option("--arc-hidden", cfg.arcs.hidden, "Arc scorer hidden dim");
  cmd->add_option("--top-hidden", cfg.arcs.top_hidden, "Top scorer hidden dim");
  cmd->add_option("--c-fp", cfg.arcs.cost.c_fp, "False-positive arc cost");
  cmd->add_option("--c-fn", cfg.arcs.cost.c_fn, "False-negative arc cost");
  cmd->add_flag("--connected,!--no-connected", cfg.connected,
                "Decode connected graphs");
  cmd->add_flag("--quiet", h.quiet, "Suppress per-epoch progress");
}

inline void add_corpus_flags(CLI::App* cmd, CorpusArgs& c) {
  cmd->add_option("--sentences", c.sentences, "Token file")->required();
  cmd->add_option("--graphs", c.graphs, "Gold graph file")->required();
  cmd->add_option("--dev-sentences", c.dev_sentences, "Dev token file");
  cmd->add_option("--dev-graphs", c.dev_graphs, "Dev gold graph file");
  cmd->add_option("--ctx", c.ctx, "Per-token context vector file");
}

struct LoadedCorpus {
  std::vector<Instance> train, dev;
  ContextVectors ctx;
  bool has_ctx = false;
};

inline LoadedCorpus load_train_dev(const CorpusArgs& c, PipelineConfig& cfg) {
  if (c.dev_sentences.empty() != c.dev_graphs.empty())
    throw ValidationError("--dev-sentences and --dev-graphs go together");
  LoadedCorpus out;
  out.train = load_corpus(c.sentences, c.graphs);
  out.dev = c.dev_sentences.empty() ? out.train
                                    : load_corpus(c.dev_sentences, c.dev_graphs);
  if (!c.ctx.empty()) {
    out.ctx = ContextVectors::load(c.ctx);
    out.has_ctx = true;
    cfg.encoder.ctx_layers = out.ctx.layers;
    cfg.encoder.d_e = out.ctx.dim;
  }
  return out;
}

inline int run_train(const CorpusArgs& paths, HyperArgs& hyper,
                     const std::string& model_out) {
  PipelineConfig cfg = hyper.cfg;
  cfg.training.verbose = !hyper.quiet;
  LoadedCorpus data = load_train_dev(paths, cfg);
  Pipeline p = train_pipeline(data.train, data.dev, cfg,
                              data.has_ctx ? &data.ctx : nullptr);
  save_pipeline(p, model_out);
  nlohmann::ordered_json summary = {{"model", model_out},
                                    {"train_sentences", data.train.size()},
                                    {"dev_sentences", data.dev.size()},
                                    {"seed", cfg.training.seed}};
  std::cout << summary.dump() << "\n";
  std::cerr << "wrote " << model_out << "\n";
  return 0;
}

inline int run_parse(const std::string& model_path, const std::string& sentences_path,
                     const std::string& out_path, const std::string& format,
                     const std::string& ctx_path, int connected_override, int jobs) {
  Pipeline p = load_pipeline(model_path);
  if (connected_override >= 0) p.connected = connected_override > 0;
  std::vector<Sentence> sents = load_sentences(sentences_path);

  ContextVectors ctx;
  const ContextVectors* ctxp = nullptr;
  if (!ctx_path.empty()) {
    ctx = ContextVectors::load(ctx_path);
    ctxp = &ctx;
  } else if (p.tagger.enc_cfg.ctx_layers > 0) {
    std::cerr << "warning: model was trained with context vectors but none were "
                 "supplied; using zero vectors\n";
  }

  std::vector<std::pair<std::string, EdsGraph>> graphs(sents.size());
  parallel_for(sents.size(), jobs, [&](size_t i) {
    graphs[i] = {sents[i].id, parse_sentence(p, sents[i], ctxp)};
  });

  std::string text = format == "jsonl" ? graphs_to_jsonl(graphs) : format_graphs(graphs);
  if (out_path.empty())
    std::cout << text;
  else
    write_file(out_path, text);
  std::cerr << "parsed " << sents.size() << " sentences\n";
  return 0;
}

inline int check_threshold(double value, double fail_under, const std::string& name) {
  if (fail_under >= 0 && value < fail_under) {
    std::cerr << name << " " << fmt4(value) << " is below the required "
              << fmt4(fail_under) << "\n";
    return 1;
  }
  return 0;
}

inline int run_eval_smatch(const std::vector<std::pair<std::string, EdsGraph>>& pred,
                           const std::vector<std::pair<std::string, EdsGraph>>& gold,
                           const SmatchConfig& cfg, bool macro, double fail_under) {
  CorpusSmatch cs = corpus_smatch(pred, gold, cfg, macro);
  std::cout << cs.to_tsv();
  std::cerr << (macro ? "macro" : "micro") << " smatch F " << fmt4(cs.f) << " over "
            << cs.rows.size() << " graphs\n";
  return check_threshold(cs.f, fail_under, "smatch F");
}

inline int run_eval_dep(const std::vector<std::pair<std::string, EdsGraph>>& pred,
                        const std::vector<std::pair<std::string, EdsGraph>>& gold,
                        const SmatchConfig& cfg, double fail_under) {
  std::vector<const EdsGraph*> by_gold = pair_by_id(pred, gold);
  std::vector<DepMetrics> per(gold.size());
  parallel_for(gold.size(), cfg.jobs, [&](size_t i) {
    AlignmentMapping m = smatch(*by_gold[i], gold[i].second, cfg);
    per[i] = dep_metrics(gold[i].second, *by_gold[i], m.mapping);
  });
  std::ostringstream out;
  out << "id\tUP\tUR\tUF\tLP\tLR\tLF\n";
  DepMetrics all;
  for (size_t i = 0; i < gold.size(); ++i) {
    const DepMetrics& d = per[i];
    out << gold[i].first << '\t' << fmt4(d.up) << '\t' << fmt4(d.ur) << '\t'
        << fmt4(d.uf) << '\t' << fmt4(d.lp) << '\t' << fmt4(d.lr) << '\t'
        << fmt4(d.lf) << '\n';
    all.gold += d.gold;
    all.pred += d.pred;
    all.matched_unlabeled += d.matched_unlabeled;
    all.matched_labeled += d.matched_labeled;
  }
  all.finalize();
  out << "ALL\t" << fmt4(all.up) << '\t' << fmt4(all.ur) << '\t' << fmt4(all.uf)
      << '\t' << fmt4(all.lp) << '\t' << fmt4(all.lr) << '\t' << fmt4(all.lf) << '\n';
  std::cout << out.str();
  std::cerr << "labeled dependency F " << fmt4(all.lf) << " over " << gold.size()
            << " graphs\n";
  return check_threshold(all.lf, fail_under, "labeled F");
}

inline int run_eval_tags(const std::vector<std::pair<std::string, EdsGraph>>& pred,
                         const std::vector<std::pair<std::string, EdsGraph>>& gold,
                         const std::string& sentences_path, double fail_under) {
  if (sentences_path.empty())
    throw ValidationError("--mode tags needs --sentences to align graphs to tokens");
  std::vector<Sentence> sents = load_sentences(sentences_path);
  std::vector<Instance> gold_inst = pair_corpus(sents, gold);
  std::vector<Instance> pred_inst = pair_corpus(sents, pred);
  std::vector<std::vector<ConceptTag>> gold_tags, pred_tags;
  for (size_t i = 0; i < sents.size(); ++i) {
    gold_tags.push_back(compose_tags(gold_inst[i], align_nodes(gold_inst[i])));
    pred_tags.push_back(compose_tags(pred_inst[i], align_nodes(pred_inst[i])));
  }
  TagMetrics m = tag_metrics(gold_tags, pred_tags);
  std::cout << "tag_accuracy\tconcept_P\tconcept_R\tconcept_F\tP_defined\n"
            << fmt4(m.tag_accuracy) << '\t' << fmt4(m.precision) << '\t'
            << fmt4(m.recall) << '\t' << fmt4(m.f1) << '\t'
            << (m.precision_defined ? 1 : 0) << '\n';
  std::cerr << "concept F " << fmt4(m.f1) << " over " << sents.size()
            << " sentences\n";
  return check_threshold(m.f1, fail_under, "concept F");
}

inline int run_pheno(const std::string& sentences_path, const std::string& gold_path,
                     const std::vector<std::string>& system_specs,
                     const std::vector<std::string>& families,
                     const std::string& out_path) {
  std::vector<Sentence> sents = load_sentences(sentences_path);
  std::vector<PhenoTriple> gold = load_pheno_gold(gold_path);

  if (!families.empty()) {
    const auto& known = pheno_families();
    for (const std::string& f : families)
      if (std::find(known.begin(), known.end(), f) == known.end())
        throw ValidationError("unknown phenomenon family: " + f);
    std::vector<PhenoTriple> kept;
    for (PhenoTriple& t : gold)
      if (std::find(families.begin(), families.end(), t.phenomenon) != families.end())
        kept.push_back(std::move(t));
    gold = std::move(kept);
  }

  std::map<std::string, std::vector<std::pair<std::string, EdsGraph>>> systems;
  for (const std::string& spec : system_specs) {
    size_t eq = spec.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 >= spec.size())
      throw ValidationError("--system expects name=path, got '" + spec + "'");
    std::string name = spec.substr(0, eq);
    if (systems.count(name)) throw ValidationError("duplicate system name: " + name);
    systems[name] = load_graphs(spec.substr(eq + 1));
  }

  PhenoReport rep = pheno_score(gold, sents, systems);
  std::string csv = rep.to_csv();
  if (out_path.empty())
    std::cout << csv;
  else
    write_file(out_path, csv);
  std::cerr << "scored " << systems.size() << " system(s) on " << gold.size()
            << " gold dependencies\n";
  return 0;
}

inline int run_curve(const CorpusArgs& paths, HyperArgs& hyper,
                     const std::vector<double>& fractions,
                     const std::string& pheno_gold_path, int restarts) {
  PipelineConfig cfg = hyper.cfg;
  cfg.training.verbose = !hyper.quiet;
  LoadedCorpus data = load_train_dev(paths, cfg);

  CurveConfig ccfg;
  ccfg.fractions = fractions;
  ccfg.pipeline = cfg;
  ccfg.smatch_cfg.restarts = restarts;
  ccfg.smatch_cfg.seed = cfg.training.seed;

  std::vector<PhenoTriple> pheno_gold;
  bool has_pheno = !pheno_gold_path.empty();
  if (has_pheno) pheno_gold = load_pheno_gold(pheno_gold_path);

  auto points = learning_curve(data.train, data.dev, ccfg,
                               has_pheno ? &pheno_gold : nullptr,
                               data.has_ctx ? &data.ctx : nullptr);
  std::cout << curve_csv(points);
  std::cerr << "trained " << points.size() << " down-sampled models\n";
  return 0;
}

}  // namespace cli_detail

inline int cli_main(int argc, const char* const* argv) {
  using namespace cli_detail;

  CLI::App app{"Two-stage factorization-based semantic parser for EDS graphs"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read defaults from an INI file; flags win");

  // train
  auto* train_cmd = app.add_subcommand("train", "Train both stages, write one model file");
  CorpusArgs train_paths;
  HyperArgs train_hyper;
  std::string model_out;
  add_corpus_flags(train_cmd, train_paths);
  add_hyper_flags(train_cmd, train_hyper);
  train_cmd->add_option("--model", model_out, "Output model path")->required();

  // parse
  auto* parse_cmd = app.add_subcommand("parse", "Parse sentences with a trained model");
  std::string parse_model, parse_sentences, parse_out, parse_format = "eds", parse_ctx;
  int parse_jobs = 1;
  bool flag_connected = false, flag_no_connected = false;
  parse_cmd->add_option("--model", parse_model, "Model file")->required();
  parse_cmd->add_option("--sentences", parse_sentences, "Token file")->required();
  parse_cmd->add_option("--out", parse_out, "Output path; default standard output");
  parse_cmd->add_option("--format", parse_format, "eds or jsonl")
      ->check(CLI::IsMember({"eds", "jsonl"}));
  parse_cmd->add_option("--ctx", parse_ctx, "Per-token context vector file");
  parse_cmd->add_option("--jobs", parse_jobs, "Worker threads")
      ->check(CLI::PositiveNumber);
  parse_cmd->add_flag("--connected", flag_connected, "Force connected output");
  parse_cmd->add_flag("--no-connected", flag_no_connected, "Allow disconnected output");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Score predictions against gold graphs");
  std::string eval_mode, eval_pred, eval_gold, eval_sentences;
  SmatchConfig eval_smatch;
  bool eval_macro = false, eval_no_top = false;
  double fail_under = -1;
  eval_cmd->add_option("--mode", eval_mode, "smatch, dep, or tags")
      ->required()
      ->check(CLI::IsMember({"smatch", "dep", "tags"}));
  eval_cmd->add_option("--pred", eval_pred, "Predicted graph file")->required();
  eval_cmd->add_option("--gold", eval_gold, "Gold graph file")->required();
  eval_cmd->add_option("--sentences", eval_sentences, "Token file (tags mode)");
  eval_cmd->add_option("--restarts", eval_smatch.restarts, "Alignment restarts")
      ->check(CLI::PositiveNumber);
  eval_cmd->add_option("--seed", eval_smatch.seed, "Random seed")->envname("EDS_SEED");
  eval_cmd->add_option("--jobs", eval_smatch.jobs, "Worker threads")
      ->check(CLI::PositiveNumber);
  eval_cmd->add_flag("--macro", eval_macro, "Macro-average instead of micro");
  eval_cmd->add_flag("--no-top", eval_no_top, "Ignore top triples");
  eval_cmd->add_option("--fail-under", fail_under,
                       "Exit 1 when the headline metric is below this");

  // pheno
  auto* pheno_cmd = app.add_subcommand("pheno", "Phenomenon-wise recall report");
  std::string pheno_sentences, pheno_gold, pheno_out;
  std::vector<std::string> pheno_systems, pheno_families_filter;
  pheno_cmd->add_option("--sentences", pheno_sentences, "Token file")->required();
  pheno_cmd->add_option("--gold", pheno_gold, "Gold phenomenon TSV")->required();
  pheno_cmd->add_option("--system", pheno_systems, "name=graphs-path (repeatable)")
      ->required();
  pheno_cmd->add_option("--family", pheno_families_filter,
                        "Restrict to these phenomenon families");
  pheno_cmd->add_option("--out", pheno_out, "Output path; default standard output");

  // curve
  auto* curve_cmd = app.add_subcommand("curve", "Learning curve over nested subsets");
  CorpusArgs curve_paths;
  HyperArgs curve_hyper;
  std::vector<double> curve_fractions;
  std::string curve_pheno_gold;
  int curve_restarts = 20;
  add_corpus_flags(curve_cmd, curve_paths);
  add_hyper_flags(curve_cmd, curve_hyper);
  curve_cmd->add_option("--fractions", curve_fractions, "Ascending fractions in (0, 1]")
      ->required()
      ->delimiter(',');
  curve_cmd->add_option("--pheno-gold", curve_pheno_gold,
                        "Add per-family recall columns from this gold TSV");
  curve_cmd->add_option("--restarts", curve_restarts, "Alignment restarts")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (train_cmd->parsed()) return run_train(train_paths, train_hyper, model_out);
    if (parse_cmd->parsed()) {
      if (flag_connected && flag_no_connected)
        throw ValidationError("--connected and --no-connected conflict");
      int override_flag = flag_connected ? 1 : (flag_no_connected ? 0 : -1);
      return run_parse(parse_model, parse_sentences, parse_out, parse_format,
                       parse_ctx, override_flag, parse_jobs);
    }
    if (eval_cmd->parsed()) {
      eval_smatch.include_top = !eval_no_top;
      auto pred = load_graphs(eval_pred);
      auto gold = load_graphs(eval_gold);
      if (eval_mode == "smatch")
        return run_eval_smatch(pred, gold, eval_smatch, eval_macro, fail_under);
      if (eval_mode == "dep") return run_eval_dep(pred, gold, eval_smatch, fail_under);
      return run_eval_tags(pred, gold, eval_sentences, fail_under);
    }
    if (pheno_cmd->parsed())
      return run_pheno(pheno_sentences, pheno_gold, pheno_systems,
                       pheno_families_filter, pheno_out);
    if (curve_cmd->parsed())
      return run_curve(curve_paths, curve_hyper, curve_fractions, curve_pheno_gold,
                       curve_restarts);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}

}  // namespace eds
