#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "nse/checkpoint.hpp"
#include "nse/config.hpp"
#include "nse/search.hpp"

namespace nse {

namespace {

namespace fs = std::filesystem;

struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string dashed(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return key;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

Checkpoint open_checkpoint(const std::string& path) {
  try {
    return load_checkpoint(path);
  } catch (const IoError& e) {
    throw CheckpointError(e.what());
  } catch (const FormatError& e) {
    throw CheckpointError(std::string(path) + ": " + e.what());
  }
}

void require_file(const std::string& what, const std::string& path) {
  if (path.empty()) throw ConfigError("missing required setting " + what);
  if (!fs::is_regular_file(path)) throw IoError(what + ": cannot read " + path);
}

std::vector<Sentence> read_sentences(const std::string& path) {
  std::vector<Sentence> out;
  for (const auto& line : read_lines(path)) out.push_back(tokenize(line));
  return out;
}

// Sentences of `path` that must line up with `count` sources.
std::vector<Sentence> read_parallel(const std::string& path, std::size_t count) {
  auto sents = read_sentences(path);
  if (sents.size() != count)
    throw AlignmentError(path + " has " + std::to_string(sents.size()) + " lines, expected " +
                         std::to_string(count));
  return sents;
}

Hypothesis decode(const Seq2Seq& model, const std::vector<int>& ids, const SearchOptions& opts) {
  if (opts.beam == 1 && !opts.length_normalize) return greedy_decode(model, ids, opts.max_len);
  return beam_decode(model, ids, opts).best;
}

std::vector<Sentence> decode_all(const Checkpoint& ck, const Seq2Seq& model,
                                 const std::vector<Sentence>& sources, const SearchOptions& opts) {
  std::vector<Sentence> outputs;
  outputs.reserve(sources.size());
  for (const auto& src : sources) {
    if (src.empty()) {
      outputs.emplace_back();
      continue;
    }
    Hypothesis h = decode(model, ck.source_vocab.encode(src), opts);
    outputs.push_back(replace_unks(h, src, ck.target_vocab));
  }
  return outputs;
}

void echo(std::ostream& err, const std::vector<Setting>& settings) {
  for (const auto& [k, v] : settings) err << k << "=" << v << "\n";
}

// ---- train ----

struct TrainArgs {
  std::string config_file;
  std::map<std::string, std::string> values;
};

int cmd_train(const TrainArgs& args, const CLI::App& sub, std::ostream& out, std::ostream& err) {
  std::vector<Setting> file_settings;
  if (!args.config_file.empty()) file_settings = read_config_file(args.config_file);
  std::vector<Setting> overrides;
  for (const auto& key : config_keys()) {
    auto opt = sub.get_option("--" + dashed(key));
    if (opt->count() > 0) overrides.emplace_back(key, args.values.at(key));
  }
  RunConfig cfg = build_config(file_settings, overrides);
  echo(err, effective_settings(cfg));

  if (cfg.checkpoint_dir.empty()) throw ConfigError("missing required setting checkpoint_dir");
  require_file("train_src", cfg.train_src);
  require_file("train_tgt", cfg.train_tgt);
  require_file("dev_src", cfg.dev_src);
  require_file("dev_tgt", cfg.dev_tgt);
  for (const auto& r : cfg.dev_refs) require_file("dev_refs", r);
  if (!cfg.embeddings.empty()) require_file("embeddings", cfg.embeddings);

  ParallelCorpus corpus = load_parallel(cfg.train_src, cfg.train_tgt);
  if (corpus.dropped_empty > 0)
    err << "warning: dropped " << corpus.dropped_empty << " training pairs with an empty side\n";
  auto s = corpus.source_stats();
  auto t = corpus.target_stats();
  err << "train pairs=" << corpus.size() << " src_tokens_per_sentence=" << fixed(s.mean_length(), 2)
      << " tgt_tokens_per_sentence=" << fixed(t.mean_length(), 2) << "\n";

  DevSet dev;
  dev.source = read_sentences(cfg.dev_src);
  std::vector<std::vector<Sentence>> ref_files{read_parallel(cfg.dev_tgt, dev.source.size())};
  for (const auto& r : cfg.dev_refs) ref_files.push_back(read_parallel(r, dev.source.size()));
  dev.references.resize(dev.source.size());
  for (std::size_t i = 0; i < dev.source.size(); ++i)
    for (const auto& f : ref_files) dev.references[i].push_back(f[i]);

  const TrainConfig& tc = cfg.train;
  if (corpus.size() == 0) throw IoError(cfg.train_src + ": no usable training pairs");
  Vocabulary sv = build_vocab(corpus.source, tc.vocab_size);
  Vocabulary tv = build_vocab(corpus.target, tc.vocab_size);
  Rng rng(tc.seed);
  Seq2Seq model(ModelSpec{tc.encoder, tc.dim, sv.size(), tv.size()}, rng,
                InitOptions{tc.init_range, tc.forget_bias_one});
  if (!cfg.embeddings.empty()) {
    auto hs = load_pretrained_embeddings(cfg.embeddings, sv, model.source_embeddings());
    auto ht = load_pretrained_embeddings(cfg.embeddings, tv, model.target_embeddings());
    err << "embeddings source_hit_rate=" << fixed(hs.hit_rate, 4)
        << " target_hit_rate=" << fixed(ht.hit_rate, 4) << "\n";
  }

  fs::create_directories(cfg.checkpoint_dir);
  const fs::path dir(cfg.checkpoint_dir);
  std::ofstream log((dir / "train.log").string(), std::ios::trunc);
  if (!log) throw IoError("cannot write " + (dir / "train.log").string());

  TrainHooks hooks;
  hooks.on_epoch = [&](const EpochRecord& r) {
    const std::string line = format_record(r);
    out << line << "\n";
    out.flush();
    log << line << "\n";
    log.flush();
  };
  TrainResult result = train(tc, model, sv, tv, corpus, dev, hooks);
  if (result.dropped_long > 0)
    err << "warning: dropped " << result.dropped_long << " training pairs longer than "
        << tc.max_train_len << " tokens\n";
  save_checkpoint(result.best, (dir / "best.ckpt").string());
  save_checkpoint(result.last, (dir / "last.ckpt").string());
  const auto& best = result.log[result.best_index];
  err << "selected epoch=" << best.epoch << " dev_bleu=" << fixed(best.dev_bleu, 4)
      << " dev_sari=" << fixed(best.dev_sari, 4) << "\n";
  return kExitOk;
}

// ---- simplify ----

struct SimplifyArgs {
  std::string checkpoint;
  std::string input;
  std::size_t beam = 1;
  std::size_t max_len = 100;
  bool length_normalize = false;
};

int cmd_simplify(const SimplifyArgs& a, std::ostream& out, std::ostream& err) {
  echo(err, {{"checkpoint", a.checkpoint},
             {"input", a.input},
             {"beam", std::to_string(a.beam)},
             {"max_len", std::to_string(a.max_len)},
             {"length_normalize", a.length_normalize ? "true" : "false"}});
  if (a.beam < 1) throw ConfigError("beam must be at least 1");
  if (a.max_len < 1) throw ConfigError("max_len must be at least 1");
  Checkpoint ck = open_checkpoint(a.checkpoint);
  auto sources = read_sentences(a.input);
  Seq2Seq model = model_from_checkpoint(ck);
  for (const auto& s : decode_all(ck, model, sources, {a.beam, a.max_len, a.length_normalize}))
    out << join(s) << "\n";
  return kExitOk;
}

// ---- evaluate ----

struct EvaluateArgs {
  std::string checkpoint;
  std::string source;
  std::vector<std::string> refs;
  std::string beams = "1,5,10";
  std::size_t max_len = 100;
  bool case_sensitive = false;
};

std::vector<std::size_t> parse_beams(const std::string& text) {
  RunConfig tmp;
  apply_setting(tmp, "beams", text);
  return tmp.beams;
}

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out, std::ostream& err) {
  std::string refs;
  for (std::size_t i = 0; i < a.refs.size(); ++i) refs += (i ? "," : "") + a.refs[i];
  echo(err, {{"checkpoint", a.checkpoint},
             {"source", a.source},
             {"refs", refs},
             {"beams", a.beams},
             {"max_len", std::to_string(a.max_len)},
             {"lowercase_metrics", a.case_sensitive ? "false" : "true"}});
  const auto beams = parse_beams(a.beams);
  for (auto b : beams)
    if (b < 1) throw ConfigError("beams entries must be at least 1");
  if (a.max_len < 1) throw ConfigError("max_len must be at least 1");
  Checkpoint ck = open_checkpoint(a.checkpoint);
  auto sources = read_sentences(a.source);
  std::vector<std::vector<Sentence>> references(sources.size());
  for (const auto& path : a.refs) {
    auto r = read_parallel(path, sources.size());
    for (std::size_t i = 0; i < r.size(); ++i) references[i].push_back(std::move(r[i]));
  }
  if (sources.empty()) throw IoError(a.source + ": no sentences to evaluate");
  Seq2Seq model = model_from_checkpoint(ck);

  std::vector<MetricReport> reports;
  for (auto b : beams) {
    auto outputs = decode_all(ck, model, sources, {b, a.max_len, false});
    reports.push_back(score_outputs(sources, outputs, references, !a.case_sensitive));
  }
  std::size_t best_bleu = 0, best_sari = 0;
  for (std::size_t i = 1; i < reports.size(); ++i) {
    if (reports[i].bleu > reports[best_bleu].bleu) best_bleu = i;
    if (reports[i].sari.sari > reports[best_sari].sari.sari) best_sari = i;
  }

  char line[160];
  std::snprintf(line, sizeof line, "%-6s %10s %10s %8s %8s %8s\n", "beam", "BLEU", "SARI", "keep",
                "del", "add");
  out << line;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& r = reports[i];
    std::string bleu = fixed(r.bleu, 2) + (i == best_bleu ? "*" : " ");
    std::string sari = fixed(r.sari.sari, 2) + (i == best_sari ? "*" : " ");
    std::snprintf(line, sizeof line, "%-6zu %10s %10s %8.4f %8.4f %8.4f\n", beams[i], bleu.c_str(),
                  sari.c_str(), r.sari.keep, r.sari.del, r.sari.add);
    out << line;
  }
  out << "\n";
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& r = reports[i];
    out << "beam=" << beams[i] << " bleu=" << fixed(r.bleu, 6) << " sari=" << fixed(r.sari.sari, 6)
        << " keep=" << fixed(r.sari.keep, 6) << " del=" << fixed(r.sari.del, 6)
        << " add=" << fixed(r.sari.add, 6) << " sentences=" << r.instances
        << " refs=" << a.refs.size() << "\n";
  }
  out << "best_bleu_beam=" << beams[best_bleu] << " best_sari_beam=" << beams[best_sari] << "\n";
  return kExitOk;
}

// ---- inspect ----

struct InspectArgs {
  std::string checkpoint;
  std::string sentence;
  std::size_t max_len = 100;
};

void print_grid(std::ostream& out, const std::string& name, const std::vector<std::string>& labels,
                const std::vector<std::vector<double>>& rows, std::size_t cols) {
  out << name << " " << rows.size() << "x" << cols << "\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out << labels[i];
    for (double v : rows[i]) out << "\t" << fixed(v, 10);
    out << "\n";
  }
}

int cmd_inspect(const InspectArgs& a, std::ostream& out, std::ostream& err) {
  echo(err, {{"checkpoint", a.checkpoint},
             {"sentence", a.sentence},
             {"max_len", std::to_string(a.max_len)}});
  if (a.max_len < 1) throw ConfigError("max_len must be at least 1");
  Checkpoint ck = open_checkpoint(a.checkpoint);
  Sentence src = tokenize(a.sentence);
  if (src.empty()) throw ConfigError("inspect needs a non-empty sentence");
  Seq2Seq model = model_from_checkpoint(ck);
  const auto ids = ck.source_vocab.encode(src);

  Hypothesis h = greedy_decode(model, ids, a.max_len);
  Sentence output = replace_unks(h, src, ck.target_vocab);
  out << "source\t" << join(src) << "\n";
  out << "output\t" << join(output) << "\n";
  print_grid(out, "alpha", output, h.alignments, src.size());

  if (ck.spec.encoder == EncoderKind::Lstm) {
    err << "note: the lstm encoder keeps no memory, so there is no sigma trace; printing alpha only\n";
    return kExitOk;
  }
  Tape tape(false);
  EncoderOutput enc = model.encode(tape, ids, RunMode{false, 0.0, nullptr, true});
  std::vector<std::string> steps;
  for (std::size_t t = 0; t < enc.trace->sigma.size(); ++t)
    steps.push_back(std::to_string(t + 1) + ":" + src[t]);
  print_grid(out, "sigma", steps, enc.trace->sigma, src.size());
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"NSE sentence simplification"};
  app.require_subcommand(1);

  TrainArgs train_args;
  auto train_cmd = app.add_subcommand("train", "Train a model; writes best.ckpt, last.ckpt, train.log");
  train_cmd->add_option("--config", train_args.config_file, "key=value config file");
  for (const auto& key : config_keys())
    train_cmd->add_option("--" + dashed(key), train_args.values[key]);

  SimplifyArgs simplify_args;
  auto simplify_cmd = app.add_subcommand("simplify", "Simplify one sentence per input line");
  simplify_cmd->add_option("--checkpoint", simplify_args.checkpoint)->required();
  simplify_cmd->add_option("--input", simplify_args.input)->required();
  simplify_cmd->add_option("--beam", simplify_args.beam);
  simplify_cmd->add_option("--max-len", simplify_args.max_len);
  simplify_cmd->add_flag("--length-normalize", simplify_args.length_normalize);

  EvaluateArgs eval_args;
  auto eval_cmd = app.add_subcommand("evaluate", "Score BLEU and SARI for several beam sizes");
  eval_cmd->add_option("--checkpoint", eval_args.checkpoint)->required();
  eval_cmd->add_option("--source", eval_args.source)->required();
  eval_cmd->add_option("--refs", eval_args.refs, "one or more reference files")->required();
  eval_cmd->add_option("--beams", eval_args.beams);
  eval_cmd->add_option("--max-len", eval_args.max_len);
  eval_cmd->add_flag("--case-sensitive", eval_args.case_sensitive);

  InspectArgs inspect_args;
  auto inspect_cmd = app.add_subcommand("inspect", "Print attention and NSE read weights");
  inspect_cmd->add_option("--checkpoint", inspect_args.checkpoint)->required();
  inspect_cmd->add_option("--sentence", inspect_args.sentence)->required();
  inspect_cmd->add_option("--max-len", inspect_args.max_len);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*train_cmd) return cmd_train(train_args, *train_cmd, out, err);
    if (*simplify_cmd) return cmd_simplify(simplify_args, out, err);
    if (*eval_cmd) return cmd_evaluate(eval_args, out, err);
    if (*inspect_cmd) return cmd_inspect(inspect_args, out, err);
  } catch (const CheckpointError& e) {
    err << "error: " << e.what() << "\n";
    return kExitCheckpoint;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const AlignmentError& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace nse
