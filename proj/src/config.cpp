#include "nse/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace nse {

namespace {

std::string trim(const std::string& s) {
  const char* ws = " \t\r\n";
  auto b = s.find_first_not_of(ws);
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string fmt_bool(bool b) { return b ? "true" : "false"; }

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string join_list(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? "," : "") + items[i];
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw ConfigError(key + ": expected a number, got '" + v + "'");
}

std::size_t to_size(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    if (!v.empty() && v[0] != '-') {
      unsigned long long n = std::stoull(v, &used);
      if (used == v.size()) return static_cast<std::size_t>(n);
    }
  } catch (const std::exception&) {
  }
  throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

}  // namespace

const std::vector<PresetValues>& presets() {
  static const std::vector<PresetValues> p{
      {"newsela", 20000, 22.0},
      {"wikismall", 30000, 33.0},
      {"wikilarge", 30000, 77.0},
  };
  return p;
}

std::vector<std::string> config_keys() {
  return {"preset",          "encoder",          "dim",
          "vocab_size",      "lr",               "beta1",
          "beta2",           "adam_eps",         "batch_size",
          "dropout",         "epochs",           "tune_metric",
          "sari_bleu_threshold", "seed",         "init_range",
          "forget_bias_one", "clip_norm",        "max_train_len",
          "bucket_by_length", "dev_max_len",     "lowercase_metrics",
          "train_src",       "train_tgt",        "dev_src",
          "dev_tgt",         "dev_refs",         "embeddings",
          "checkpoint_dir",  "beam",             "beams",
          "max_len",         "length_normalize", "smooth_bleu"};
}

std::vector<Setting> parse_config_text(const std::string& text, const std::string& origin) {
  const auto keys = config_keys();
  std::vector<Setting> out;
  std::stringstream ss(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key=value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (std::find(keys.begin(), keys.end(), key) == keys.end())
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
    out.emplace_back(key, value);
  }
  return out;
}

std::vector<Setting> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path);
}

void apply_preset(RunConfig& cfg, const std::string& name) {
  for (const auto& p : presets()) {
    if (p.name != name) continue;
    cfg.preset = name;
    cfg.train.vocab_size = p.vocab_size;
    cfg.train.sari_bleu_threshold = p.sari_bleu_threshold;
    return;
  }
  throw ConfigError("unknown preset '" + name + "' (expected newsela, wikismall or wikilarge)");
}

void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value) {
  TrainConfig& t = cfg.train;
  if (key == "preset") apply_preset(cfg, value);
  else if (key == "encoder") t.encoder = parse_encoder_kind(value);
  else if (key == "dim") t.dim = to_size(key, value);
  else if (key == "vocab_size") t.vocab_size = to_size(key, value);
  else if (key == "lr") {
    t.lr = to_double(key, value);
    cfg.lr_explicit = true;
  }
  else if (key == "beta1") t.beta1 = to_double(key, value);
  else if (key == "beta2") t.beta2 = to_double(key, value);
  else if (key == "adam_eps") t.adam_eps = to_double(key, value);
  else if (key == "batch_size") t.batch_size = to_size(key, value);
  else if (key == "dropout") t.dropout = to_double(key, value);
  else if (key == "epochs") t.max_epochs = to_size(key, value);
  else if (key == "tune_metric") t.tune_metric = parse_tune_metric(value);
  else if (key == "sari_bleu_threshold") t.sari_bleu_threshold = to_double(key, value);
  else if (key == "seed") t.seed = to_size(key, value);
  else if (key == "init_range") t.init_range = to_double(key, value);
  else if (key == "forget_bias_one") t.forget_bias_one = to_bool(key, value);
  else if (key == "clip_norm") t.clip_norm = to_double(key, value);
  else if (key == "max_train_len") t.max_train_len = to_size(key, value);
  else if (key == "bucket_by_length") t.bucket_by_length = to_bool(key, value);
  else if (key == "dev_max_len") t.dev_max_len = to_size(key, value);
  else if (key == "lowercase_metrics") t.lowercase_metrics = to_bool(key, value);
  else if (key == "train_src") cfg.train_src = value;
  else if (key == "train_tgt") cfg.train_tgt = value;
  else if (key == "dev_src") cfg.dev_src = value;
  else if (key == "dev_tgt") cfg.dev_tgt = value;
  else if (key == "dev_refs") cfg.dev_refs = split_list(value);
  else if (key == "embeddings") cfg.embeddings = value;
  else if (key == "checkpoint_dir") cfg.checkpoint_dir = value;
  else if (key == "beam") cfg.beam = to_size(key, value);
  else if (key == "beams") {
    cfg.beams.clear();
    for (const auto& b : split_list(value)) cfg.beams.push_back(to_size(key, b));
    if (cfg.beams.empty()) throw ConfigError("beams: empty list");
  }
  else if (key == "max_len") cfg.max_len = to_size(key, value);
  else if (key == "length_normalize") cfg.length_normalize = to_bool(key, value);
  else if (key == "smooth_bleu") cfg.smooth_bleu = to_bool(key, value);
  else throw ConfigError("unknown key '" + key + "'");
}

RunConfig build_config(const std::vector<Setting>& file_settings,
                       const std::vector<Setting>& overrides) {
  RunConfig cfg;
  std::string preset;
  for (const auto& [k, v] : file_settings)
    if (k == "preset") preset = v;
  for (const auto& [k, v] : overrides)
    if (k == "preset") preset = v;
  if (!preset.empty()) apply_preset(cfg, preset);
  for (const auto& [k, v] : file_settings)
    if (k != "preset") apply_setting(cfg, k, v);
  for (const auto& [k, v] : overrides)
    if (k != "preset") apply_setting(cfg, k, v);
  if (!cfg.lr_explicit) cfg.train.lr = default_learning_rate(cfg.train.encoder);
  cfg.train.validate();
  if (cfg.beam < 1) throw ConfigError("beam must be at least 1");
  for (auto b : cfg.beams)
    if (b < 1) throw ConfigError("beams entries must be at least 1");
  if (cfg.max_len < 1) throw ConfigError("max_len must be at least 1");
  return cfg;
}

std::vector<Setting> effective_settings(const RunConfig& cfg) {
  const TrainConfig& t = cfg.train;
  std::vector<std::string> beams;
  for (auto b : cfg.beams) beams.push_back(std::to_string(b));
  return {
      {"preset", cfg.preset.empty() ? "none" : cfg.preset},
      {"encoder", to_string(t.encoder)},
      {"dim", std::to_string(t.dim)},
      {"vocab_size", std::to_string(t.vocab_size)},
      {"init_range", fmt_double(t.init_range)},
      {"lr", fmt_double(t.lr)},
      {"beta1", fmt_double(t.beta1)},
      {"beta2", fmt_double(t.beta2)},
      {"adam_eps", fmt_double(t.adam_eps)},
      {"batch_size", std::to_string(t.batch_size)},
      {"dropout", fmt_double(t.dropout)},
      {"epochs", std::to_string(t.max_epochs)},
      {"tune_metric", to_string(t.tune_metric)},
      {"sari_bleu_threshold", fmt_double(t.sari_bleu_threshold)},
      {"seed", std::to_string(t.seed)},
      {"forget_bias_one", fmt_bool(t.forget_bias_one)},
      {"clip_norm", fmt_double(t.clip_norm)},
      {"max_train_len", std::to_string(t.max_train_len)},
      {"bucket_by_length", fmt_bool(t.bucket_by_length)},
      {"dev_max_len", std::to_string(t.dev_max_len)},
      {"lowercase_metrics", fmt_bool(t.lowercase_metrics)},
      {"beam", std::to_string(cfg.beam)},
      {"beams", join_list(beams)},
      {"max_len", std::to_string(cfg.max_len)},
      {"length_normalize", fmt_bool(cfg.length_normalize)},
      {"smooth_bleu", fmt_bool(cfg.smooth_bleu)},
      {"train_src", cfg.train_src},
      {"train_tgt", cfg.train_tgt},
      {"dev_src", cfg.dev_src},
      {"dev_tgt", cfg.dev_tgt},
      {"dev_refs", join_list(cfg.dev_refs)},
      {"embeddings", cfg.embeddings},
      {"checkpoint_dir", cfg.checkpoint_dir},
  };
}

std::string render_config(const RunConfig& cfg) {
  std::string out;
  for (const auto& [k, v] : effective_settings(cfg)) out += k + "=" + v + "\n";
  return out;
}

}  // namespace nse
