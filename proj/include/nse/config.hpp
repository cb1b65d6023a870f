#ifndef NSE_CONFIG_HPP
#define NSE_CONFIG_HPP

#include <string>
#include <utility>
#include <vector>

#include "nse/train.hpp"

namespace nse {

using Setting = std::pair<std::string, std::string>;

struct PresetValues {
  std::string name;
  std::size_t vocab_size;
  double sari_bleu_threshold;
};

// newsela, wikismall, wikilarge
const std::vector<PresetValues>& presets();

struct RunConfig {
  TrainConfig train;
  bool lr_explicit = false;
  std::string preset;

  std::string train_src;
  std::string train_tgt;
  std::string dev_src;
  std::string dev_tgt;
  std::vector<std::string> dev_refs;  // extra reference files for the dev set
  std::string embeddings;
  std::string checkpoint_dir;

  std::size_t beam = 1;
  std::size_t max_len = 100;
  std::vector<std::size_t> beams{1, 5, 10};
  bool length_normalize = false;
  bool smooth_bleu = false;
};

std::vector<std::string> config_keys();

// Lines of key=value; '#' starts a comment. Throws ConfigError naming
// the line for malformed lines and unknown keys.
std::vector<Setting> parse_config_text(const std::string& text, const std::string& origin);
std::vector<Setting> read_config_file(const std::string& path);

void apply_preset(RunConfig& cfg, const std::string& name);
void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value);

// Preset first (override beats file), then file settings, then overrides.
// The learning rate follows the encoder kind unless set explicitly.
RunConfig build_config(const std::vector<Setting>& file_settings,
                       const std::vector<Setting>& overrides);

// Effective configuration as key=value pairs in a fixed order.
std::vector<Setting> effective_settings(const RunConfig& cfg);
std::string render_config(const RunConfig& cfg);

}  // namespace nse

#endif  // NSE_CONFIG_HPP
