#ifndef NSE_CORPUS_HPP
#define NSE_CORPUS_HPP

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "nse/layers.hpp"

namespace nse {

inline constexpr int kPadId = 0;
inline constexpr int kUnkId = 1;
inline constexpr int kBosId = 2;
inline constexpr int kEosId = 3;
inline constexpr std::size_t kReservedTokens = 4;

using Sentence = std::vector<std::string>;

// Splits on ASCII whitespace; tokens are opaque byte strings.
Sentence tokenize(std::string_view line);
std::string join(const Sentence& tokens);

class Vocabulary {
 public:
  Vocabulary();  // reserved tokens only
  explicit Vocabulary(std::vector<std::string> tokens);  // id order, reserved first

  int id(const std::string& token) const;  // UNK when absent
  const std::string& token(int id) const;
  bool contains(const std::string& token) const { return index_.count(token) != 0; }
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  std::vector<int> encode(const Sentence& s) const;
  Sentence decode(const std::vector<int>& ids) const;

  bool operator==(const Vocabulary& o) const { return tokens_ == o.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

const std::vector<std::string>& reserved_tokens();

struct SideStats {
  std::size_t sentences = 0;
  std::size_t tokens = 0;
  std::size_t types = 0;
  double mean_length() const { return sentences ? double(tokens) / double(sentences) : 0.0; }
};

struct ParallelCorpus {
  std::vector<Sentence> source;
  std::vector<Sentence> target;
  std::size_t dropped_empty = 0;

  std::size_t size() const { return source.size(); }
  SideStats source_stats() const;
  SideStats target_stats() const;
};

std::vector<std::string> read_lines(const std::string& path);

// One pre-tokenized sentence per line, parallel by line number. Pairs with
// an empty side are dropped and counted.
ParallelCorpus load_parallel(const std::string& source_path, const std::string& target_path);

// Drops pairs where either side exceeds max_tokens; returns how many.
std::size_t filter_long(ParallelCorpus& corpus, std::size_t max_tokens);

// Keeps the (cap - 4) most frequent tokens; frequency ties go to the
// lexicographically smaller token.
Vocabulary build_vocab(const std::vector<Sentence>& side, std::size_t cap);

std::vector<std::string> export_vocab(const Vocabulary& v);

struct EmbeddingLoadResult {
  std::size_t hits = 0;
  double hit_rate = 0.0;  // hits over non-reserved vocabulary entries
};

// Lines of "token v1 ... v_dim". Rows of in-vocabulary tokens are
// overwritten; the rest keep their current values.
EmbeddingLoadResult load_pretrained_embeddings(const std::string& path, const Vocabulary& vocab,
                                               EmbeddingTable& table);

struct Batch {
  std::size_t size = 0;
  std::vector<std::size_t> indices;           // corpus positions
  std::vector<std::vector<int>> source;       // [B x S_max], PAD filled
  std::vector<std::vector<int>> target;       // [B x (T_max + 1)], y_1..y_T EOS then PAD
  std::vector<std::vector<int>> target_input; // [B x (T_max + 1)], BOS y_1..y_T then PAD
  std::vector<std::vector<unsigned char>> source_mask;
  std::vector<std::vector<unsigned char>> target_mask;

  std::vector<int> source_row(std::size_t b) const;  // unpadded
  std::vector<int> target_row(std::size_t b) const;  // unpadded, ends with EOS
};

struct BatchOptions {
  std::size_t batch_size = 32;
  bool bucket_by_length = false;
};

// Shuffled, padded batches. With bucketing the shuffled order is sorted by
// source length inside windows of 100 batches before slicing.
std::vector<Batch> make_batches(const ParallelCorpus& corpus, const Vocabulary& source_vocab,
                                const Vocabulary& target_vocab, const BatchOptions& opts, Rng& rng);

}  // namespace nse

#endif  // NSE_CORPUS_HPP
