#include "nse/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace nse {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

SideStats stats_of(const std::vector<Sentence>& side) {
  SideStats s;
  std::set<std::string> types;
  s.sentences = side.size();
  for (const auto& sent : side) {
    s.tokens += sent.size();
    types.insert(sent.begin(), sent.end());
  }
  s.types = types.size();
  return s;
}

}  // namespace

Sentence tokenize(std::string_view line) {
  Sentence out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && is_space(line[i])) ++i;
    std::size_t j = i;
    while (j < line.size() && !is_space(line[j])) ++j;
    if (j > i) out.emplace_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::string join(const Sentence& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

const std::vector<std::string>& reserved_tokens() {
  static const std::vector<std::string> r{"<pad>", "<unk>", "<s>", "</s>"};
  return r;
}

Vocabulary::Vocabulary() : Vocabulary(reserved_tokens()) {}

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  const auto& reserved = reserved_tokens();
  if (tokens_.size() < kReservedTokens ||
      !std::equal(reserved.begin(), reserved.end(), tokens_.begin()))
    throw UsageError("vocabulary must start with the reserved tokens");
  for (std::size_t i = 0; i < tokens_.size(); ++i)
    if (!index_.emplace(tokens_[i], static_cast<int>(i)).second)
      throw UsageError("duplicate vocabulary token '" + tokens_[i] + "'");
}

int Vocabulary::id(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnkId : it->second;
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size())
    throw IndexError("token id " + std::to_string(id) + " outside vocabulary");
  return tokens_[id];
}

std::vector<int> Vocabulary::encode(const Sentence& s) const {
  std::vector<int> ids;
  ids.reserve(s.size());
  for (const auto& tok : s) ids.push_back(id(tok));
  return ids;
}

Sentence Vocabulary::decode(const std::vector<int>& ids) const {
  Sentence out;
  out.reserve(ids.size());
  for (int i : ids) out.push_back(token(i));
  return out;
}

SideStats ParallelCorpus::source_stats() const { return stats_of(source); }
SideStats ParallelCorpus::target_stats() const { return stats_of(target); }

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

ParallelCorpus load_parallel(const std::string& source_path, const std::string& target_path) {
  auto src = read_lines(source_path);
  auto tgt = read_lines(target_path);
  if (src.size() != tgt.size())
    throw AlignmentError(source_path + " has " + std::to_string(src.size()) + " lines but " +
                         target_path + " has " + std::to_string(tgt.size()));
  ParallelCorpus corpus;
  for (std::size_t i = 0; i < src.size(); ++i) {
    Sentence s = tokenize(src[i]);
    Sentence t = tokenize(tgt[i]);
    if (s.empty() || t.empty()) {
      ++corpus.dropped_empty;
      continue;
    }
    corpus.source.push_back(std::move(s));
    corpus.target.push_back(std::move(t));
  }
  return corpus;
}

std::size_t filter_long(ParallelCorpus& corpus, std::size_t max_tokens) {
  ParallelCorpus kept;
  kept.dropped_empty = corpus.dropped_empty;
  std::size_t dropped = 0;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (corpus.source[i].size() > max_tokens || corpus.target[i].size() > max_tokens) {
      ++dropped;
      continue;
    }
    kept.source.push_back(std::move(corpus.source[i]));
    kept.target.push_back(std::move(corpus.target[i]));
  }
  corpus = std::move(kept);
  return dropped;
}

Vocabulary build_vocab(const std::vector<Sentence>& side, std::size_t cap) {
  if (cap <= kReservedTokens)
    throw ConfigError("vocabulary cap must exceed " + std::to_string(kReservedTokens));
  std::map<std::string, std::size_t> freq;
  const auto& reserved = reserved_tokens();
  for (const auto& sent : side)
    for (const auto& tok : sent)
      if (std::find(reserved.begin(), reserved.end(), tok) == reserved.end()) ++freq[tok];
  std::vector<std::pair<std::string, std::size_t>> ranked(freq.begin(), freq.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> tokens = reserved;
  for (std::size_t i = 0; i < ranked.size() && tokens.size() < cap; ++i)
    tokens.push_back(ranked[i].first);
  return Vocabulary(std::move(tokens));
}

std::vector<std::string> export_vocab(const Vocabulary& v) { return v.tokens(); }

EmbeddingLoadResult load_pretrained_embeddings(const std::string& path, const Vocabulary& vocab,
                                               EmbeddingTable& table) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  if (table.vocab_size() != vocab.size())
    throw DimensionError("embedding table has " + std::to_string(table.vocab_size()) +
                         " rows but vocabulary has " + std::to_string(vocab.size()));
  const std::size_t dim = table.dim();
  EmbeddingLoadResult result;
  std::vector<bool> seen(vocab.size(), false);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    Sentence fields = tokenize(line);
    if (fields.empty()) continue;
    if (fields.size() != dim + 1)
      throw FormatError(path + ":" + std::to_string(lineno) + ": expected " +
                            std::to_string(dim) + " values, found " +
                            std::to_string(fields.size() - 1),
                        lineno);
    std::vector<double> values(dim);
    for (std::size_t j = 0; j < dim; ++j) {
      try {
        std::size_t used = 0;
        values[j] = std::stod(fields[j + 1], &used);
        if (used != fields[j + 1].size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw FormatError(path + ":" + std::to_string(lineno) + ": bad number '" +
                              fields[j + 1] + "'",
                          lineno);
      }
    }
    if (!vocab.contains(fields[0])) continue;
    int id = vocab.id(fields[0]);
    if (id < static_cast<int>(kReservedTokens)) continue;
    std::copy(values.begin(), values.end(), table.table->data.begin() + id * dim);
    if (!seen[id]) {
      seen[id] = true;
      ++result.hits;
    }
  }
  std::size_t content = vocab.size() - kReservedTokens;
  result.hit_rate = content ? double(result.hits) / double(content) : 0.0;
  return result;
}

std::vector<int> Batch::source_row(std::size_t b) const {
  std::vector<int> out;
  for (std::size_t j = 0; j < source[b].size(); ++j)
    if (source_mask[b][j]) out.push_back(source[b][j]);
  return out;
}

std::vector<int> Batch::target_row(std::size_t b) const {
  std::vector<int> out;
  for (std::size_t j = 0; j < target[b].size(); ++j)
    if (target_mask[b][j]) out.push_back(target[b][j]);
  return out;
}

std::vector<Batch> make_batches(const ParallelCorpus& corpus, const Vocabulary& source_vocab,
                                const Vocabulary& target_vocab, const BatchOptions& opts,
                                Rng& rng) {
  if (opts.batch_size == 0) throw ConfigError("batch size must be at least 1");
  std::vector<std::size_t> order(corpus.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);

  if (opts.bucket_by_length) {
    const std::size_t window = opts.batch_size * 100;
    for (std::size_t start = 0; start < order.size(); start += window) {
      auto first = order.begin() + start;
      auto last = order.begin() + std::min(order.size(), start + window);
      std::stable_sort(first, last, [&](std::size_t a, std::size_t b) {
        return corpus.source[a].size() < corpus.source[b].size();
      });
    }
  }

  std::vector<Batch> batches;
  for (std::size_t start = 0; start < order.size(); start += opts.batch_size) {
    Batch batch;
    std::size_t end = std::min(order.size(), start + opts.batch_size);
    batch.indices.assign(order.begin() + start, order.begin() + end);
    batch.size = batch.indices.size();
    std::size_t smax = 0, tmax = 0;
    for (auto i : batch.indices) {
      smax = std::max(smax, corpus.source[i].size());
      tmax = std::max(tmax, corpus.target[i].size());
    }
    for (auto i : batch.indices) {
      auto src = source_vocab.encode(corpus.source[i]);
      auto tgt = target_vocab.encode(corpus.target[i]);
      std::vector<int> s(smax, kPadId), t(tmax + 1, kPadId), ti(tmax + 1, kPadId);
      std::vector<unsigned char> sm(smax, 0), tm(tmax + 1, 0);
      for (std::size_t j = 0; j < src.size(); ++j) {
        s[j] = src[j];
        sm[j] = 1;
      }
      ti[0] = kBosId;
      for (std::size_t j = 0; j < tgt.size(); ++j) {
        t[j] = tgt[j];
        ti[j + 1] = tgt[j];
        tm[j] = 1;
      }
      t[tgt.size()] = kEosId;
      tm[tgt.size()] = 1;
      batch.source.push_back(std::move(s));
      batch.target.push_back(std::move(t));
      batch.target_input.push_back(std::move(ti));
      batch.source_mask.push_back(std::move(sm));
      batch.target_mask.push_back(std::move(tm));
    }
    batches.push_back(std::move(batch));
  }
  if (opts.bucket_by_length) std::shuffle(batches.begin(), batches.end(), rng);
  return batches;
}

}  // namespace nse
