#include "nse/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include <zlib.h>

namespace nse {

namespace {

constexpr char kMagic[4] = {'N', 'S', 'E', '1'};
constexpr std::uint32_t kMaxString = 1u << 20;

std::uint32_t checksum(const unsigned char* data, std::size_t n) {
  uLong crc = crc32(0L, Z_NULL, 0);
  while (n > 0) {
    uInt chunk = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
    crc = crc32(crc, data, chunk);
    data += chunk;
    n -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    auto c = static_cast<const unsigned char*>(p);
    out_.insert(out_.end(), c, c + n);
  }
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  void f32(double v) { u32(std::bit_cast<std::uint32_t>(static_cast<float>(v))); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  std::vector<unsigned char> take() { return std::move(out_); }

 private:
  std::vector<unsigned char> out_;
};

class Reader {
 public:
  Reader(const std::vector<unsigned char>& b, std::size_t end) : b_(b), end_(end) {}

  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return end_ - pos_; }

  [[noreturn]] void fail(const std::string& what, std::size_t at) const {
    throw FormatError("checkpoint: " + what + " at byte offset " + std::to_string(at), at);
  }
  void need(std::size_t n, const char* what) const {
    if (remaining() < n) fail(std::string("truncated while reading ") + what, pos_);
  }
  std::uint8_t u8(const char* what) {
    need(1, what);
    return b_[pos_++];
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(b_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(b_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }
  double f32(const char* what) { return static_cast<double>(std::bit_cast<float>(u32(what))); }
  double f64(const char* what) { return std::bit_cast<double>(u64(what)); }
  std::string str(const char* what) {
    std::size_t at = pos_;
    std::uint32_t n = u32(what);
    if (n > kMaxString) fail(std::string("implausible length for ") + what, at);
    need(n, what);
    std::string s(reinterpret_cast<const char*>(&b_[pos_]), n);
    pos_ += n;
    return s;
  }

 private:
  const std::vector<unsigned char>& b_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

void write_vocab(Writer& w, const Vocabulary& v) {
  w.u32(static_cast<std::uint32_t>(v.size()));
  for (const auto& t : v.tokens()) w.str(t);
}

Vocabulary read_vocab(Reader& r) {
  std::size_t at = r.offset();
  std::uint32_t n = r.u32("vocabulary size");
  if (n < kReservedTokens || n > r.remaining() / 4) r.fail("implausible vocabulary size", at);
  std::vector<std::string> tokens;
  tokens.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) tokens.push_back(r.str("vocabulary token"));
  try {
    return Vocabulary(std::move(tokens));
  } catch (const UsageError& e) {
    r.fail(e.what(), at);
  }
}

}  // namespace

std::vector<unsigned char> serialize_checkpoint(const Checkpoint& ck) {
  Writer w;
  w.bytes(kMagic, 4);
  w.u32(kCheckpointVersion);
  w.u8(ck.spec.encoder == EncoderKind::Lstm ? 0 : 1);
  w.u32(static_cast<std::uint32_t>(ck.spec.dim));
  write_vocab(w, ck.source_vocab);
  write_vocab(w, ck.target_vocab);
  w.u32(static_cast<std::uint32_t>(ck.params.size()));
  for (const auto& [name, p] : ck.params) {
    w.str(name);
    w.u32(static_cast<std::uint32_t>(p->rank()));
    for (auto d : p->shape) w.u32(static_cast<std::uint32_t>(d));
    for (double v : p->data) w.f32(v);
  }
  w.u8(ck.adam ? 1 : 0);
  if (ck.adam) {
    if (ck.adam->m.size() != ck.params.size())
      throw UsageError("checkpoint: adam state does not match parameters");
    w.u64(ck.adam->step);
    for (std::size_t k = 0; k < ck.adam->m.size(); ++k) {
      for (double v : ck.adam->m[k]) w.f32(v);
      for (double v : ck.adam->v[k]) w.f32(v);
    }
  }
  w.u32(ck.epoch);
  w.f64(ck.dev_bleu);
  w.f64(ck.dev_sari);
  auto bytes = w.take();
  std::uint32_t crc = checksum(bytes.data(), bytes.size());
  for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<unsigned char>(crc >> (8 * i)));
  return bytes;
}

Checkpoint deserialize_checkpoint(const std::vector<unsigned char>& bytes) {
  // The trailing four bytes are the checksum; fields are parsed from the rest.
  const std::size_t body = bytes.size() >= 4 ? bytes.size() - 4 : 0;
  Reader r(bytes, body);
  Checkpoint ck;
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) r.fail("bad magic", 0);
  for (int i = 0; i < 4; ++i) r.u8("magic");
  std::size_t at = r.offset();
  ck.version = r.u32("version");
  if (ck.version != kCheckpointVersion)
    r.fail("unsupported version " + std::to_string(ck.version), at);
  at = r.offset();
  std::uint8_t kind = r.u8("encoder kind");
  if (kind > 1) r.fail("unknown encoder kind " + std::to_string(kind), at);
  ck.spec.encoder = kind == 0 ? EncoderKind::Lstm : EncoderKind::Nse;
  at = r.offset();
  ck.spec.dim = r.u32("dim");
  if (ck.spec.dim == 0) r.fail("zero model dim", at);
  ck.source_vocab = read_vocab(r);
  ck.target_vocab = read_vocab(r);
  ck.spec.source_vocab = ck.source_vocab.size();
  ck.spec.target_vocab = ck.target_vocab.size();

  const auto expected = parameter_shapes(ck.spec);
  at = r.offset();
  std::uint32_t count = r.u32("parameter count");
  if (count != expected.size())
    r.fail("expected " + std::to_string(expected.size()) + " parameters, found " +
               std::to_string(count),
           at);
  for (std::uint32_t k = 0; k < count; ++k) {
    at = r.offset();
    std::string name = r.str("parameter name");
    auto it = expected.find(name);
    if (it == expected.end() || ck.params.contains(name))
      r.fail("unexpected parameter '" + name + "'", at);
    at = r.offset();
    std::uint32_t rank = r.u32("parameter rank");
    if (rank != it->second.size()) r.fail("wrong rank for " + name, at);
    Shape shape;
    for (std::uint32_t i = 0; i < rank; ++i) shape.push_back(r.u32("parameter dim"));
    if (shape != it->second) r.fail("wrong shape for " + name, at);
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    r.need(4 * n, "parameter values");
    std::vector<double> values(n);
    for (auto& v : values) {
      std::size_t vat = r.offset();
      v = r.f32("parameter value");
      if (!std::isfinite(v)) r.fail("non-finite value in " + name, vat);
    }
    ck.params.add(name, Tensor(shape, std::move(values)));
  }

  at = r.offset();
  std::uint8_t has_adam = r.u8("adam flag");
  if (has_adam > 1) r.fail("bad adam flag", at);
  if (has_adam) {
    AdamState adam;
    adam.step = r.u64("adam step");
    for (const auto& [_, p] : ck.params) {
      r.need(8 * p->size(), "adam moments");
      std::vector<double> m(p->size()), v(p->size());
      for (auto& x : m) x = r.f32("adam moment");
      for (auto& x : v) x = r.f32("adam moment");
      adam.m.push_back(std::move(m));
      adam.v.push_back(std::move(v));
    }
    ck.adam = std::move(adam);
  }
  ck.epoch = r.u32("epoch");
  ck.dev_bleu = r.f64("dev bleu");
  ck.dev_sari = r.f64("dev sari");
  if (r.remaining() != 0) r.fail("trailing bytes", r.offset());
  std::uint32_t stored = 0;
  for (int i = 0; i < 4; ++i) stored |= std::uint32_t(bytes[body + i]) << (8 * i);
  if (stored != checksum(bytes.data(), body)) r.fail("checksum mismatch", body);
  return ck;
}

void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  auto bytes = serialize_checkpoint(ck);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

Seq2Seq model_from_checkpoint(const Checkpoint& ck) { return Seq2Seq(ck.spec, ck.params.clone()); }

}  // namespace nse
