#include "marginlm/checkpoint.h"

#include <bit>
#include <cstring>
#include <fstream>

#include "marginlm/common.h"

namespace marginlm {

namespace {

constexpr char kMagic[4] = {'M', 'L', 'M', '1'};

void PutU32(std::ostream& out, std::uint32_t v) {
  unsigned char buf[4] = {
      static_cast<unsigned char>(v & 0xFF),
      static_cast<unsigned char>((v >> 8) & 0xFF),
      static_cast<unsigned char>((v >> 16) & 0xFF),
      static_cast<unsigned char>((v >> 24) & 0xFF),
  };
  out.write(reinterpret_cast<const char*>(buf), 4);
}

void PutF64(std::ostream& out, double d) {
  std::uint64_t v = std::bit_cast<std::uint64_t>(d);
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
  out.write(reinterpret_cast<const char*>(buf), 8);
}

class Reader {
 public:
  Reader(std::istream& in, const std::string& path) : in_(in), path_(path) {}

  std::uint32_t U32() {
    unsigned char buf[4];
    Bytes(buf, 4);
    return static_cast<std::uint32_t>(buf[0]) | (static_cast<std::uint32_t>(buf[1]) << 8) |
           (static_cast<std::uint32_t>(buf[2]) << 16) |
           (static_cast<std::uint32_t>(buf[3]) << 24);
  }

  double F64() {
    unsigned char buf[8];
    Bytes(buf, 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return std::bit_cast<double>(v);
  }

  std::string Str(std::uint32_t len) {
    std::string s(len, '\0');
    if (len > 0) Bytes(reinterpret_cast<unsigned char*>(s.data()), len);
    return s;
  }

  void Bytes(unsigned char* dst, std::size_t n) {
    in_.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n)
      throw MarginlmError("checkpoint format error (truncated file): " + path_);
  }

  bool AtEof() {
    return in_.peek() == std::char_traits<char>::eof();
  }

 private:
  std::istream& in_;
  const std::string& path_;
};

}  // namespace

void SaveCheckpoint(const ModelParams& model, const Vocabulary& vocab,
                    const std::string& path) {
  if (vocab.size() != model.vocab_size)
    throw MarginlmError("save_checkpoint: vocabulary size does not match model");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw MarginlmError("cannot write checkpoint: " + path);

  out.write(kMagic, 4);
  PutU32(out, static_cast<std::uint32_t>(model.vocab_size));
  PutU32(out, static_cast<std::uint32_t>(model.embed_dim));
  PutU32(out, static_cast<std::uint32_t>(model.hidden_dim));
  for (const auto& tok : vocab.tokens()) {
    PutU32(out, static_cast<std::uint32_t>(tok.size()));
    out.write(tok.data(), static_cast<std::streamsize>(tok.size()));
  }
  for (const Matrix* m : {&model.emb, &model.u, &model.v_rec, &model.w})
    for (double d : m->data()) PutF64(out, d);
  for (double d : model.b) PutF64(out, d);
  if (!out) throw MarginlmError("write failed: " + path);
}

std::pair<ModelParams, Vocabulary> LoadCheckpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MarginlmError("cannot open checkpoint: " + path);
  Reader r(in, path);

  unsigned char magic[4];
  r.Bytes(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0)
    throw MarginlmError("checkpoint format error (bad magic): " + path);

  const std::uint32_t V = r.U32(), E = r.U32(), H = r.U32();
  constexpr std::uint32_t kDimCap = 1u << 24;
  if (V < 4 || E < 1 || H < 1 || V > kDimCap || E > kDimCap || H > kDimCap)
    throw MarginlmError("checkpoint format error (bad dimensions): " + path);

  std::vector<std::string> tokens;
  tokens.reserve(V);
  for (std::uint32_t i = 0; i < V; ++i) {
    std::uint32_t len = r.U32();
    if (len > (1u << 20))
      throw MarginlmError("checkpoint format error (token length): " + path);
    tokens.push_back(r.Str(len));
  }

  ModelParams m;
  m.vocab_size = static_cast<std::int32_t>(V);
  m.embed_dim = static_cast<std::int32_t>(E);
  m.hidden_dim = static_cast<std::int32_t>(H);
  m.emb = Matrix(m.vocab_size, m.embed_dim);
  m.u = Matrix(m.hidden_dim, m.embed_dim);
  m.v_rec = Matrix(m.hidden_dim, m.hidden_dim);
  m.w = Matrix(m.vocab_size, m.hidden_dim);
  m.b.assign(V, 0.0);
  for (Matrix* mat : {&m.emb, &m.u, &m.v_rec, &m.w})
    for (double& d : mat->data()) d = r.F64();
  for (double& d : m.b) d = r.F64();

  if (!r.AtEof())
    throw MarginlmError("checkpoint format error (trailing bytes): " + path);

  Vocabulary vocab = Vocabulary::FromTokens(std::move(tokens));
  return {std::move(m), std::move(vocab)};
}

}  // namespace marginlm
