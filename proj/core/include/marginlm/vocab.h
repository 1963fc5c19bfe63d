// marginlm/vocab.h
//
// Token <-> id mapping with three reserved entries: 0 = BOS, 1 = EOS,
// 2 = UNK. Any out-of-vocabulary token encodes to UNK.

#ifndef MARGINLM_VOCAB_H_
#define MARGINLM_VOCAB_H_

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace marginlm {

class Vocabulary {
 public:
  static constexpr std::int32_t kBos = 0;
  static constexpr std::int32_t kEos = 1;
  static constexpr std::int32_t kUnk = 2;
  static constexpr std::int32_t kNumReserved = 3;

  static const char* BosToken();  // "<s>"
  static const char* EosToken();  // "</s>"
  static const char* UnkToken();  // "<unk>"

  // Reserved-only vocabulary.
  Vocabulary();

  // Keeps the (max_size - 3) most frequent corpus tokens after the three
  // reserved entries; frequency ties break by first occurrence in the
  // corpus. Corpus tokens spelled like a reserved token map to the
  // reserved id and are not ranked. Throws on an empty corpus or
  // max_size < 3.
  static Vocabulary Build(std::span<const std::vector<std::string>> corpus,
                          std::int32_t max_size);

  // Rebuilds from a full token list (checkpoint load). The first three
  // entries must be the reserved spellings and the rest must be distinct.
  static Vocabulary FromTokens(std::vector<std::string> tokens);

  std::int32_t size() const { return static_cast<std::int32_t>(tokens_.size()); }

  std::int32_t Encode(const std::string& token) const;
  const std::string& Decode(std::int32_t id) const;  // throws if out of range

  std::vector<std::int32_t> EncodeSentence(std::span<const std::string> tokens) const;

  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::int32_t> index_;
};

}  // namespace marginlm

#endif  // MARGINLM_VOCAB_H_
