#include "marginlm/vocab.h"

#include <algorithm>

#include "marginlm/common.h"

namespace marginlm {

const char* Vocabulary::BosToken() { return "<s>"; }
const char* Vocabulary::EosToken() { return "</s>"; }
const char* Vocabulary::UnkToken() { return "<unk>"; }

Vocabulary::Vocabulary() {
  tokens_ = {BosToken(), EosToken(), UnkToken()};
  for (std::int32_t i = 0; i < kNumReserved; ++i) index_[tokens_[i]] = i;
}

Vocabulary Vocabulary::Build(std::span<const std::vector<std::string>> corpus,
                             std::int32_t max_size) {
  if (corpus.empty()) throw MarginlmError("build_vocab: empty corpus");
  if (max_size < kNumReserved)
    throw MarginlmError("build_vocab: max_size must be at least 3");

  struct Entry {
    std::int64_t count = 0;
    std::int64_t first_seen = 0;
  };
  std::unordered_map<std::string, Entry> counts;
  std::int64_t pos = 0;
  for (const auto& sentence : corpus) {
    for (const auto& tok : sentence) {
      auto [it, inserted] = counts.try_emplace(tok);
      if (inserted) it->second.first_seen = pos;
      ++it->second.count;
      ++pos;
    }
  }
  if (pos == 0) throw MarginlmError("build_vocab: empty corpus");

  Vocabulary vocab;
  counts.erase(BosToken());
  counts.erase(EosToken());
  counts.erase(UnkToken());

  std::vector<std::pair<std::string, Entry>> ranked(counts.begin(), counts.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second.count != b.second.count) return a.second.count > b.second.count;
    return a.second.first_seen < b.second.first_seen;
  });

  std::int32_t budget = max_size - kNumReserved;
  for (const auto& [tok, entry] : ranked) {
    if (budget == 0) break;
    vocab.index_[tok] = static_cast<std::int32_t>(vocab.tokens_.size());
    vocab.tokens_.push_back(tok);
    --budget;
  }
  return vocab;
}

Vocabulary Vocabulary::FromTokens(std::vector<std::string> tokens) {
  if (tokens.size() < kNumReserved ||
      tokens[0] != BosToken() || tokens[1] != EosToken() || tokens[2] != UnkToken())
    throw MarginlmError("vocabulary: first three tokens must be <s> </s> <unk>");
  Vocabulary vocab;
  vocab.tokens_ = std::move(tokens);
  vocab.index_.clear();
  for (std::size_t i = 0; i < vocab.tokens_.size(); ++i) {
    auto [it, inserted] = vocab.index_.emplace(vocab.tokens_[i], static_cast<std::int32_t>(i));
    if (!inserted) throw MarginlmError("vocabulary: duplicate token '" + vocab.tokens_[i] + "'");
  }
  return vocab;
}

std::int32_t Vocabulary::Encode(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::Decode(std::int32_t id) const {
  if (id < 0 || id >= size())
    throw MarginlmError("vocabulary: id " + std::to_string(id) + " out of range");
  return tokens_[id];
}

std::vector<std::int32_t> Vocabulary::EncodeSentence(
    std::span<const std::string> tokens) const {
  std::vector<std::int32_t> ids;
  ids.reserve(tokens.size());
  for (const auto& tok : tokens) ids.push_back(Encode(tok));
  return ids;
}

}  // namespace marginlm
