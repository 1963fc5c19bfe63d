// marginlm/corpus-io.h
//
// Corpus files are UTF-8 plain text, one whitespace-tokenized sentence
// per line. Blank lines are skipped.

#ifndef MARGINLM_CORPUS_IO_H_
#define MARGINLM_CORPUS_IO_H_

#include <span>
#include <string>
#include <vector>

namespace marginlm {

using Sentence = std::vector<std::string>;

std::vector<Sentence> ReadCorpus(const std::string& path);
void WriteCorpus(std::span<const Sentence> corpus, const std::string& path);

Sentence SplitTokens(const std::string& line);

}  // namespace marginlm

#endif  // MARGINLM_CORPUS_IO_H_
