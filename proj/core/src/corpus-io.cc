#include "marginlm/corpus-io.h"

#include <fstream>
#include <sstream>

#include "marginlm/common.h"

namespace marginlm {

Sentence SplitTokens(const std::string& line) {
  Sentence out;
  std::istringstream iss(line);
  std::string tok;
  while (iss >> tok) out.push_back(tok);
  return out;
}

std::vector<Sentence> ReadCorpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MarginlmError("cannot open corpus file: " + path);
  std::vector<Sentence> corpus;
  std::string line;
  while (std::getline(in, line)) {
    Sentence s = SplitTokens(line);
    if (!s.empty()) corpus.push_back(std::move(s));
  }
  return corpus;
}

void WriteCorpus(std::span<const Sentence> corpus, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw MarginlmError("cannot write corpus file: " + path);
  for (const auto& sentence : corpus) {
    for (std::size_t i = 0; i < sentence.size(); ++i) {
      if (i) out << ' ';
      out << sentence[i];
    }
    out << '\n';
  }
  if (!out) throw MarginlmError("write failed: " + path);
}

}  // namespace marginlm
