// marginlm/checkpoint.h
//
// Binary checkpoint format, bit-exact:
//   magic "MLM1"
//   V, E, H                     uint32 little-endian
//   vocabulary                  V strings, each uint32-LE length + UTF-8 bytes
//   emb, u, v_rec, w, b         row-major float64 little-endian
// Loading validates the magic, dimensions, and total size; a truncated or
// malformed file raises a format error and returns nothing partial.

#ifndef MARGINLM_CHECKPOINT_H_
#define MARGINLM_CHECKPOINT_H_

#include <string>
#include <utility>

#include "marginlm/model.h"
#include "marginlm/vocab.h"

namespace marginlm {

void SaveCheckpoint(const ModelParams& model, const Vocabulary& vocab,
                    const std::string& path);

std::pair<ModelParams, Vocabulary> LoadCheckpoint(const std::string& path);

}  // namespace marginlm

#endif  // MARGINLM_CHECKPOINT_H_
