// marginlm/common.h
//
// Shared basics: version string, error type, numeric formatting.

#ifndef MARGINLM_COMMON_H_
#define MARGINLM_COMMON_H_

#include <charconv>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace marginlm {

inline constexpr const char* kVersion = "0.1.0";

// All contract violations (bad arguments, malformed files, numeric
// blow-ups) surface as MarginlmError; the CLI turns them into a
// diagnostic plus a nonzero exit.
class MarginlmError : public std::runtime_error {
 public:
  explicit MarginlmError(const std::string& what) : std::runtime_error(what) {}
};

// Shortest decimal form that parses back to the same double. Used for
// every float we serialize, so emitted files are byte-stable and
// round-trip exactly.
inline std::string FormatDouble(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace marginlm

#endif  // MARGINLM_COMMON_H_
