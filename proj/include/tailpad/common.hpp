#pragma once

#include <stdexcept>
#include <string>

namespace tailpad {

// Error taxonomy, mapped to process exit codes by the CLI:
//   ConfigError   -> 1 (parameter validation failed)
//   ParseError    -> 2 (malformed input file or flag value)
//   InternalError -> 3 (internal invariant breached; always a bug)
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

inline void require_config(bool cond, const std::string& msg) {
  if (!cond) throw ConfigError(msg);
}

// Invariant check that stays on in release builds: these guard probability
// mass bookkeeping, where silent corruption would invalidate the privacy
// guarantee rather than just crash.
inline void check_internal(bool cond, const std::string& msg) {
  if (!cond) throw InternalError(msg);
}

}  // namespace tailpad
