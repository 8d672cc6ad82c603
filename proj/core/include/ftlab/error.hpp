#pragma once

#include <stdexcept>
#include <string>

namespace ftlab {

// All rejected preconditions and malformed inputs surface as ftlab::Error.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

[[noreturn]] inline void fail(const std::string& msg) { throw Error(msg); }

inline void require(bool ok, const std::string& msg) {
  if (!ok) throw Error(msg);
}

// Hot-path variant: the message expression is only evaluated on failure.
#define FTLAB_REQUIRE(cond, msg) \
  do {                           \
    if (!(cond)) ::ftlab::fail(msg); \
  } while (0)

}  // namespace ftlab
