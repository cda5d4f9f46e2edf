#pragma once

#include <stdexcept>
#include <string>

namespace relserre {

// Error categories, aligned with the CLI exit codes:
//   2 parse, 3 inconsistency, 4 ambiguity, 5 resource cap.
enum class ErrorKind {
    Parse = 2,
    Inconsistency = 3,
    Ambiguity = 4,
    ResourceCap = 5,
};

class Error : public std::runtime_error {
  public:
    Error(ErrorKind kind, const std::string& msg)
        : std::runtime_error(msg), kind_(kind) {}

    ErrorKind kind() const { return kind_; }
    int exit_code() const { return static_cast<int>(kind_); }

  private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) {
    throw Error(kind, msg);
}

inline void require(bool cond, ErrorKind kind, const std::string& msg) {
    if (!cond) fail(kind, msg);
}

}  // namespace relserre
