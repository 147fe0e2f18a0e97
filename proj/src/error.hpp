#ifndef HOMCTX_ERROR_HPP
#define HOMCTX_ERROR_HPP

#include <stdexcept>
#include <string>

namespace homctx {

enum class ErrorCode {
  invalid_argument = 1,
  io = 2,
  schema = 3,
  fingerprint_mismatch = 4,
  numeric = 5,
  cap_exceeded = 6,
  internal = 7,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace homctx

#endif
