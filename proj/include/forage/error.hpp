#pragma once

#include <stdexcept>
#include <string>

namespace forage {

enum class ErrorCode {
  kInvalidArgument = 1,
  kParse,
  kStructure,
  kLookup,
  kContract,
  kGeneration,
  kNumerical,
  kProtocol,
  kIo,
};

const char* to_string(ErrorCode code);

// Every failure raised by the library carries one of the codes above so the
// C boundary can map it without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t offset, const std::string& what)
      : Error(ErrorCode::kParse, what + " at offset " + std::to_string(offset)),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool ok, ErrorCode code, const std::string& what) {
  if (!ok) fail(code, what);
}

}  // namespace forage
