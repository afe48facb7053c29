#include "forage/error.hpp"

namespace forage {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid argument";
    case ErrorCode::kParse: return "parse error";
    case ErrorCode::kStructure: return "structural error";
    case ErrorCode::kLookup: return "lookup error";
    case ErrorCode::kContract: return "contract violation";
    case ErrorCode::kGeneration: return "generation error";
    case ErrorCode::kNumerical: return "numerical error";
    case ErrorCode::kProtocol: return "protocol error";
    case ErrorCode::kIo: return "i/o error";
  }
  return "unknown error";
}

}  // namespace forage
