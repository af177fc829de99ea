#include "domar/error.hpp"

namespace domar {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig: return "config error";
    case ErrorKind::kSchema: return "schema error";
    case ErrorKind::kIntegrity: return "integrity error";
    case ErrorKind::kState: return "state error";
    case ErrorKind::kParameter: return "parameter error";
    case ErrorKind::kDomain: return "domain error";
    case ErrorKind::kDegenerate: return "degenerate input";
    case ErrorKind::kIo: return "io error";
    case ErrorKind::kEstimation: return "estimation error";
    case ErrorKind::kModeMismatch: return "mode mismatch";
    case ErrorKind::kVerification: return "verification failure";
  }
  return "error";
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig:
    case ErrorKind::kParameter:
      return 2;
    case ErrorKind::kEstimation:
      return 4;
    case ErrorKind::kVerification:
      return 5;
    default:
      return 3;
  }
}

void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace domar
