#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace domar {

/// Broad failure classes. Each maps onto one CLI exit code.
enum class ErrorKind {
  kConfig,        // bad config key, preset, or flag value
  kSchema,        // missing mapped column, unparsable cell
  kIntegrity,     // duplicate keys and similar dataset-level violations
  kState,         // operation applied in the wrong dataset state
  kParameter,     // parameter outside its admissible range
  kDomain,        // numeric input outside a formula's domain
  kDegenerate,    // empty or zero-mass aggregation
  kIo,            // file not found / not writable
  kEstimation,    // estimator could not produce a usable estimate
  kModeMismatch,  // corollary mode precondition violated
  kVerification,  // identity check failed
};

std::string_view to_string(ErrorKind kind);

/// 0 success, 2 config, 3 data, 4 estimation, 5 verification.
int exit_code(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

}  // namespace domar
