#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace xdloc {

enum class ErrorCode {
  kInvalidArgument,
  kEmptyLibrary,
  kDimensionMismatch,
  kFormat,
  kTruncated,
  kFingerprintMismatch,
  kConfigMismatch,
  kDuplicateId,
  kNotFound,
  kIo,
};

std::string_view error_code_name(ErrorCode code);

// All failures raised by the library carry a code so the CLI can map them to
// exit statuses and machine-parsable messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace xdloc
