#pragma once

#include <stdexcept>
#include <string>

namespace adaptui {

// Coarse classification used by the service layer to pick a status code.
enum class ErrorCode {
  kInvalidArgument,
  kNotFound,
  kConflict,
  kGone,
  kFailedPrecondition,
  kInternal,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

const char* to_string(ErrorCode code) noexcept;

}  // namespace adaptui
