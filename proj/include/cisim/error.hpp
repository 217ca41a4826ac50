#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cisim {

enum class ErrorCode {
  CiPoint,
  NoConvergence,
  InvalidGrid,
  CiOnGrid,
  GridMismatch,
  NotConverged,
  GroupTooLarge,
  NoBarrier,
  NoInflection,
  SpectralRangeFail,
  TolUnreachable,
  ConfigError,
  InvalidArgument,
  IoError,
  NonHermitian,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace cisim
