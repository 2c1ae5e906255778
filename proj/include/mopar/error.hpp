#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mopar {

/// Failure categories raised by the library. The CLI maps them onto exit codes.
enum class ErrorCode {
  config,
  io,
  precondition,
  invalid_resolution,
  trace_violation,
  structure_violation,
  domain,
  divergent_modular,
  unbounded_norm,
  conjugate_infinite,
  assembly_nan,
  nonconvergence,
  oracle_failure,
  probe_failure,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

inline void require(bool condition, const std::string& what,
                    ErrorCode code = ErrorCode::precondition) {
  if (!condition) {
    throw Error(code, what);
  }
}

}  // namespace mopar
