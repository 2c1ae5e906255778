#include "mopar/error.hpp"

namespace mopar {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::config: return "config";
    case ErrorCode::io: return "io";
    case ErrorCode::precondition: return "precondition";
    case ErrorCode::invalid_resolution: return "invalid-resolution";
    case ErrorCode::trace_violation: return "trace-violation";
    case ErrorCode::structure_violation: return "structure-violation";
    case ErrorCode::domain: return "domain";
    case ErrorCode::divergent_modular: return "divergent-modular";
    case ErrorCode::unbounded_norm: return "unbounded-norm";
    case ErrorCode::conjugate_infinite: return "conjugate-infinite";
    case ErrorCode::assembly_nan: return "assembly-nan";
    case ErrorCode::nonconvergence: return "nonconvergence";
    case ErrorCode::oracle_failure: return "oracle-failure";
    case ErrorCode::probe_failure: return "probe-failure";
  }
  return "unknown";
}

}  // namespace mopar
