#pragma once

#include "mopar/error.hpp"

#include <iosfwd>

namespace mopar {

/// Exit codes: 0 success, 1 a contracted verdict failed, 2 config, validation
/// or I/O error, 3 solver failure.
int exit_code(ErrorCode code) noexcept;

/// Entry point of the mopar tool. Flags: --config PATH, --mode MODE, --out DIR,
/// --seed INT, --quiet. Flags override the config file.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mopar
