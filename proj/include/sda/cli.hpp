#pragma once

#include <iosfwd>

namespace sda {

inline constexpr const char* kVersion = "1.0.0";

/// Exit codes: 0 success, 1 data or runtime error, 2 usage error.
/// Errors are written to `err` as a single line `error: <kind>: <message>`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sda
