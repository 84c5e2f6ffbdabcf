#pragma once

#include <iosfwd>

namespace team::cli {

/// Exit codes of the `team` tool.
enum ExitCode : int { kOk = 0, kInternal = 1, kUserError = 2, kAssertion = 3 };

/// Maps an error class name to its exit code.
int exit_code_for(const char* error_kind);

/// Entry point of the `team` tool. Summaries go to `out`; progress and the
/// single `error: class=<kind> message=<text>` line go to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace team::cli
