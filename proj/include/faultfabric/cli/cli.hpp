#pragma once

#include <iosfwd>

namespace faultfabric::cli {

enum ExitCode { kOk = 0, kApiError = 1, kUsageError = 2 };

// The `faultfabric` command. Writes results to `out` and diagnostics to
// `err`; returns 0 on success, 1 on an API error, 2 on a usage error.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace faultfabric::cli
