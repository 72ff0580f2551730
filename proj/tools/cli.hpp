#pragma once

#include <iosfwd>

namespace nxai::cli {

enum ExitCode : int { kOk = 0, kInternal = 1, kUsage = 2, kNumerical = 3 };

/// Runs the nxai command line. Never throws; failures map to exit codes
/// (2 usage or configuration, 3 numerical failure).
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace nxai::cli
