#pragma once

namespace adaptrial {

// Command-line entry point. Returns the process exit code:
//   0 success, 1 usage/config error, 2 numerical or positivity error.
int cli_run(int argc, const char* const* argv);

}  // namespace adaptrial
