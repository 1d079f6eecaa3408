#pragma once

namespace soprag {

/// Entry point behind the `soprag` binary; exposed for testing.
/// Exit codes: 0 success, 1 usage error, 2 runtime error.
int cli_main(int argc, const char* const* argv);

} // namespace soprag
