#pragma once

namespace mcvar {

// Entry point of the `mcvar` tool. Exit codes: 0 success, 1 usage error,
// 2 runtime error.
int cli_main(int argc, const char* const* argv);

}  // namespace mcvar
