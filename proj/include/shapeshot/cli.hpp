#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace shapeshot {

enum ExitCode : int {
    kExitOk = 0,
    kExitFailure = 1,
    kExitUsage = 2,     // unknown subcommand or flag, missing required flag
    kExitConfig = 3,    // malformed or invalid config
    kExitIo = 4,        // missing or unwritable file
    kExitFormat = 5,    // corrupt checkpoint, dataset or report file
    kExitTraining = 6,  // non-finite loss or gradient
    kExitContract = 7,  // split overlap, undersized dataset and similar
};

// Evaluation worker count comes from this variable; default is the number of
// hardware threads.
inline constexpr const char* kWorkersEnv = "SHAPESHOT_WORKERS";

std::size_t worker_count();

// args excludes the program name.
int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace shapeshot
