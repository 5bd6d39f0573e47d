#pragma once

#include <string>
#include <vector>

namespace combnls {

/// Entry point behind main(): dispatches a subcommand, writes its outputs
/// and a run manifest, and returns the process exit status.  `args` excludes
/// the program name.
int run(const std::vector<std::string>& args);

} // namespace combnls
