#pragma once

#include <string>
#include <vector>

namespace gradcodec::cli {

// Runs one command (argv without the program name).  Returns 0 on success,
// 1 on domain/runtime errors, 2 on usage errors.
int run(const std::vector<std::string>& args);

}  // namespace gradcodec::cli
