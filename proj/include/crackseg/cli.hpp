#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace crackseg {

/// Entry point of the command-line tool. `args` excludes the program name.
/// Returns 0 on success, 1 on runtime failure, 2 on usage errors.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace crackseg
