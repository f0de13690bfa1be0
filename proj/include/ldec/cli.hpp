#pragma once
// Command-line front end. args excludes the program name. run_cli returns the process exit code:
// 0 success, 1 data or validation error ("error: ..." on err), 2 usage error.

#include <ostream>
#include <string>
#include <vector>

namespace ldec {

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ldec
