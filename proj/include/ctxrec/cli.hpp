#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ctxrec {

// Command-line front end. `args` excludes the program name. Returns 0 on
// success, 1 on user errors (bad arguments, unknown ids, malformed files)
// and 2 on internal errors; failures print one diagnostic line on `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ctxrec
