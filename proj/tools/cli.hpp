#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace trilabel::cli {

/// Runs the command line; returns the process exit status: 0 success,
/// 1 usage or configuration error, 2 malformed data, 3 numerical failure.
int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
        std::ostream& err);

}  // namespace trilabel::cli
