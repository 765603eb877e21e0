#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace litefat::cli {

// Full command dispatch. Results go to `out`, progress and errors to `err`.
// Exit codes: 0 success, 1 usage error, 2 data/format error, 3 numeric
// failure.
int run_command(const std::vector<std::string>& args, std::ostream& out,
                std::ostream& err);

}  // namespace litefat::cli
