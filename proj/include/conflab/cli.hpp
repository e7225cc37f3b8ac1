#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace conflab::cli {

// Exit codes: 0 success, 1 validation/usage error, 2 verification failure.
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace conflab::cli
