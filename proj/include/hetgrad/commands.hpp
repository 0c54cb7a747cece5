#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hetgrad {

// Exit codes: 0 success, 1 numerical failure or failed verification, 2 usage or configuration error.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_command(int argc, char** argv);

}  // namespace hetgrad
