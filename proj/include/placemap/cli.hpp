#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace placemap::cli {

// Exit codes: 0 success, 1 usage, 2 input, 3 format/shape, 4 config or
// capability, 5 numeric, 6 evaluation, 7 unexpected internal failure.
inline constexpr int kExitUsage = 1;
inline constexpr int kExitInternal = 7;

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace placemap::cli
