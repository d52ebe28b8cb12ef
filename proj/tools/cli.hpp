#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace iadet::cli {

/// Entry point of the iadet command. args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace iadet::cli
